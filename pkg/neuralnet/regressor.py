"""
Per-mode CNN property regressor: image -> (sigma_max, eps_lim).

Targets are min-max normalized per quantity over the training split; the
fitted Normalizer travels with the checkpoint and is reused by the search
scoring.
"""
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    CNN_BATCH_SHEAR, CNN_BATCH_TENSILE, CNN_ITERATIONS, CNN_LEARNING_RATE, CNN_SPLIT,
)
from core.errors import ConfigError, DimensionError, UndefinedMetricError
from core.labeling import one_hot
from core.types import DeformationMode, MechanicalProps, MicrostructureImage
from neuralnet.network import build_regressor
from neuralnet.optim import Adam

logger = logging.getLogger(__name__)

QUANTITIES = ("sigma_max", "eps_lim")
TRACE_COLUMNS = ["iteration", "loss", "val_mse"]


@dataclass
class Normalizer:
    """Min-max scaling of (sigma_max, eps_lim) for one deformation mode."""
    mode: DeformationMode
    low: np.ndarray | None = None
    high: np.ndarray | None = None

    def __post_init__(self):
        self.mode = DeformationMode.parse(self.mode)

    @property
    def fitted(self):
        return self.low is not None and self.high is not None

    def fit(self, targets):
        """
        Record per-column min and max. A constant column (max == min) is
        accepted with a warning; its span is taken as 1, so it normalizes to 0.
        """
        targets = np.asarray(targets, dtype=float)
        if targets.ndim != 2 or targets.shape[1] != 2 or targets.shape[0] == 0:
            raise DimensionError(f"targets must be (n, 2), got {targets.shape}")
        self.low = targets.min(axis=0)
        self.high = targets.max(axis=0)
        if np.any(self.high <= self.low):
            logger.warning("%s: constant training target, span treated as 1", self.mode.name)
        return self

    @property
    def span(self):
        span = self.high - self.low
        return np.where(span > 0, span, 1.0)

    def _require(self):
        if not self.fitted:
            raise ConfigError(f"normalizer for {self.mode.name} is not fitted")

    def normalize(self, targets):
        self._require()
        return (np.asarray(targets, dtype=float) - self.low) / self.span

    def denormalize(self, values):
        self._require()
        return np.asarray(values, dtype=float) * self.span + self.low

    def to_dict(self):
        self._require()
        return {
            "mode": self.mode.name,
            "low": [float(v) for v in self.low],
            "high": [float(v) for v in self.high],
        }

    @classmethod
    def from_dict(cls, data):
        if not data:
            raise ConfigError("checkpoint carries no normalizer")
        return cls(data["mode"], np.array(data["low"], dtype=float), np.array(data["high"], dtype=float))


@dataclass(frozen=True)
class CnnConfig:
    iterations: int = CNN_ITERATIONS
    learning_rate: float = CNN_LEARNING_RATE
    split: tuple = CNN_SPLIT
    batch_tensile: int = CNN_BATCH_TENSILE
    batch_shear: int = CNN_BATCH_SHEAR
    hidden: int = 64

    def batch_size(self, mode):
        return self.batch_tensile if DeformationMode.parse(mode).is_tensile else self.batch_shear


@dataclass
class CnnResult:
    regressor: object
    normalizer: Normalizer
    trace: pd.DataFrame
    optimizer: Adam
    split: dict = field(default_factory=dict)


def split_indices(n, sizes, rng):
    """Seeded shuffle cut into train/val/test index arrays."""
    n_train, n_val, n_test = (int(s) for s in sizes)
    if min(n_train, n_val, n_test) < 1:
        raise ConfigError(f"every split must be non-empty, got {sizes}")
    if n_train + n_val + n_test > n:
        raise ConfigError(f"split {sizes} needs {n_train + n_val + n_test} samples, dataset has {n}")
    order = rng.permutation(n)
    return {
        "train": np.sort(order[:n_train]),
        "val": np.sort(order[n_train:n_train + n_val]),
        "test": np.sort(order[n_train + n_val:n_train + n_val + n_test]),
    }


def _as_tensor(images):
    if isinstance(images, MicrostructureImage):
        return one_hot(images)[None]
    if isinstance(images, (list, tuple)) and images and isinstance(images[0], MicrostructureImage):
        return np.stack([one_hot(im) for im in images])
    return np.asarray(images, dtype=np.float64)


def _mse(regressor, x, y):
    pred = regressor.forward(x, cache=False)
    return float(np.mean((pred - y) ** 2))


def train_cnn(images, targets, mode, config=None, rng=None, split=None):
    """
    Fit one regressor for `mode`.

    images: one-hot (N, H, W, 3) or a list of MicrostructureImage.
    targets: (N, 2) physical (sigma_max [MPa], eps_lim).
    split: optional {"train", "val", "test"} index arrays; drawn from rng otherwise.
    """
    config = config or CnnConfig()
    mode = DeformationMode.parse(mode)
    x = _as_tensor(images)
    y = np.asarray(targets, dtype=float)
    if x.ndim != 4 or x.shape[-1] != 3:
        raise DimensionError(f"images must be (N, H, W, 3), got {x.shape}")
    if y.shape != (x.shape[0], 2):
        raise DimensionError(f"targets must be ({x.shape[0]}, 2), got {y.shape}")
    if split is None:
        split = split_indices(x.shape[0], config.split, rng.substream("split"))
    for name in ("train", "val", "test"):
        if len(split.get(name, ())) == 0:
            raise ConfigError(f"{name} split is empty")

    train, val = np.asarray(split["train"]), np.asarray(split["val"])
    normalizer = Normalizer(mode).fit(y[train])
    y_norm = normalizer.normalize(y)

    regressor = build_regressor(rng.substream("init"), x.shape[1], config.hidden)
    optimizer = Adam(config.learning_rate)
    batch = min(config.batch_size(mode), len(train))
    order_rng = rng.substream("batches")
    steps_per_epoch = max(1, len(train) // batch)

    rows = []
    order = order_rng.permutation(train)
    cursor = 0
    for i in range(config.iterations):
        if cursor + batch > len(order):
            order = order_rng.permutation(train)
            cursor = 0
        idx = order[cursor:cursor + batch]
        cursor += batch

        pred = regressor.forward(x[idx])
        diff = pred - y_norm[idx]
        loss = float(np.mean(diff ** 2))
        regressor.backward(2.0 * diff / diff.size)
        optimizer.step(regressor.parameters(), regressor.gradients())

        val_mse = np.nan
        if (i + 1) % steps_per_epoch == 0 or i + 1 == config.iterations:
            val_mse = _mse(regressor, x[val], y_norm[val])
            logger.info("%s epoch %d: train %.3e  val %.3e", mode.name, (i + 1) // steps_per_epoch, loss, val_mse)
        rows.append((i, loss, val_mse))

    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    return CnnResult(regressor, normalizer, trace, optimizer, {k: np.asarray(v) for k, v in split.items()})


def predict_batch(regressor, normalizer, images):
    """Physical (n, 2) predictions."""
    x = _as_tensor(images)
    expected = regressor.input_shape
    if x.ndim != 4 or x.shape[1:] != expected:
        raise DimensionError(f"regressor expects (n,) + {expected}, got {x.shape}")
    return normalizer.denormalize(regressor.forward(x, cache=False))


def predict_props(regressor, normalizer, image):
    sigma_max, eps_lim = predict_batch(regressor, normalizer, image)[0]
    return MechanicalProps(sigma_max, eps_lim, normalizer.mode)


def r_squared(predictions, targets):
    """1 - SS_res / SS_tot on physical units."""
    pred = np.asarray(predictions, dtype=float).ravel()
    true = np.asarray(targets, dtype=float).ravel()
    if pred.shape != true.shape:
        raise DimensionError(f"r_squared length mismatch: {pred.size} vs {true.size}")
    if true.size < 2:
        raise ConfigError("r_squared needs at least two samples")
    ss_tot = float(np.sum((true - true.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("R^2 undefined for constant targets")
    ss_res = float(np.sum((true - pred) ** 2))
    return 1.0 - ss_res / ss_tot
