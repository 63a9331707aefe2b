"""
Strength x ductility scoring of generated microstructures.

A SurrogateModels bundle couples the generator with one regressor and one
fitted Normalizer per deformation mode. The search code only calls
generate(), generate_batch(), predict() and reads `normalizers`, so tests
can substitute lightweight stand-ins.
"""
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import CHECKPOINT_SUFFIX
from core.errors import ConfigError, MissingArtifactError
from core.types import DeformationMode, MechanicalProps
from neuralnet.checkpoint import load_checkpoint
from neuralnet.regressor import Normalizer, predict_batch
from neuralnet.wgan import generate, generate_batch

logger = logging.getLogger(__name__)

MODES = tuple(DeformationMode)
CHUNK = 256


def regressor_filename(mode):
    return f"regressor_{DeformationMode.parse(mode).name}{CHECKPOINT_SUFFIX}"


@dataclass
class SurrogateModels:
    generator: object
    regressors: dict
    normalizers: dict

    def generate(self, z):
        return generate(self.generator, np.asarray(z, dtype=float))

    def generate_batch(self, zs):
        return generate_batch(self.generator, zs)

    def predict(self, images, mode):
        """(n, 2) physical (sigma_max, eps_lim) for one mode."""
        mode = DeformationMode.parse(mode)
        return predict_batch(self.regressors[mode], self.normalizers[mode], images)


def load_models(generator_path, regressor_dir):
    """Generator checkpoint plus regressor_<Mode>.mfnn for every mode."""
    generator = load_checkpoint(generator_path).network
    regressors, normalizers = {}, {}
    missing = []
    for mode in MODES:
        path = Path(regressor_dir) / regressor_filename(mode)
        if not path.exists():
            missing.append(path.name)
            continue
        ckpt = load_checkpoint(path)
        regressors[mode] = ckpt.network
        normalizers[mode] = Normalizer.from_dict(ckpt.normalizer)
    if missing:
        raise MissingArtifactError(f"regressor checkpoints missing: {', '.join(missing)}")
    return SurrogateModels(generator, regressors, normalizers)


def normalized_product(values, normalizer):
    """Vectorised score on physical (n, 2) predictions."""
    if normalizer is None or not normalizer.fitted:
        raise ConfigError("score needs a fitted normalizer")
    scaled = np.maximum(normalizer.normalize(np.atleast_2d(values)), 0.0)
    return scaled[:, 0] * scaled[:, 1]


def score(props, normalizer):
    """sigma_max_bar * eps_lim_bar, each factor clamped at 0."""
    if normalizer is None or not normalizer.fitted:
        raise ConfigError(f"no fitted normalizer for {props.mode.name}")
    if normalizer.mode is not props.mode:
        raise ConfigError(f"normalizer is for {normalizer.mode.name}, props are {props.mode.name}")
    return float(normalized_product([[props.sigma_max, props.eps_lim]], normalizer)[0])


def _normalizer_for(models, mode):
    normalizer = models.normalizers.get(mode)
    if normalizer is None:
        raise ConfigError(f"no fitted normalizer for {mode.name}")
    return normalizer


def evaluate_latent(z, models):
    """(image, scores[4] in mode-code order, best mode). Ties go to the lower mode code."""
    image = models.generate(z)
    scores = np.empty(len(MODES))
    for k, mode in enumerate(MODES):
        values = models.predict([image], mode)
        scores[k] = normalized_product(values, _normalizer_for(models, mode))[0]
    return image, scores, MODES[int(np.argmax(scores))]


def predicted_props(image, models):
    """MechanicalProps per mode for one image."""
    out = {}
    for mode in MODES:
        sigma_max, eps_lim = models.predict([image], mode)[0]
        out[mode] = MechanicalProps(sigma_max, eps_lim, mode)
    return out


def score_batch(zs, models, chunk=CHUNK):
    """Scores (n, 4) and physical predictions (n, 4, 2) for latent rows zs."""
    zs = np.asarray(zs, dtype=float)
    scores = np.empty((len(zs), len(MODES)))
    props = np.empty((len(zs), len(MODES), 2))
    for start in range(0, len(zs), chunk):
        images = models.generate_batch(zs[start:start + chunk])
        for k, mode in enumerate(MODES):
            values = np.asarray(models.predict(images, mode), dtype=float)
            props[start:start + len(images), k] = values
            scores[start:start + len(images), k] = normalized_product(values, _normalizer_for(models, mode))
    return scores, props
