"""
Domain value types passed between every stage.

MicrostructureImage is the lingua franca: a per-pixel label grid with
0 = ferrite, 1 = martensite variant1, 2 = martensite variant2.
Row index runs along +y, column index along +x.
"""
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from core.errors import ConfigError, DimensionError

FERRITE = 0
VARIANT1 = 1
VARIANT2 = 2
LABEL_LEGEND = {FERRITE: "ferrite", VARIANT1: "variant1", VARIANT2: "variant2"}


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class MicrostructureImage:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.uint8, copy=True)
        if labels.ndim != 2:
            raise DimensionError(f"labels must be 2-D, got shape {labels.shape}")
        h, w = labels.shape
        if not (_is_power_of_two(h) and _is_power_of_two(w)):
            raise DimensionError(f"image size must be a power of two, got {h}x{w}")
        if labels.size and labels.max() > VARIANT2:
            raise ConfigError(f"invalid pixel label {int(labels.max())}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MicrostructureImage):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.labels.shape, self.labels.tobytes()))

    @classmethod
    def uniform(cls, label, size=32):
        return cls(np.full((size, size), label, dtype=np.uint8))


class DeformationMode(IntEnum):
    """Stable integer codes used in every file format."""
    TensileX = 0
    TensileY = 1
    ShearX = 2
    ShearY = 3

    @property
    def is_tensile(self):
        return self in (DeformationMode.TensileX, DeformationMode.TensileY)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            for mode in cls:
                if mode.name.lower() == value.lower():
                    return mode
            raise ConfigError(f"unknown deformation mode '{value}'")
        try:
            return cls(int(value))
        except ValueError:
            raise ConfigError(f"unknown deformation mode code {value}") from None


@dataclass(frozen=True)
class MechanicalProps:
    """(sigma_max, eps_lim) for one mode.

    When no Considere point is reached, necking_detected is False and
    eps_lim holds the last strain reached (a lower bound).
    """
    sigma_max: float
    eps_lim: float
    mode: DeformationMode
    necking_detected: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", DeformationMode.parse(self.mode))
        for name in ("sigma_max", "eps_lim"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    def as_row(self):
        return {
            "mode_code": int(self.mode),
            "sigma_max_MPa": self.sigma_max,
            "eps_lim": self.eps_lim,
            "necking_detected": bool(self.necking_detected),
        }
