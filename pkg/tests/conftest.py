"""
Shared fixtures. Puts the repo root on sys.path so tests import packages
the same way run.py does.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.types import FERRITE, VARIANT1, VARIANT2, MicrostructureImage


@pytest.fixture
def checkerboard():
    """32x32 ferrite / variant1 checkerboard."""
    ii, jj = np.indices((32, 32))
    return MicrostructureImage(((ii + jj) % 2).astype(np.uint8) * VARIANT1)


@pytest.fixture
def random_image():
    def make(size=32, seed=0):
        rng = np.random.default_rng(seed)
        return MicrostructureImage(rng.integers(0, 3, size=(size, size)).astype(np.uint8))
    return make


def band_image(size, rows, label=VARIANT1):
    """Horizontal martensite band covering the first `rows` rows."""
    labels = np.full((size, size), FERRITE, dtype=np.uint8)
    labels[:rows] = label
    return MicrostructureImage(labels)


@pytest.fixture
def band():
    return band_image


@pytest.fixture
def two_phase_8():
    labels = np.zeros((8, 8), dtype=np.uint8)
    labels[2:5, 1:6] = VARIANT1
    labels[5:7, 3:8] = VARIANT2
    return MicrostructureImage(labels)


# --- Surrogate stand-ins for search tests ---

class StubModels:
    """
    Duck-typed SurrogateModels: the "image" is the latent vector itself and
    each mode's prediction is response(zs, mode_code) -> (n, 2). Normalizers
    are identity so physical and normalized values coincide.
    """

    def __init__(self, response):
        from core.types import DeformationMode
        from neuralnet.regressor import Normalizer
        self.response = response
        self.normalizers = {
            mode: Normalizer(mode, np.zeros(2), np.ones(2)) for mode in DeformationMode
        }
        self.calls = 0

    def generate(self, z):
        return np.asarray(z, dtype=float)

    def generate_batch(self, zs):
        return np.atleast_2d(np.asarray(zs, dtype=float))

    def predict(self, images, mode):
        self.calls += 1
        zs = np.atleast_2d(np.asarray(images, dtype=float))
        return np.asarray(self.response(zs, int(mode)), dtype=float)


def quadratic_response(zs, mode):
    """Peak score 1 at z = (50, 50); mode k scaled by (7 + k) / 10."""
    peak = 1.0 - ((zs[:, 0] - 50.0) ** 2 + (zs[:, 1] - 50.0) ** 2) / 5000.0
    return np.column_stack([peak * (7 + mode) / 10.0, np.ones(len(zs))])


@pytest.fixture
def quadratic_models():
    return StubModels(quadratic_response)


@pytest.fixture
def constant_models():
    def make(values):
        return StubModels(lambda zs, mode: np.column_stack([
            np.full(len(zs), values[mode]), np.ones(len(zs)),
        ]))
    return make
