"""
Random search over the latent box.

Each iteration draws z ~ U[0, 100]^2, scores the generated image under all
four modes and keeps the best (image, mode, score). The incumbent only moves
on a strict improvement, so the earliest of tied candidates wins.
"""
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import GAN_LATENT_DIM, GAN_LATENT_HIGH, GAN_LATENT_LOW
from core.errors import ConfigError
from search.scoring import MODES, score_batch

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "z0", "z1", "score_mode0", "score_mode1", "score_mode2",
                 "score_mode3", "best_so_far", "best_mode"]


@dataclass
class SearchResult:
    best_image: object
    best_mode: object
    best_score: float
    best_z: np.ndarray
    trace: pd.DataFrame
    props: np.ndarray          # (n, 4, 2) predicted (sigma_max, eps_lim) per iteration and mode

    @property
    def running_best(self):
        return self.trace["best_so_far"].to_numpy()

    def summary(self):
        return {
            "best_mode": self.best_mode.name,
            "best_mode_code": int(self.best_mode),
            "best_score": self.best_score,
            "best_z": [float(v) for v in self.best_z],
            "iterations": len(self.trace),
        }


def draw_latent(rng, n):
    return rng.uniform(GAN_LATENT_LOW, GAN_LATENT_HIGH, size=(n, GAN_LATENT_DIM))


def incumbents(scores):
    """
    Running incumbent over per-iteration (n, 4) scores.
    Returns (best_so_far, best_mode_code, best_iteration) arrays.
    """
    per_iter_mode = np.argmax(scores, axis=1)
    per_iter_best = scores[np.arange(len(scores)), per_iter_mode]
    best_so_far = np.empty(len(scores))
    best_mode = np.empty(len(scores), dtype=int)
    best_iter = np.empty(len(scores), dtype=int)
    current, mode, at = -np.inf, -1, -1
    for i, value in enumerate(per_iter_best):
        if value > current:
            current, mode, at = value, per_iter_mode[i], i
        best_so_far[i], best_mode[i], best_iter[i] = current, mode, at
    return best_so_far, best_mode, best_iter


def search_points(zs, models):
    """Score a fixed list of latent points and return the SearchResult."""
    zs = np.asarray(zs, dtype=float)
    if zs.ndim != 2 or len(zs) == 0:
        raise ConfigError("search needs at least one latent point")
    scores, props = score_batch(zs, models)
    best_so_far, best_mode, best_iter = incumbents(scores)

    trace = pd.DataFrame({
        "iteration": np.arange(len(zs)),
        "z0": zs[:, 0],
        "z1": zs[:, 1],
        **{f"score_mode{k}": scores[:, k] for k in range(len(MODES))},
        "best_so_far": best_so_far,
        "best_mode": best_mode,
    }, columns=TRACE_COLUMNS)

    winner = int(best_iter[-1])
    best_z = zs[winner].copy()
    return SearchResult(
        best_image=models.generate(best_z),
        best_mode=MODES[int(best_mode[-1])],
        best_score=float(best_so_far[-1]),
        best_z=best_z,
        trace=trace,
        props=props,
    )


def random_search(n_iter, models, rng):
    if n_iter < 1:
        raise ConfigError(f"n_iter must be >= 1, got {n_iter}")
    result = search_points(draw_latent(rng, n_iter), models)
    logger.info("random search (%d): best %.4f under %s at z = (%.2f, %.2f)",
                n_iter, result.best_score, result.best_mode.name, *result.best_z)
    return result
