"""
Space-filling plans, the random vs space-filling comparison, and score heatmaps.

For a square count n = k^2 the plan is the k x k grid of cell centres. Other
counts use a Latin hypercube (scipy qmc); among LHS_CANDIDATES seeded draws the
one with the largest minimum pairwise distance is kept.
"""
import logging
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist
from scipy.stats import qmc

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    COMPARE_N_GRID, COMPARE_REFERENCE_POINTS, COMPARE_REPEATS, GAN_LATENT_HIGH, GAN_LATENT_LOW,
    HEATMAP_RESOLUTION, LHS_CANDIDATES,
)
from core.errors import ConfigError
from search.random_search import draw_latent, search_points
from search.scoring import MODES, score_batch

logger = logging.getLogger(__name__)

COMPARE_COLUMNS = ["n_points", "strategy", "mean_error", "std_error"]


def min_distance(points):
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return np.inf
    return float(pdist(points).min())


def space_filling_plan(n_points, seed=0, candidates=LHS_CANDIDATES):
    """(n_points, 2) points in [0, 100]^2."""
    if n_points < 1:
        raise ConfigError(f"n_points must be >= 1, got {n_points}")
    span = GAN_LATENT_HIGH - GAN_LATENT_LOW
    k = math.isqrt(n_points)
    if k * k == n_points:
        centres = GAN_LATENT_LOW + (np.arange(k) + 0.5) * span / k
        g0, g1 = np.meshgrid(centres, centres, indexing="ij")
        return np.column_stack([g0.ravel(), g1.ravel()])

    best, best_dist = None, -1.0
    for c in range(candidates):
        sampler = qmc.LatinHypercube(d=2, seed=np.random.default_rng([seed, c]))
        plan = qmc.scale(sampler.random(n_points), [GAN_LATENT_LOW] * 2, [GAN_LATENT_HIGH] * 2)
        dist = min_distance(plan)
        if dist > best_dist:
            best, best_dist = plan, dist
    return best


def compare_sampling(models, rng, n_grid=COMPARE_N_GRID, repeats=COMPARE_REPEATS,
                     reference_points=COMPARE_REFERENCE_POINTS):
    """
    Mean and std over repeats of (reference best - achieved best) for random
    search and space-filling plans at each point count.

    The reference is a random search over `reference_points` draws. Repeat r
    of the random strategy reuses one stream, so its n-point run is a prefix of
    its larger runs.

    A square n gives one deterministic grid, so every space-filling repeat is
    identical and its std is 0 by construction, not a measured stability.
    """
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    reference = search_points(draw_latent(rng.substream("reference"), reference_points), models).best_score
    n_max = max(n_grid)
    random_best = np.empty((repeats, len(n_grid)))
    filling_best = np.empty((repeats, len(n_grid)))

    for r in range(repeats):
        zs = draw_latent(rng.substream(f"random/{r}"), n_max)
        scores, _ = score_batch(zs, models)
        running = np.maximum.accumulate(scores.max(axis=1))
        for j, n in enumerate(n_grid):
            random_best[r, j] = running[n - 1]
            plan_scores, _ = score_batch(space_filling_plan(n, seed=r), models)
            filling_best[r, j] = plan_scores.max()
        logger.info("compare repeat %d/%d done", r + 1, repeats)

    rows = []
    for j, n in enumerate(n_grid):
        for strategy, table in (("random", random_best), ("space_filling", filling_best)):
            errors = reference - table[:, j]
            rows.append((int(n), strategy, float(errors.mean()), float(errors.std())))
    return pd.DataFrame(rows, columns=COMPARE_COLUMNS)


def heatmap_scores(models, resolution=HEATMAP_RESOLUTION):
    """{mode: DataFrame(z0, z1, score)} over a resolution x resolution grid."""
    if resolution < 2:
        raise ConfigError(f"resolution must be >= 2, got {resolution}")
    axis = np.linspace(GAN_LATENT_LOW, GAN_LATENT_HIGH, resolution)
    z0, z1 = np.meshgrid(axis, axis, indexing="ij")
    zs = np.column_stack([z0.ravel(), z1.ravel()])
    scores, _ = score_batch(zs, models)
    return {
        mode: pd.DataFrame({"z0": zs[:, 0], "z1": zs[:, 1], "score": scores[:, k]})
        for k, mode in enumerate(MODES)
    }
