"""
Considere necking criterion on a true stress-strain curve.

Necking starts at the first strain where the hardening rate d(sigma)/d(eps)
drops to the true stress. The rate is a Savitzky-Golay derivative
(window 5, order 2) on a uniformly spaced strain grid.
"""
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import savgol_filter

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import FEM_SAVGOL_WINDOW
from core.errors import ConfigError

MIN_SAMPLES = 10
SAVGOL_ORDER = 2
MAX_RESAMPLE = 20000


@dataclass
class ConsidereResult:
    sigma_max: float
    eps_lim: float
    necking_detected: bool
    hardening_rate: np.ndarray


def nominal_stress(strain, true_stress):
    return np.asarray(true_stress) * np.exp(-np.asarray(strain))


def hardening_rate(strain, stress, window=FEM_SAVGOL_WINDOW):
    """d(sigma)/d(eps) at each sample, resampling if spacing is uneven."""
    e = np.asarray(strain, dtype=float)
    s = np.asarray(stress, dtype=float)
    steps = np.diff(e)
    if np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
        return savgol_filter(s, window, SAVGOL_ORDER, deriv=1, delta=float(steps[0]), mode="interp")

    spacing = float(np.median(steps))
    n = min(int(np.ceil((e[-1] - e[0]) / spacing)) + 1, MAX_RESAMPLE)
    n = max(n, window)
    grid = np.linspace(e[0], e[-1], n)
    rate = savgol_filter(np.interp(grid, e, s), window, SAVGOL_ORDER, deriv=1,
                         delta=float(grid[1] - grid[0]), mode="interp")
    return np.interp(e, grid, rate)


def considere(strain, true_stress, window=FEM_SAVGOL_WINDOW):
    """Locate the Considere point. Curves that never neck report the last strain."""
    e = np.asarray(strain, dtype=float)
    s = np.asarray(true_stress, dtype=float)
    if e.shape != s.shape or e.ndim != 1:
        raise ConfigError("strain and stress must be 1-D arrays of equal length")
    if e.size < MIN_SAMPLES:
        raise ConfigError(f"need at least {MIN_SAMPLES} samples, got {e.size}")
    if np.any(np.diff(e) <= 0):
        raise ConfigError("strain must be strictly increasing")
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(s))):
        raise ConfigError("curve contains non-finite values")

    rate = hardening_rate(e, s, window)
    sigma_max = float(np.max(nominal_stress(e, s)))
    excess = rate - s

    below = np.flatnonzero(excess <= 0.0)
    if below.size == 0:
        return ConsidereResult(sigma_max, float(e[-1]), False, rate)

    i = int(below[0])
    if i == 0:
        return ConsidereResult(sigma_max, float(e[0]), True, rate)
    d0, d1 = excess[i - 1], excess[i]
    eps_lim = e[i - 1] + (e[i] - e[i - 1]) * d0 / (d0 - d1)
    return ConsidereResult(sigma_max, float(eps_lim), True, rate)
