"""
Allen-Cahn solver: explicit Euler on the total free energy, snapshot export.

    phi_i <- phi_i - dt * M * (chem_i + grad_i + elast_i)

The step size is 0.2 x a bound on 2 / (M * Lipschitz constant) of the
driving force, so every step decreases the total free energy.
"""
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    IC_HALF_WIDTH_RANGE, IC_NOISE_RANGE, PF_DT_SAFETY,
    PF_N_SNAPSHOTS, PF_SNAPSHOT_INTERVAL,
)
from core.errors import ConfigError, DivergenceError
from core.labeling import label_pixels, martensite_fraction
from core.rng import Rng
from phasefield.elasticity import elastic_driving_force, elastic_hessian_bound, elastic_solve
from phasefield.energy import (
    chem_driving_force, chem_energy_density, chem_hessian_bound,
    grad_driving_force, grad_energy, grad_hessian_bound,
)
from phasefield.params import InitialCondition, PhaseFieldState

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["step", "time_s", "total_energy_J", "martensite_fraction"]


def stability_bound(params):
    """2 / (M * (lambda_grad + lambda_chem + lambda_el)) [s]."""
    lam = grad_hessian_bound(params) + chem_hessian_bound(params) + elastic_hessian_bound(params)
    return 2.0 / (params.mobility * lam)


def default_dt(params):
    """Configured dt, else PF_DT_SAFETY x stability bound. A dt above the bound is a ConfigError."""
    bound = stability_bound(params)
    if params.dt is not None:
        if params.dt > bound:
            raise ConfigError(f"dt {params.dt:.3g} s exceeds the stability bound {bound:.3g} s")
        return params.dt
    return PF_DT_SAFETY * bound


def total_free_energy(state, params):
    """Cell sum of (g_chem + g_grad + g_elast) x cell volume, unit thickness [J]."""
    cell = params.spacing ** 2
    chem = float(np.sum(chem_energy_density(state.phi1, state.phi2, params))) * cell
    elast = float(np.sum(elastic_solve(state, params).energy_density)) * cell
    return chem + grad_energy(state, params) + elast


def driving_forces(state, params):
    """Per-term driving forces {name: (d1, d2)}."""
    field = elastic_solve(state, params)
    return {
        "chem": chem_driving_force(state, params),
        "grad": grad_driving_force(state, params),
        "elast": elastic_driving_force(field, params),
    }


def step(state, params, dt=None):
    """One explicit Euler step. Returns a new state."""
    dt = default_dt(params) if dt is None else dt
    forces = driving_forces(state, params)
    total1 = np.zeros_like(state.phi1)
    total2 = np.zeros_like(state.phi2)
    for term, (d1, d2) in forces.items():
        if not (np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))):
            raise DivergenceError("non-finite driving force", step=state.step, term=term)
        total1 += d1
        total2 += d2

    rate = dt * params.mobility
    phi1 = state.phi1 - rate * total1
    phi2 = state.phi2 - rate * total2
    if not (np.all(np.isfinite(phi1)) and np.all(np.isfinite(phi2))):
        raise DivergenceError("non-finite phase field", step=state.step + 1, term="update")
    return PhaseFieldState(phi1, phi2, state.time + dt, state.step + 1)


# --- Initial conditions ---

def make_initial_conditions(n, rng, grid_size=32):
    """Draw n band initial conditions from independent substreams."""
    ics = []
    lo, hi = IC_HALF_WIDTH_RANGE
    nlo, nhi = IC_NOISE_RANGE
    for i in range(n):
        sub = rng.substream(f"ic/{i}")
        ics.append(InitialCondition(
            index=i,
            boundary_half_width=int(sub.integers(lo, hi + 1)),
            seed_noise_amplitude=float(sub.uniform(nlo, nhi)),
            seed=sub.next_seed(),
            band_center=int(sub.integers(0, grid_size)),
        ))
    return ics


def initial_state(ic, params):
    """Zero fields with uniform noise in [0, amplitude) on a band of rows around the center."""
    n = params.grid_size
    rng = Rng(ic.seed)
    center = ic.band_center if ic.band_center is not None else int(rng.integers(0, n))
    rows = np.arange(n)
    dist = np.abs(rows - center)
    dist = np.minimum(dist, n - dist)
    band = (dist <= ic.boundary_half_width)[:, None] * np.ones((1, n), dtype=bool)

    noise1 = rng.uniform(0.0, ic.seed_noise_amplitude, size=(n, n))
    noise2 = rng.uniform(0.0, ic.seed_noise_amplitude, size=(n, n))
    phi1 = np.where(band, noise1, 0.0)
    phi2 = np.where(band, noise2, 0.0)
    return PhaseFieldState(phi1, phi2)


# --- Snapshot runs ---

@dataclass
class SnapshotRun:
    images: list
    trajectory: pd.DataFrame
    final_state: PhaseFieldState


def _trajectory_row(state, params, image):
    return {
        "step": state.step,
        "time_s": state.time,
        "total_energy_J": total_free_energy(state, params),
        "martensite_fraction": martensite_fraction(image),
    }


def run_trajectory(ic, params, n_snapshots=PF_N_SNAPSHOTS, interval=PF_SNAPSHOT_INTERVAL, state=None):
    """
    Evolve from the IC and label the state every `interval` steps.
    Snapshot k (1-based) is taken after k * interval steps.
    """
    if n_snapshots < 1:
        raise ConfigError("n_snapshots must be at least 1")
    if interval < 0:
        raise ConfigError("interval must be non-negative")

    dt = default_dt(params)
    state = initial_state(ic, params) if state is None else state
    images = []
    rows = [_trajectory_row(state, params, label_pixels(state.phi1, state.phi2))]

    for k in range(n_snapshots):
        for _ in range(interval):
            state = step(state, params, dt)
        image = label_pixels(state.phi1, state.phi2)
        images.append(image)
        if interval > 0:
            rows.append(_trajectory_row(state, params, image))

    logger.debug("IC %d: %d snapshots, final fraction %.3f",
                 ic.index, len(images), martensite_fraction(images[-1]))
    trajectory = pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)
    return SnapshotRun(images, trajectory, state)


def run_snapshots(ic, params, n_snapshots=PF_N_SNAPSHOTS, interval=PF_SNAPSHOT_INTERVAL):
    return run_trajectory(ic, params, n_snapshots, interval).images
