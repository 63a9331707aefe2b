"""
Dislocation density evolution and the resulting flow stress.

All functions are vectorized over leading axes; the last axis indexes
slip systems. Omega/omega are (N, N) interaction matrices.
"""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import FEM_MEAN_FREE_PATH_MAX
from core.errors import StateError


def gn_density_rates(grad_gamma_dot, s, t_planar, burgers_um):
    """
    Screw and edge geometrically-necessary density rates.

        rho_dot_screw = (1/b) grad(gamma_dot) . t
        rho_dot_edge  = -(1/b) grad(gamma_dot) . s

    grad_gamma_dot, s, t_planar: (..., N, 2).
    """
    g = np.asarray(grad_gamma_dot, dtype=float)
    screw = np.sum(g * t_planar, axis=-1) / burgers_um
    edge = -np.sum(g * s, axis=-1) / burgers_um
    return screw, edge


def gn_magnitude(screw, edge):
    return np.sqrt(screw * screw + edge * edge)


def ss_density_rate(gamma_dot, mean_free_path, c_coeff, burgers_um):
    """rho_dot_S = c / (b L) |gamma_dot|."""
    L = np.asarray(mean_free_path, dtype=float)
    if np.any(L <= 0):
        raise StateError("mean free path must be positive")
    return c_coeff / (burgers_um * L) * np.abs(gamma_dot)


def mean_free_path(rho_g, rho_s, c_star, omega, max_length=FEM_MEAN_FREE_PATH_MAX):
    """
    L_beta = c* / sqrt(sum_gamma omega_beta_gamma (rho_G + rho_S)_gamma).

    Returns (L, clamped) where clamped flags entries held at max_length
    because the forest density vanished.
    """
    forest = np.einsum("...bg,...g->...b", omega, np.asarray(rho_g) + np.asarray(rho_s))
    if np.any(forest < 0):
        raise StateError("negative forest density")
    with np.errstate(divide="ignore"):
        L = np.where(forest > 0, c_star / np.sqrt(np.where(forest > 0, forest, 1.0)), np.inf)
    clamped = L >= max_length
    return np.minimum(L, max_length), clamped


def flow_stress(rho_s, tau_y, a_coeff, mu_mpa, burgers_um, Omega):
    """g_alpha = tau_y + a mu b sum_beta Omega_ab sqrt(rho_S,beta)."""
    rho_s = np.asarray(rho_s, dtype=float)
    if np.any(rho_s < 0):
        raise StateError("negative statistically-stored density")
    taylor = np.einsum("...ab,...b->...a", Omega, np.sqrt(rho_s))
    return np.asarray(tau_y)[..., None] + (np.asarray(a_coeff * mu_mpa) * burgers_um)[..., None] * taylor


def hardening_modulus(rho_s, mean_free_path, a_coeff, mu_mpa, c_coeff, Omega):
    """
    h_ab = a mu Omega_ab c / (2 L_b sqrt(rho_S,b)), so that
    g_dot_a = sum_b h_ab |gamma_dot_b| is exactly d/dt of flow_stress.
    """
    rho_s = np.asarray(rho_s, dtype=float)
    L = np.asarray(mean_free_path, dtype=float)
    if np.any(rho_s <= 0) or np.any(L <= 0):
        raise StateError("hardening modulus needs positive densities and mean free paths")
    col = c_coeff / (2.0 * L * np.sqrt(rho_s))
    scale = np.asarray(a_coeff * mu_mpa)[..., None, None]
    return scale * Omega * col[..., None, :]
