"""
Planar slip systems, resolved shear stress and the power-law slip rate.

Each system is defined by its slip direction angle theta: s = (cos, sin),
m = s rotated +90 degrees, t = s x m = +z. In plane strain t is out of the
plane; its in-plane projection is taken to be m (used by the screw GN term).
"""
from dataclasses import dataclass

import numpy as np

from core.errors import StateError


@dataclass(frozen=True)
class SlipSystem:
    s: np.ndarray
    m: np.ndarray
    t: np.ndarray
    p: np.ndarray           # sym(s (x) m)
    w: np.ndarray           # skw(s (x) m)
    tau_y: float
    gamma_dot_0: float
    m_exp: float

    @property
    def t_planar(self):
        return self.m

    @property
    def p_engineering(self):
        """(p_xx, p_yy, 2 p_xy): tau = sigma_voigt . p_engineering."""
        return np.array([self.p[0, 0], self.p[1, 1], 2.0 * self.p[0, 1]])


def make_slip_system(angle_deg, tau_y=0.0, gamma_dot_0=1.0e-3, m_exp=0.01):
    theta = np.deg2rad(angle_deg)
    s = np.array([np.cos(theta), np.sin(theta)])
    m = np.array([-np.sin(theta), np.cos(theta)])
    t = np.array([0.0, 0.0, s[0] * m[1] - s[1] * m[0]])
    sm = np.outer(s, m)
    return SlipSystem(s, m, t, 0.5 * (sm + sm.T), 0.5 * (sm - sm.T), tau_y, gamma_dot_0, m_exp)


def slip_geometry(angles_deg):
    """Vectorized geometry for an array of system angles (..., N).

    Returns s, m (..., N, 2), p_eng (..., N, 3) and the spin scalar w_xy (..., N).
    """
    theta = np.deg2rad(np.asarray(angles_deg, dtype=float))
    c, sn = np.cos(theta), np.sin(theta)
    s = np.stack([c, sn], axis=-1)
    m = np.stack([-sn, c], axis=-1)
    p_xx = s[..., 0] * m[..., 0]
    p_yy = s[..., 1] * m[..., 1]
    p_xy = 0.5 * (s[..., 0] * m[..., 1] + s[..., 1] * m[..., 0])
    w_xy = 0.5 * (s[..., 0] * m[..., 1] - m[..., 0] * s[..., 1])
    p_eng = np.stack([p_xx, p_yy, 2.0 * p_xy], axis=-1)
    return s, m, p_eng, w_xy


def resolved_shear_stress(sigma, system):
    """tau = sigma : p for a 2x2 (or stacked ...x2x2) stress."""
    return np.einsum("...ij,ij->...", np.asarray(sigma, dtype=float), system.p)


def slip_rate(tau, g, system):
    """gamma_dot = gamma_dot_0 sgn(tau) |tau/g|^(1/m)."""
    return power_law(tau, g, system.gamma_dot_0, system.m_exp)


def power_law(tau, g, gamma_dot_0, m_exp):
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        raise StateError("flow stress must be positive")
    tau = np.asarray(tau, dtype=float)
    ratio = np.abs(tau) / g
    with np.errstate(under="ignore"):
        rate = gamma_dot_0 * np.sign(tau) * np.power(ratio, 1.0 / m_exp)
    return rate


def power_law_sensitivity(tau, g, gamma_dot_0, m_exp):
    """d gamma_dot / d tau (>= 0)."""
    ratio = np.abs(tau) / g
    with np.errstate(under="ignore"):
        return gamma_dot_0 / (m_exp * g) * np.power(ratio, 1.0 / m_exp - 1.0)
