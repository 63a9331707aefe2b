"""
Plane-strain crystal-plasticity constitutive update.

Voigt convention: stress (s_xx, s_yy, s_xy), strain (e_xx, e_yy, 2 e_xy).
Arrays are stacked over integration points P and slip systems N.

The increment uses a forward-gradient (rate-tangent) scheme with
theta-weighting of the slip rates:

    dgamma = dt * gamma_dot(t + theta dt)
    dsigma = D deps - sum_b R_b dgamma_b,  R_b = D p_b + spin_b(sigma)

which after linearization gives dgamma = f + F deps and the tangent
C_tan = D - sum_b R_b (x) F_b.
"""
from dataclasses import dataclass

import numpy as np

from cpfem.slip import power_law, power_law_sensitivity


def plane_strain_stiffness(young_mpa, poisson):
    """(..., 3, 3) isotropic plane-strain stiffness with engineering shear."""
    E = np.asarray(young_mpa, dtype=float)
    nu = np.asarray(poisson, dtype=float)
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    D = np.zeros(E.shape + (3, 3))
    D[..., 0, 0] = D[..., 1, 1] = lam + 2 * mu
    D[..., 0, 1] = D[..., 1, 0] = lam
    D[..., 2, 2] = mu
    return D


def spin_term(sigma, w_xy):
    """Voigt form of (w sigma - sigma w) for every system: (..., N, 3)."""
    a = sigma[..., None, 0]
    b = sigma[..., None, 1]
    c = sigma[..., None, 2]
    return np.stack([2 * w_xy * c, -2 * w_xy * c, w_xy * (b - a)], axis=-1)


def resolved_shear(sigma, p_eng):
    """tau_a = sigma . p_eng_a -> (..., N)."""
    return np.einsum("...i,...ai->...a", sigma, p_eng)


def stress_rate(sigma, strain_rate, slip_rates, p_eng, w_xy, D):
    """Jaumann stress rate: D d - sum_a gamma_dot_a (D p_a + w_a sigma - sigma w_a)."""
    elastic = np.einsum("...ij,...j->...i", D, strain_rate)
    R = np.einsum("...ij,...aj->...ai", D, p_eng) + spin_term(sigma, w_xy)
    return elastic - np.einsum("...a,...ai->...i", slip_rates, R)


@dataclass
class RateTangent:
    C_tan: np.ndarray       # (P, 3, 3)
    f: np.ndarray           # (P, N)      slip increment at zero strain increment
    F: np.ndarray           # (P, N, 3)   d(dgamma)/d(deps)
    R: np.ndarray           # (P, N, 3)
    D: np.ndarray

    def slip_increment(self, d_eps):
        return self.f + np.einsum("...ai,...i->...a", self.F, d_eps)

    def stress_increment(self, d_eps, d_gamma):
        return (np.einsum("...ij,...j->...i", self.D, d_eps)
                - np.einsum("...a,...ai->...i", d_gamma, self.R))

    def relaxation_stress(self):
        """sum_b R_b f_b: the stress relaxed by slip at zero strain increment."""
        return np.einsum("...a,...ai->...i", self.f, self.R)


def rate_tangent(sigma, g, h, D, p_eng, w_xy, gamma_dot_0, m_exp, dt, theta=0.5):
    """
    Build the linearized increment at the start of a step.

    g: (P, N) flow stress, h: (P, N, N) hardening modulus,
    gamma_dot_0 / m_exp: (P,) per-point rate parameters.
    """
    g0 = np.asarray(gamma_dot_0, dtype=float)[..., None]
    m = np.asarray(m_exp, dtype=float)[..., None]
    tau = resolved_shear(sigma, p_eng)
    rate = power_law(tau, g, g0, m)
    k_tau = power_law_sensitivity(tau, g, g0, m)
    q = rate / (m * g)

    Dp = np.einsum("...ij,...aj->...ai", D, p_eng)
    R = Dp + spin_term(sigma, w_xy)
    pR = np.einsum("...ai,...bi->...ab", p_eng, R)
    sgn = np.sign(rate)

    n_sys = p_eng.shape[-2]
    N = (np.eye(n_sys)
         + theta * dt * (k_tau[..., None] * pR + q[..., None] * h * sgn[..., None, :]))
    f = np.linalg.solve(N, (dt * rate)[..., None])[..., 0]
    F = np.linalg.solve(N, theta * dt * k_tau[..., None] * Dp)
    C_tan = D - np.einsum("...ai,...aj->...ij", R, F)
    return RateTangent(C_tan, f, F, R, D)
