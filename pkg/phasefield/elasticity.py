"""
Fourier-space microelasticity for the two-variant eigenstrain field.

Homogeneous cubic stiffness, plane strain, periodic cell, zero average
strain. For every wave vector k != 0 the compatible strain is
    eps_hat = sym(k (x) G(k) tau(k)),  G = (C_ijkl k_j k_l)^-1,  tau_i = sigma0_hat_ij k_j
which is the exact per-mode minimizer of the elastic energy.
Tensor components are stored as (xx, yy, xy) with tensor (not engineering) shear.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class ElasticField:
    strain: np.ndarray          # total strain, shape (3, ny, nx)
    elastic_strain: np.ndarray  # strain - eigenstrain
    stress: np.ndarray          # Pa
    energy_density: np.ndarray  # J/m^3


def _stress(c11, c12, c44, e):
    return np.stack([
        c11 * e[0] + c12 * e[1],
        c12 * e[0] + c11 * e[1],
        2.0 * c44 * e[2],
    ])


def _double_dot(s, e):
    return s[0] * e[0] + s[1] * e[1] + 2.0 * s[2] * e[2]


def _check_stiffness(params):
    c11, c12, c44 = params.c11, params.c12, params.c44
    if not (c11 > abs(c12) and c44 > 0 and c11 + 2 * c12 > 0):
        raise ConfigError(f"stiffness not positive definite: C11={c11}, C12={c12}, C44={c44}")


def _axis_wavenumbers(n, h):
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        # Nyquist has no sign; zeroing it keeps the solution conjugate-symmetric (real)
        k[n // 2] = 0.0
    return k


def wave_vectors(shape, h):
    ny, nx = shape
    ky = _axis_wavenumbers(ny, h)[:, None] * np.ones((1, nx))
    kx = _axis_wavenumbers(nx, h)[None, :] * np.ones((ny, 1))
    return kx, ky


def eigenstrain_field(phi1, phi2, params):
    e1, e2 = params.eigenstrains()
    return phi1[None] * e1[:, None, None] + phi2[None] * e2[:, None, None]


def elastic_solve(state, params):
    """Mechanical equilibrium for eps0 = phi1*eps0(1) + phi2*eps0(2)."""
    _check_stiffness(params)
    c11, c12, c44 = params.stiffness_pa
    eps0 = eigenstrain_field(state.phi1, state.phi2, params)

    s0_hat = np.fft.fft2(_stress(c11, c12, c44, eps0), axes=(1, 2))
    kx, ky = wave_vectors(state.phi1.shape, params.spacing)

    tau_x = s0_hat[0] * kx + s0_hat[2] * ky
    tau_y = s0_hat[2] * kx + s0_hat[1] * ky

    k11 = c11 * kx * kx + c44 * ky * ky
    k22 = c44 * kx * kx + c11 * ky * ky
    k12 = (c12 + c44) * kx * ky
    det = k11 * k22 - k12 * k12
    zero = det == 0.0
    det = np.where(zero, 1.0, det)
    vx = np.where(zero, 0.0, (k22 * tau_x - k12 * tau_y) / det)
    vy = np.where(zero, 0.0, (k11 * tau_y - k12 * tau_x) / det)

    e_hat = np.stack([kx * vx, ky * vy, 0.5 * (kx * vy + ky * vx)])
    strain = np.real(np.fft.ifft2(e_hat, axes=(1, 2)))

    elastic_strain = strain - eps0
    stress = _stress(c11, c12, c44, elastic_strain)
    energy = 0.5 * _double_dot(stress, elastic_strain)
    return ElasticField(strain, elastic_strain, stress, energy)


def elastic_driving_force(field, params):
    """dg_el/dphi_i = -sigma : eps0(i)."""
    e1, e2 = params.eigenstrains()
    d1 = -(field.stress[0] * e1[0] + field.stress[1] * e1[1] + 2.0 * field.stress[2] * e1[2])
    d2 = -(field.stress[0] * e2[0] + field.stress[1] * e2[1] + 2.0 * field.stress[2] * e2[2])
    return d1, d2


def equilibrium_residual(field, params):
    """Relative Fourier-space divergence |k . sigma_hat| / (|k| |sigma_hat|)."""
    s_hat = np.fft.fft2(field.stress, axes=(1, 2))
    kx, ky = wave_vectors(field.stress.shape[1:], params.spacing)
    rx = s_hat[0] * kx + s_hat[2] * ky
    ry = s_hat[2] * kx + s_hat[1] * ky
    num = np.sqrt(np.sum(np.abs(rx) ** 2 + np.abs(ry) ** 2))
    kmag = np.sqrt(kx * kx + ky * ky)
    den = np.sqrt(np.sum((kmag ** 2) * (np.abs(s_hat[0]) ** 2 + np.abs(s_hat[1]) ** 2 + 2 * np.abs(s_hat[2]) ** 2)))
    if den == 0.0:
        return 0.0
    return float(num / den)


def eigenstrain_gram(params):
    """G_ij = eps0(i) : C : eps0(j) [Pa]."""
    c11, c12, c44 = params.stiffness_pa
    e = params.eigenstrains()
    gram = np.empty((2, 2))
    for i in range(2):
        si = _stress(c11, c12, c44, e[i][:, None, None])[:, 0, 0]
        for j in range(2):
            gram[i, j] = _double_dot(si, e[j])
    return gram


def elastic_hessian_bound(params):
    return float(np.max(np.linalg.eigvalsh(eigenstrain_gram(params))))
