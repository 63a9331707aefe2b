"""
Chemical (Landau) and gradient energy terms with their driving forces.
Energies are volumetric [J/m^3]; driving forces are dg/dphi [J/m^3].
"""
import numpy as np


# --- Chemical ---

def chem_energy_density(phi1, phi2, params):
    """Delta f / V_m * (A/2 sum phi^2 + B/3 sum phi^3 + C/4 (sum phi^2)^2)."""
    a, b, c = params.landau_a, params.landau_b, params.landau_c
    s2 = phi1 * phi1 + phi2 * phi2
    s3 = phi1 ** 3 + phi2 ** 3
    return params.energy_scale * (a / 2 * s2 + b / 3 * s3 + c / 4 * s2 * s2)


def chem_driving_force(state, params):
    a, b, c = params.landau_a, params.landau_b, params.landau_c
    p1, p2 = state.phi1, state.phi2
    s2 = p1 * p1 + p2 * p2
    scale = params.energy_scale
    d1 = scale * (a * p1 + b * p1 * p1 + c * p1 * s2)
    d2 = scale * (a * p2 + b * p2 * p2 + c * p2 * s2)
    return d1, d2


def chem_hessian_bound(params, radius=1.5):
    """Gershgorin bound on the Landau Hessian for |phi_i| <= radius."""
    a, b, c = params.landau_a, params.landau_b, params.landau_c
    return params.energy_scale * (abs(a) + 2 * abs(b) * radius + 6 * abs(c) * radius ** 2)


# --- Gradient ---

def laplacian(field, h):
    """5-point periodic Laplacian."""
    return (
        np.roll(field, 1, axis=0) + np.roll(field, -1, axis=0)
        + np.roll(field, 1, axis=1) + np.roll(field, -1, axis=1)
        - 4.0 * field
    ) / (h * h)


def grad_driving_force(state, params):
    """-a^2/V_m * laplacian(phi_i)."""
    h = params.spacing
    k = params.gradient_scale
    return -k * laplacian(state.phi1, h), -k * laplacian(state.phi2, h)


def grad_energy(state, params):
    """Total gradient energy per unit thickness [J/m], forward-difference form.

    Its derivative with respect to a cell value is h^2 times the 5-point
    driving force above.
    """
    k = params.gradient_scale
    total = 0.0
    for phi in (state.phi1, state.phi2):
        dx = np.roll(phi, -1, axis=1) - phi
        dy = np.roll(phi, -1, axis=0) - phi
        total += 0.5 * k * float(np.sum(dx * dx + dy * dy))
    return total


def grad_hessian_bound(params):
    return 8.0 * params.gradient_scale / params.spacing ** 2
