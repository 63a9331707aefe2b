"""
Phase definitions for dual-phase steel.
Elastic constants and initial densities are measured values; the
dislocation-model knobs are calibration choices.

Units: moduli in GPa, burgers vector in nm, densities in 1/um^2,
stresses in MPa.
"""

# --- Ferrite (soft phase, pixel label 0) ---
FERRITE = {
    "name": "ferrite",
    "young": 205.9,
    "poisson": 0.3,
    "rho_s_init": 1.0,
    "rate_sensitivity": 0.01,
    "gamma_dot_0": 1.0e-3,      # "1.0 ms^-1" read as 1e-3 / s
    "tau_y": 50.0,
    "burgers": 0.25,
    "a_coeff": 0.1,
    "c_coeff": 1.0,
    "c_star": 140.0,            # 10 never reaches a Considere point
}

# --- Martensite (hard phase, labels 1 and 2; variants differ by lattice offset) ---
MARTENSITE = {
    "name": "martensite",
    "young": 237.3,
    "poisson": 0.333,
    "rho_s_init": 1.0e3,
    "rate_sensitivity": 0.007,
    "gamma_dot_0": 1.0e-3,
    "tau_y": 400.0,
    "burgers": 0.25,
    "a_coeff": 0.1,
    "c_coeff": 1.0,
    "c_star": 20.0,
}

PHASES = {
    "ferrite": FERRITE,
    "martensite": MARTENSITE,
}

# Pixel label -> phase name
LABEL_PHASE = {
    0: "ferrite",
    1: "martensite",
    2: "martensite",
}


def get_phase(name):
    """Get a copy of a phase record by name."""
    if name not in PHASES:
        raise KeyError(f"Unknown phase: {name}")
    return dict(PHASES[name])


def phase_for_label(label):
    """Get the phase name for a pixel label."""
    return LABEL_PHASE[int(label)]
