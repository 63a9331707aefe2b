"""
Phase material records for the dislocation crystal-plasticity model.

Units used throughout cpfem: stress MPa, length um, density 1/um^2, time s.
"""
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.materials import get_phase
from config.settings import FEM_SLIP_ANGLES_DEG
from core.errors import ConfigError


def default_interaction(n_systems):
    """(Omega, omega): all-ones and all-ones-minus-identity."""
    return np.ones((n_systems, n_systems)), np.ones((n_systems, n_systems)) - np.eye(n_systems)


@dataclass(frozen=True)
class PhaseMaterial:
    name: str
    young: float            # GPa
    poisson: float
    rho_s_init: float       # 1/um^2 per slip system
    rate_sensitivity: float
    gamma_dot_0: float      # 1/s
    tau_y: float            # MPa
    burgers: float          # nm
    a_coeff: float
    c_coeff: float
    c_star: float
    Omega: np.ndarray = field(default=None, compare=False)
    omega: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        n = len(FEM_SLIP_ANGLES_DEG)
        big, small = default_interaction(n)
        if self.Omega is None:
            object.__setattr__(self, "Omega", big)
        if self.omega is None:
            object.__setattr__(self, "omega", small)
        self.validate()

    def validate(self):
        for name in ("young", "rho_s_init", "rate_sensitivity", "gamma_dot_0",
                     "tau_y", "burgers", "a_coeff", "c_coeff", "c_star"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{self.name}: {name} must be positive")
        if not 0 < self.poisson < 0.5:
            raise ConfigError(f"{self.name}: poisson ratio must be in (0, 0.5)")
        big = np.asarray(self.Omega, dtype=float)
        small = np.asarray(self.omega, dtype=float)
        if not np.allclose(big, big.T) or np.any(big < 0):
            raise ConfigError(f"{self.name}: Omega must be symmetric and non-negative")
        if np.any(np.diag(small) != 0) or np.any(small < 0):
            raise ConfigError(f"{self.name}: omega must be non-negative with zero diagonal")

    @property
    def mu(self):
        """Shear modulus [GPa]."""
        return self.young / (2.0 * (1.0 + self.poisson))

    @property
    def mu_mpa(self):
        return self.mu * 1e3

    @property
    def young_mpa(self):
        return self.young * 1e3

    @property
    def burgers_um(self):
        return self.burgers * 1e-3

    @property
    def n_systems(self):
        return np.asarray(self.Omega).shape[0]

    @classmethod
    def from_record(cls, record, **overrides):
        data = {k: v for k, v in record.items() if k in cls.__dataclass_fields__}
        data.update(overrides)
        return cls(**data)

    def to_dict(self):
        return {
            "name": self.name, "young": self.young, "poisson": self.poisson,
            "rho_s_init": self.rho_s_init, "rate_sensitivity": self.rate_sensitivity,
            "gamma_dot_0": self.gamma_dot_0, "tau_y": self.tau_y, "burgers": self.burgers,
            "a_coeff": self.a_coeff, "c_coeff": self.c_coeff, "c_star": self.c_star,
        }


def load_materials(overrides=None):
    """{'ferrite': PhaseMaterial, 'martensite': PhaseMaterial} with optional per-phase overrides."""
    overrides = overrides or {}
    out = {}
    for name in ("ferrite", "martensite"):
        out[name] = PhaseMaterial.from_record(get_phase(name), **overrides.get(name, {}))
    return out
