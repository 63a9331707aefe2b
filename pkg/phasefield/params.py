"""
Phase-field parameters, state and initial conditions.
"""
import sys
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    DOMAIN_LENGTH_UM, IMAGE_SIZE,
    PF_DELTA_F_KJ_MOL, PF_LANDAU_A, PF_LANDAU_B, PF_LANDAU_C,
    PF_GRAD_COEFF_SQ, PF_MOBILITY, PF_C11_GPA, PF_C44_GPA, PF_C12_GPA,
    PF_EIGENSTRAIN_A, PF_EIGENSTRAIN_B, PF_MOLAR_VOLUME,
)
from core.errors import ConfigError


@dataclass(frozen=True)
class PhaseFieldParams:
    delta_f: float = PF_DELTA_F_KJ_MOL          # kJ/mol
    landau_a: float = PF_LANDAU_A
    landau_b: float = PF_LANDAU_B
    landau_c: float = PF_LANDAU_C
    grad_coeff_sq: float = PF_GRAD_COEFF_SQ     # J m^2 / mol
    mobility: float = PF_MOBILITY               # 1/(J s)
    c11: float = PF_C11_GPA                     # GPa
    c44: float = PF_C44_GPA
    c12: float = PF_C12_GPA
    eps_a: float = PF_EIGENSTRAIN_A
    eps_b: float = PF_EIGENSTRAIN_B
    molar_volume: float = PF_MOLAR_VOLUME       # m^3/mol
    grid_size: int = IMAGE_SIZE
    domain_length_um: float = DOMAIN_LENGTH_UM * IMAGE_SIZE / 32
    dt: float = None                            # s; None -> 0.2 x stability bound

    def __post_init__(self):
        self.validate()

    def validate(self):
        a, b, c = self.landau_a, self.landau_b, self.landau_c
        if abs(a + b + c) > 1e-12:
            raise ConfigError(f"Landau constants must satisfy A + B + C = 0 (got {a + b + c:.3g})")
        if not a / 2 + b / 3 + c / 4 < 0:
            raise ConfigError("Landau constants must make phi = 1 the stable well (A/2 + B/3 + C/4 < 0)")
        if not (self.c11 > abs(self.c12) and self.c44 > 0 and self.c11 + 2 * self.c12 > 0):
            raise ConfigError(
                f"elastic constants not positive definite: C11={self.c11}, C12={self.c12}, C44={self.c44}"
            )
        for name in ("delta_f", "grad_coeff_sq", "mobility", "molar_volume", "domain_length_um"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.grid_size < 2:
            raise ConfigError("grid_size must be at least 2")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")

    # --- Derived quantities (SI) ---

    @property
    def spacing(self):
        """Cell size h [m]."""
        return self.domain_length_um * 1e-6 / self.grid_size

    @property
    def energy_scale(self):
        """Delta f / V_m [J/m^3]."""
        return self.delta_f * 1e3 / self.molar_volume

    @property
    def gradient_scale(self):
        """a^2 / V_m [J/m]."""
        return self.grad_coeff_sq / self.molar_volume

    @property
    def stiffness_pa(self):
        return self.c11 * 1e9, self.c12 * 1e9, self.c44 * 1e9

    def eigenstrains(self):
        """(xx, yy, xy) tensor components of each variant's eigenstrain."""
        e1 = np.array([-self.eps_b, self.eps_a, 0.0])
        e2 = np.array([self.eps_a, -self.eps_b, 0.0])
        return e1, e2

    def replace(self, **changes):
        data = asdict(self)
        data.update(changes)
        return PhaseFieldParams(**data)

    def to_dict(self):
        return asdict(self)


@dataclass
class PhaseFieldState:
    phi1: np.ndarray
    phi2: np.ndarray
    time: float = 0.0
    step: int = 0

    def copy(self):
        return PhaseFieldState(self.phi1.copy(), self.phi2.copy(), self.time, self.step)


@dataclass(frozen=True)
class InitialCondition:
    """Seeded martensite band parallel to x."""
    index: int
    boundary_half_width: int
    seed_noise_amplitude: float
    seed: int
    band_center: int = field(default=None)

    def __post_init__(self):
        if not 0 <= self.seed_noise_amplitude < 0.1:
            raise ConfigError(f"noise amplitude must be in [0, 0.1), got {self.seed_noise_amplitude}")
        if self.boundary_half_width < 0:
            raise ConfigError("boundary_half_width must be non-negative")

    def to_dict(self):
        return asdict(self)
