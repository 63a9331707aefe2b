"""
Displacement-controlled CPFEM driver for one (image, mode) pair.

Each load step:
  1. rate tangent at every integration point from the current state
  2. global solve K_tan du = f_relax - f_int with prescribed boundary du
  3. slip and stress increments from the linearized update
  4. GN densities from the nodal gradient of the slip increment
  5. SS densities and flow stresses by forward-Euler substeps

Steps whose slip increment or stress overshoot is too large are halved.
"""
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.materials import phase_for_label
from config.settings import (
    DOMAIN_LENGTH_UM, FEM_LATTICE_ROTATION_DEG, FEM_MAX_SLIP_INCREMENT,
    FEM_MAX_STRAIN, FEM_MAX_SUBSTEP_SLIP, FEM_MIN_STRAIN_INCREMENT,
    FEM_NECKING_MARGIN, FEM_RHO_FLOOR, FEM_SLIP_ANGLES_DEG, FEM_STRAIN_INCREMENT,
    FEM_STRAIN_RATE, FEM_THETA, FEM_VARIANT_OFFSETS_DEG,
)
from core.errors import ConfigError, DivergenceError
from core.types import DeformationMode, MechanicalProps
from cpfem.constitutive import plane_strain_stiffness, rate_tangent, resolved_shear
from cpfem.dislocation import (
    flow_stress, gn_density_rates, gn_magnitude, hardening_modulus,
    mean_free_path, ss_density_rate,
)
from cpfem.material import load_materials
from cpfem.mesh import QuadMesh, homogenized_stress
from cpfem.necking import MIN_SAMPLES, considere, nominal_stress
from cpfem.slip import slip_geometry

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["true_strain", "true_stress_MPa", "nominal_stress_MPa", "hardening_rate_MPa"]
PHASE_STRESS_COLUMNS = ["true_strain", "ferrite_von_mises_MPa", "martensite_von_mises_MPa"]
MAX_STRESS_RATIO = 1.5
GROWTH_AFTER = 4


@dataclass(frozen=True)
class SimulationControl:
    strain_rate: float = FEM_STRAIN_RATE
    strain_increment: float = FEM_STRAIN_INCREMENT
    min_increment: float = FEM_MIN_STRAIN_INCREMENT
    max_strain: float = FEM_MAX_STRAIN
    necking_margin: float = FEM_NECKING_MARGIN
    max_slip_increment: float = FEM_MAX_SLIP_INCREMENT
    substep_slip: float = FEM_MAX_SUBSTEP_SLIP
    theta: float = FEM_THETA
    lattice_rotation_deg: float = FEM_LATTICE_ROTATION_DEG
    slip_angles_deg: tuple = FEM_SLIP_ANGLES_DEG
    variant_offsets_deg: dict = field(default_factory=lambda: dict(FEM_VARIANT_OFFSETS_DEG))
    rho_floor: float = FEM_RHO_FLOOR
    domain_length_um: float = DOMAIN_LENGTH_UM
    check_every: int = 10
    stop_at_necking: bool = True
    field_interval: int = 0

    def __post_init__(self):
        if not self.strain_rate > 0:
            raise ConfigError("strain_rate must be positive")
        if not 0 < self.min_increment <= self.strain_increment:
            raise ConfigError("need 0 < min_increment <= strain_increment")
        if not self.max_strain > 0:
            raise ConfigError("max_strain must be positive")
        if not 0 <= self.theta <= 1:
            raise ConfigError("theta must be in [0, 1]")
        if self.substep_slip <= 0 or self.max_slip_increment <= 0:
            raise ConfigError("slip limits must be positive")
        if self.check_every < 1 or self.field_interval < 0:
            raise ConfigError("check_every >= 1 and field_interval >= 0 required")

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class ElementState:
    """Integration-point state, stacked over points P and slip systems N."""
    sigma: np.ndarray           # (P, 3) MPa
    g: np.ndarray               # (P, N) MPa
    rho_s: np.ndarray           # (P, N) 1/um^2
    rho_g_screw: np.ndarray     # (P, N)
    rho_g_edge: np.ndarray      # (P, N)
    gamma: np.ndarray           # (P, N)

    def copy(self):
        return ElementState(*(a.copy() for a in (
            self.sigma, self.g, self.rho_s, self.rho_g_screw, self.rho_g_edge, self.gamma)))

    @property
    def rho_g(self):
        return gn_magnitude(self.rho_g_screw, self.rho_g_edge)


@dataclass
class SimOutput:
    mode: DeformationMode
    curve: pd.DataFrame
    props: MechanicalProps
    phase_stress: pd.DataFrame
    fields: np.ndarray | None
    state: ElementState
    n_steps: int
    n_cutbacks: int

    @property
    def strain(self):
        return self.curve["true_strain"].to_numpy()

    @property
    def true_stress(self):
        return self.curve["true_stress_MPa"].to_numpy()


class _PointModel:
    """Per-point material and slip geometry arrays for one image."""

    def __init__(self, image, materials, control):
        labels = np.asarray(image.labels)
        elem_labels = labels.ravel()
        point_labels = np.repeat(elem_labels, 4)
        n_sys = len(control.slip_angles_deg)
        self.n_sys = n_sys

        mats = [materials[phase_for_label(lbl)] for lbl in range(3)]
        for mat in mats:
            if mat.n_systems != n_sys:
                raise ConfigError(f"{mat.name}: interaction matrices sized {mat.n_systems}, "
                                  f"but {n_sys} slip systems configured")

        def per_point(attr):
            table = np.array([getattr(m, attr) for m in mats], dtype=float)
            return table[point_labels]

        self.young = per_point("young_mpa")
        self.poisson = per_point("poisson")
        self.D = plane_strain_stiffness(self.young, self.poisson)
        self.tau_y = per_point("tau_y")
        self.gamma_dot_0 = per_point("gamma_dot_0")
        self.m_exp = per_point("rate_sensitivity")
        self.mu = per_point("mu_mpa")
        self.b = per_point("burgers_um")
        self.a = per_point("a_coeff")
        self.c = per_point("c_coeff")
        self.c_star = per_point("c_star")
        self.rho_init = per_point("rho_s_init")
        self.Omega = np.stack([np.asarray(m.Omega, dtype=float) for m in mats])[point_labels]
        self.omega = np.stack([np.asarray(m.omega, dtype=float) for m in mats])[point_labels]

        offsets = np.array([control.variant_offsets_deg.get(lbl, 0.0) for lbl in range(3)])
        base = control.lattice_rotation_deg + offsets[point_labels]
        angles = base[:, None] + np.asarray(control.slip_angles_deg, dtype=float)[None, :]
        self.s, self.m, self.p_eng, self.w_xy = slip_geometry(angles)

        self.martensite = point_labels > 0

    def flow_stress(self, rho_s):
        return flow_stress(rho_s, self.tau_y, self.a, self.mu, self.b, self.Omega)

    def mean_free_path(self, state):
        L, _ = mean_free_path(state.rho_g, state.rho_s, self.c_star[:, None], self.omega)
        return L

    def hardening(self, rho_s, L):
        return hardening_modulus(rho_s, L, self.a, self.mu, self.c[:, None], self.Omega)

    def von_mises(self, sigma):
        sxx, syy, sxy = sigma[:, 0], sigma[:, 1], sigma[:, 2]
        szz = self.poisson * (sxx + syy)
        return np.sqrt(0.5 * ((sxx - syy) ** 2 + (syy - szz) ** 2 + (szz - sxx) ** 2) + 3.0 * sxy ** 2)


class _StepRejected(Exception):
    pass


def initial_state(model, control):
    n_pts = model.young.shape[0]
    rho_s = np.maximum(np.repeat(model.rho_init[:, None], model.n_sys, axis=1), control.rho_floor)
    zeros = np.zeros((n_pts, model.n_sys))
    return ElementState(
        sigma=np.zeros((n_pts, 3)),
        g=model.flow_stress(rho_s),
        rho_s=rho_s,
        rho_g_screw=zeros.copy(),
        rho_g_edge=zeros.copy(),
        gamma=zeros.copy(),
    )


def _update_hardening(state, d_gamma, model, mesh, control):
    """GN update from the slip-increment gradient, then SS/g substeps."""
    elem_mean = d_gamma.reshape(mesh.n_elem, 4, -1).mean(axis=1)
    grad = mesh.point_gradient(mesh.project_to_nodes(elem_mean))     # (P, N, 2)
    d_screw, d_edge = gn_density_rates(grad, model.s, model.m, model.b[:, None])
    state.rho_g_screw += d_screw
    state.rho_g_edge += d_edge

    peak = float(np.max(np.abs(d_gamma))) if d_gamma.size else 0.0
    n_sub = max(1, int(np.ceil(peak / control.substep_slip)))
    part = np.abs(d_gamma) / n_sub
    for _ in range(n_sub):
        L = model.mean_free_path(state)
        h = model.hardening(state.rho_s, L)
        state.g += np.einsum("pab,pb->pa", h, part)
        state.rho_s += ss_density_rate(part, L, model.c[:, None], model.b[:, None])
    np.maximum(state.rho_s, control.rho_floor, out=state.rho_s)


def _load_step(state, d_strain, model, mesh, bc, control, step_index):
    dofs, unit = bc
    dt = d_strain / control.strain_rate
    L = model.mean_free_path(state)
    h = model.hardening(state.rho_s, L)
    tangent = rate_tangent(state.sigma, state.g, h, model.D, model.p_eng, model.w_xy,
                           model.gamma_dot_0, model.m_exp, dt, control.theta)

    K = mesh.stiffness(tangent.C_tan)
    rhs = mesh.force(tangent.relaxation_stress()) - mesh.force(state.sigma)
    du = mesh.solve(K, rhs, dofs, unit * d_strain, step=step_index)

    d_eps = mesh.strain(du)
    d_gamma = tangent.slip_increment(d_eps)
    d_sigma = tangent.stress_increment(d_eps, d_gamma)
    if not (np.all(np.isfinite(d_gamma)) and np.all(np.isfinite(d_sigma))):
        raise _StepRejected("non-finite increment")
    if np.max(np.abs(d_gamma)) > control.max_slip_increment:
        raise _StepRejected("slip increment too large")

    new = state.copy()
    new.sigma += d_sigma
    new.gamma += d_gamma
    _update_hardening(new, d_gamma, model, mesh, control)

    ratio = np.abs(resolved_shear(new.sigma, model.p_eng)) / new.g
    if not np.all(np.isfinite(ratio)) or np.max(ratio) > MAX_STRESS_RATIO:
        raise _StepRejected("resolved stress overshoot")
    return new


def _phase_means(model, sigma):
    vm = model.von_mises(sigma)
    mart = model.martensite
    ferrite = float(vm[~mart].mean()) if np.any(~mart) else float("nan")
    martensite = float(vm[mart].mean()) if np.any(mart) else float("nan")
    return ferrite, martensite


def _finish_curve(strains, stresses, mode):
    e = np.asarray(strains)
    s = np.asarray(stresses)
    nominal = nominal_stress(e, s)
    if e.size >= MIN_SAMPLES:
        result = considere(e, s)
        props = MechanicalProps(result.sigma_max, result.eps_lim, mode, result.necking_detected)
        rate = result.hardening_rate
    else:
        rate = np.gradient(s, e) if e.size > 1 else np.zeros_like(s)
        props = MechanicalProps(float(nominal.max()), float(e[-1]), mode, False)
    curve = pd.DataFrame({
        "true_strain": e, "true_stress_MPa": s,
        "nominal_stress_MPa": nominal, "hardening_rate_MPa": rate,
    }, columns=CURVE_COLUMNS)
    return curve, props


def simulate(image, mode, materials=None, control=None):
    """Load the image's mesh in the given mode until necking (plus margin) or the strain cap."""
    mode = DeformationMode.parse(mode)
    control = control or SimulationControl()
    materials = materials or load_materials()
    ny, nx = image.labels.shape
    mesh = QuadMesh(nx, ny, control.domain_length_um, control.domain_length_um * ny / nx)
    model = _PointModel(image, materials, control)
    bc = mesh.boundary_conditions(mode)
    state = initial_state(model, control)

    strains, stresses = [0.0], [0.0]
    phase_rows = [(0.0,) + _phase_means(model, state.sigma)]
    fields = []

    eps = 0.0
    inc = control.strain_increment
    n_steps = n_cutbacks = streak = 0
    while eps < control.max_strain - 1e-12:
        d = min(inc, control.max_strain - eps)
        try:
            state = _load_step(state, d, model, mesh, bc, control, n_steps + 1)
        except (_StepRejected, np.linalg.LinAlgError) as exc:
            inc *= 0.5
            n_cutbacks += 1
            streak = 0
            logger.debug("step %d cut back to %.3g (%s)", n_steps + 1, inc, exc)
            if inc < control.min_increment:
                logger.error("%s: increment below %.1e at strain %.4f", mode.name, control.min_increment, eps)
                raise DivergenceError(f"load step cut below minimum increment ({exc})",
                                      step=n_steps + 1, term="cpfem") from None
            continue

        n_steps += 1
        eps += d
        streak += 1
        if streak >= GROWTH_AFTER and inc < control.strain_increment:
            inc = min(2.0 * inc, control.strain_increment)
            streak = 0

        strains.append(eps)
        stresses.append(homogenized_stress(state.sigma, mode))
        phase_rows.append((eps,) + _phase_means(model, state.sigma))
        if control.field_interval and n_steps % control.field_interval == 0:
            vm = model.von_mises(state.sigma).reshape(mesh.n_elem, 4).mean(axis=1)
            fields.append(vm.reshape(ny, nx))

        if control.stop_at_necking and len(strains) >= MIN_SAMPLES and n_steps % control.check_every == 0:
            check = considere(np.asarray(strains), np.asarray(stresses))
            if check.necking_detected and eps >= check.eps_lim + control.necking_margin:
                break

    curve, props = _finish_curve(strains, stresses, mode)
    phase_stress = pd.DataFrame(phase_rows, columns=PHASE_STRESS_COLUMNS)
    logger.info("%s: %d steps (%d cutbacks), sigma_max %.1f MPa, eps_lim %.4f%s",
                mode.name, n_steps, n_cutbacks, props.sigma_max, props.eps_lim,
                "" if props.necking_detected else " (no necking)")
    return SimOutput(mode, curve, props, phase_stress,
                     np.stack(fields) if fields else None, state, n_steps, n_cutbacks)
