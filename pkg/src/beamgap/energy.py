"""Mechanical, electrostatic, total, and penalized energies of a profile.

The beam terms use composite Simpson quadrature of squared central
differences (ghost-node conventions per boundary mode). The field term reuses
the solver's mapped Gauss quadrature on the reconstructed potential and the
lumped trapezoid bottom term, so the electrostatic energy is exactly the
negative of the discrete functional the solver minimizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DeflectionProfile, detect_coincidence
from .model import DielectricModel, ModelConstants
from .solver import PotentialField, functional_quadratic_parts, solve_potential

__all__ = [
    "MechanicalEnergy",
    "ElectrostaticEnergy",
    "EnergyReport",
    "mechanical_energy",
    "electrostatic_energy",
    "total_energy",
    "simpson_weights",
    "second_differences",
    "first_differences",
    "coercivity_offset",
]


def simpson_weights(n_nodes: int, spacing: float) -> np.ndarray:
    """Composite Simpson weights; the cell count n_nodes - 1 must be even."""
    if n_nodes < 3 or (n_nodes - 1) % 2 != 0:
        raise ValueError(f"Simpson quadrature needs an even cell count, got {n_nodes - 1}")
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (spacing / 3.0)


def second_differences(profile: DeflectionProfile) -> np.ndarray:
    """Central second differences with the boundary-mode ghost convention.

    Clamped reflects the first interior value (u' = 0 at the wall); pinned
    pins the second derivative to zero there.
    """
    u, h = profile.u, profile.spacing
    d = np.empty_like(u)
    d[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    if profile.bc_mode == "clamped":
        d[0] = 2.0 * (u[1] - u[0]) / h**2
        d[-1] = 2.0 * (u[-2] - u[-1]) / h**2
    else:
        d[0] = 0.0
        d[-1] = 0.0
    return d


def first_differences(profile: DeflectionProfile) -> np.ndarray:
    """Central first differences; clamped ends are exact zeros, pinned one-sided."""
    u, h = profile.u, profile.spacing
    d = np.empty_like(u)
    d[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    if profile.bc_mode == "clamped":
        d[0] = 0.0
        d[-1] = 0.0
    else:
        d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
        d[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    return d


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class MechanicalEnergy:
    bending: float
    stretching: float
    self_stretching: float

    @property
    def total(self) -> float:
        return self.bending + self.stretching + self.self_stretching


@dataclass(frozen=True)
class ElectrostaticEnergy:
    """Breakdown of E_e = -(field term + Robin boundary term), both parts >= 0."""

    field_term: float
    boundary_term: float

    @property
    def total(self) -> float:
        return -(self.field_term + self.boundary_term)


@dataclass(frozen=True)
class EnergyReport:
    """Full energy breakdown at a profile: E_total = E_m + E_e, plus penalty."""

    mechanical: MechanicalEnergy
    electrostatic: ElectrostaticEnergy
    penalty: float
    k: float | None

    @property
    def e_mechanical(self) -> float:
        return self.mechanical.total

    @property
    def e_electrostatic(self) -> float:
        return self.electrostatic.total

    @property
    def e_total(self) -> float:
        return self.e_mechanical + self.e_electrostatic

    @property
    def e_penalized(self) -> float:
        return self.e_total + self.penalty


# ---------------------------------------------------------------- energies


def mechanical_energy(profile: DeflectionProfile, beta: float, tau: float, alpha: float) -> MechanicalEnergy:
    """Beam energy (beta/2)||u''||^2 + (tau/2 + (alpha/4)||u'||^2) ||u'||^2.

    Both norms are composite Simpson quadratures of squared central
    differences on the profile grid.
    """
    w = simpson_weights(profile.x_nodes.size, profile.spacing)
    i2 = float(np.sum(w * second_differences(profile) ** 2))
    i1 = float(np.sum(w * first_differences(profile) ** 2))
    return MechanicalEnergy(
        bending=0.5 * beta * i2,
        stretching=0.5 * tau * i1,
        self_stretching=0.25 * alpha * i1**2,
    )


def _contact_boundary_term(profile: DeflectionProfile, model: DielectricModel, field: PotentialField) -> float:
    """Trapezoid of sigma (h(x,-H,-H) - frak_h(x,-H))^2 over contact closures."""
    comps = field.coincidence.components
    if not np.any(field.coincidence.contact_mask):
        return 0.0
    total = 0.0
    x = profile.x_nodes
    H = profile.H
    # the contact runs are exactly the spans between consecutive non-contact
    # components (the endpoints +-L are never in contact)
    spans = [(hi, lo_next) for (_, hi), (lo_next, _) in zip(comps[:-1], comps[1:])]
    for i0, i1 in spans:
        xi = x[i0 : i1 + 1]
        val = model.sigma.value(xi) * (model.h(xi, -H, -H) - model.frak_h(xi, -H)) ** 2
        total += float(np.trapezoid(val, xi))
    return 0.5 * total


def electrostatic_energy(
    profile: DeflectionProfile,
    model: DielectricModel,
    n_eta: int = 128,
    gap_threshold: float | None = None,
    field: PotentialField | None = None,
) -> ElectrostaticEnergy:
    """Electrostatic energy -1/2 int |grad psi|^2 - 1/2 int sigma (psi - frak_h)^2.

    The field integral runs over the non-contact components with the solver's
    mapped quadrature of the reconstructed psi = chi + h_v; contact intervals
    contribute zero field area and a bottom term with the Dirichlet datum
    h(x, -H, -H). Pass a precomputed ``field`` to skip the solve.
    """
    if field is None:
        field = solve_potential(profile, model, n_eta=n_eta, gap_threshold=gap_threshold)

    field_term = 0.0
    boundary_term = 0.0
    for comp in field.components:
        f_part, b_part = functional_quadratic_parts(comp.mesh, model, comp.chi)
        field_term += f_part
        boundary_term += b_part
    boundary_term += _contact_boundary_term(profile, model, field)
    return ElectrostaticEnergy(field_term=field_term, boundary_term=boundary_term)


def total_energy(
    profile: DeflectionProfile,
    model: DielectricModel,
    constants: ModelConstants,
    k: float | None = None,
    n_eta: int = 128,
    gap_threshold: float | None = None,
    field: PotentialField | None = None,
) -> EnergyReport:
    """Energy report at a profile; with penalty level k adds (A/2)||(u-k)+||^2.

    k = None returns the plain energy (penalty zero); k < H is rejected.
    """
    if k is not None and k < constants.H:
        raise ValueError(f"penalty level k = {k} is below H = {constants.H}")
    mech = mechanical_energy(profile, constants.beta, constants.tau, constants.alpha)
    elec = electrostatic_energy(profile, model, n_eta=n_eta, gap_threshold=gap_threshold, field=field)
    penalty = 0.0
    if k is not None:
        w = simpson_weights(profile.x_nodes.size, profile.spacing)
        excess = np.maximum(profile.u - k, 0.0)
        penalty = 0.5 * constants.A * float(np.sum(w * excess**2))
    return EnergyReport(mechanical=mech, electrostatic=elec, penalty=penalty, k=k)


def coercivity_offset(model: DielectricModel, constants: ModelConstants, k: float) -> float:
    """Additive constant c(k) in the penalized-energy lower bound.

    E_k(u) >= (beta/4)||u''||^2 + (A/4)||(u-k)+||^2 - c(k) with
    c(k) = 2 |D| [(1 + sigma_bar) K^2 + k^2 (K^4/beta + 2 K^2)].
    """
    two_l = 2.0 * constants.L
    return 2.0 * two_l * ((1.0 + model.sigma_bar) * model.K**2 + k**2 * constants.A / 8.0)
