"""Penalized-energy minimization over obstacle-constrained beam profiles.

The descent iterates on the nodal values: at each step the potential is
solved at the current profile, the force density g is extracted, and the
residual

    r = beta D4 u - (tau + alpha ||u'||^2) D2 u + A (u - k)_+ + g(u)

is preconditioned by the SPD matrix M = beta D4 - coef D2 + A diag(u > k)
(the exact Hessian of the force-frozen part) to give the step direction.
Trial points are clamped to the obstacle and accepted by backtracking on the
discrete penalized energy, whose quadrature is chosen so that its gradient is
exactly h r at interior nodes. Convergence is declared on the variational
inequality: |r| small on nodes off the obstacle, r bounded below by -tol on
nodes at the obstacle.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import solveh_banded

from .energy import EnergyReport, second_differences, total_energy
from .force import compute_force, directional_derivative_check
from .geometry import DeflectionProfile
from .model import DielectricModel, ModelConstants
from .solver import PotentialField, solve_potential

__all__ = [
    "MinimizeOptions",
    "VIResidual",
    "HistoryRow",
    "MinimizeResult",
    "minimize",
    "vi_residual",
    "sup_bound_check",
]


@dataclass(frozen=True)
class MinimizeOptions:
    """Descent configuration; k = None selects the computed penalty level kappa0."""

    k: float | None = None
    max_iters: int = 100
    step0: float = 1.0
    shrink: float = 0.5
    max_backtracks: int = 40
    tol_stationarity: float = 1e-8
    tol_active: float = 1e-8
    n_eta: int = 128
    gap_threshold: float | None = None
    refresh_force_every: int = 1
    audit_every: int = 0


@dataclass(frozen=True)
class VIResidual:
    """Nodal residual of the discrete variational inequality.

    ``r`` is full-length with zeros at the fixed endpoints; ``active_mask``
    marks nodes at the obstacle. Stationarity is max |r| over inactive
    interior nodes; complementarity is min r over active nodes (+inf when no
    node is active) and must be bounded below by -tol for a VI solution.
    """

    r: np.ndarray
    active_mask: np.ndarray
    stationarity: float
    complementarity: float

    def satisfied(self, tol_stationarity: float = 1e-8, tol_active: float = 1e-8) -> bool:
        return self.stationarity <= tol_stationarity and self.complementarity >= -tol_active


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    e_mechanical: float
    e_electrostatic: float
    e_penalized: float
    stationarity: float
    active_count: int
    step_size: float
    backtracks: int
    audit_gap: float = float("nan")


@dataclass(frozen=True)
class MinimizeResult:
    profile: DeflectionProfile
    energy: EnergyReport
    residual: VIResidual
    history: list[HistoryRow] = dc_field(repr=False)
    converged: bool = False
    iterations: int = 0
    status: str = ""


# ------------------------------------------------------- discrete operators


def _ghost_extend(u: np.ndarray, bc_mode: str) -> np.ndarray:
    """Pad with the ghost values that realize the derivative end conditions."""
    sign = 1.0 if bc_mode == "clamped" else -1.0
    return np.concatenate(([sign * u[1]], u, [sign * u[-2]]))


def _apply_d4(u: np.ndarray, h: float, bc_mode: str) -> np.ndarray:
    """Fourth difference at the interior nodes, ghost rows eliminated."""
    ue = _ghost_extend(u, bc_mode)
    i = np.arange(1, u.size - 1)
    return (ue[i - 1] - 4.0 * ue[i] + 6.0 * ue[i + 1] - 4.0 * ue[i + 2] + ue[i + 3]) / h**4


def _apply_d2(u: np.ndarray, h: float) -> np.ndarray:
    """Second difference at the interior nodes (endpoint values enter as data)."""
    return (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2


def _grad_sq_norm(u: np.ndarray, h: float) -> float:
    """||u'||^2 by the cell-midpoint rule, h sum of squared forward differences."""
    d = np.diff(u) / h
    return float(h * np.sum(d * d))


def _banded_hessian(
    n_free: int, h: float, bc_mode: str, beta: float, coef: float, pen_diag: np.ndarray
) -> np.ndarray:
    """Upper-banded form of M = beta D4 - coef D2 + diag(pen_diag).

    Returns the (3, n_free) array consumed by scipy.linalg.solveh_banded;
    SPD for beta > 0, coef >= 0, pen_diag >= 0.
    """
    ab = np.zeros((3, n_free))
    ab[2, :] = 6.0 * beta / h**4 + 2.0 * coef / h**2 + pen_diag
    edge = 7.0 if bc_mode == "clamped" else 5.0
    ab[2, 0] += (edge - 6.0) * beta / h**4
    ab[2, -1] += (edge - 6.0) * beta / h**4
    ab[1, 1:] = -4.0 * beta / h**4 - coef / h**2
    ab[0, 2:] = beta / h**4
    return ab


def _merit_parts(profile: DeflectionProfile, constants: ModelConstants, k: float) -> tuple[float, float]:
    """(mechanical, penalty) energies whose combined nodal gradient is exactly h r.

    Bending uses the trapezoid rule on squared ghost-convention second
    differences; stretching uses the cell-midpoint rule on forward
    differences. These pair exactly with the D4/D2 rows of the residual, so
    backtracking sees a consistent gradient at every node including the ones
    next to the boundary.
    """
    h = profile.spacing
    d2 = second_differences(profile)
    w = np.ones_like(d2)
    w[0] = 0.5
    w[-1] = 0.5
    bend = 0.5 * constants.beta * h * float(np.sum(w * d2 * d2))
    i1 = _grad_sq_norm(profile.u, h)
    stretch = 0.5 * constants.tau * i1 + 0.25 * constants.alpha * i1 * i1
    excess = np.maximum(profile.u - k, 0.0)
    pen = 0.5 * constants.A * h * float(np.sum(w * excess * excess))
    return bend + stretch, pen


def _residual_vector(
    profile: DeflectionProfile, constants: ModelConstants, k: float, g: np.ndarray
) -> np.ndarray:
    """Interior-node residual r of the discrete variational inequality."""
    u, h = profile.u, profile.spacing
    coef = constants.tau + constants.alpha * _grad_sq_norm(u, h)
    r = constants.beta * _apply_d4(u, h, profile.bc_mode)
    r -= coef * _apply_d2(u, h)
    r += constants.A * np.maximum(u[1:-1] - k, 0.0)
    r += g[1:-1]
    return r


def _classify(profile: DeflectionProfile, r_int: np.ndarray, tol_active: float) -> VIResidual:
    u = profile.u
    active = np.zeros(u.size, dtype=bool)
    active[1:-1] = u[1:-1] <= -profile.H + tol_active
    r = np.zeros(u.size)
    r[1:-1] = r_int
    inactive_int = ~active[1:-1]
    stationarity = float(np.max(np.abs(r_int[inactive_int]))) if np.any(inactive_int) else 0.0
    complementarity = float(np.min(r_int[active[1:-1]])) if np.any(active) else float("inf")
    return VIResidual(r=r, active_mask=active, stationarity=stationarity, complementarity=complementarity)


# ------------------------------------------------------------- entry points


def vi_residual(
    profile: DeflectionProfile,
    model: DielectricModel,
    constants: ModelConstants,
    k: float | None = None,
    n_eta: int = 128,
    gap_threshold: float | None = None,
    tol_active: float = 1e-8,
) -> VIResidual:
    """Variational-inequality residual at a profile, with a fresh field solve."""
    if k is None:
        k = constants.kappa0
    if k < constants.H:
        raise ValueError(f"penalty level k = {k} is below H = {constants.H}")
    fld = solve_potential(profile, model, n_eta=n_eta, gap_threshold=gap_threshold)
    g = compute_force(profile, model, fld).g
    r_int = _residual_vector(profile, constants, k, g)
    return _classify(profile, r_int, tol_active)


def sup_bound_check(profile: DeflectionProfile, constants: ModelConstants) -> tuple[bool, float]:
    """Check max u <= kappa0; returns (ok, margin kappa0 - max u)."""
    margin = constants.kappa0 - float(np.max(profile.u))
    return margin >= 0.0, margin


def minimize(
    initial: DeflectionProfile,
    model: DielectricModel,
    constants: ModelConstants,
    options: MinimizeOptions | None = None,
) -> MinimizeResult:
    """Minimize the penalized energy over admissible profiles.

    Projected descent with backtracking: directions are M-preconditioned
    residuals, trial points are clamped to the obstacle with the endpoint
    rows pinned, and a step is accepted only if the discrete penalized energy
    does not increase (up to round-off slack). With the default
    refresh_force_every = 1 the potential is re-solved at every trial point,
    so accepted iterates have non-increasing true discrete energy; larger
    values freeze the force and linearize the electrostatic term between
    refreshes, trading that guarantee for fewer solves. Returns the last
    valid state with status 'line_search_failure' if no acceptable step
    exists at a non-stationary point.
    """
    opts = options or MinimizeOptions()
    k = constants.kappa0 if opts.k is None else float(opts.k)
    if k < constants.H:
        raise ValueError(f"penalty level k = {k} is below H = {constants.H}")
    if opts.refresh_force_every < 1:
        raise ValueError("refresh_force_every must be at least 1")

    profile = initial
    h = profile.spacing
    history: list[HistoryRow] = []

    def electro_total(p: DeflectionProfile) -> tuple[float, PotentialField]:
        fld = solve_potential(p, model, n_eta=opts.n_eta, gap_threshold=opts.gap_threshold)
        rep = total_energy(p, model, constants, k=None, field=fld)
        return rep.e_electrostatic, fld

    e_e, field = electro_total(profile)
    g = compute_force(profile, model, field).g
    mech, pen = _merit_parts(profile, constants, k)
    merit = mech + pen + e_e

    status = "max_iters"
    converged = False
    iteration = 0
    residual = _classify(profile, _residual_vector(profile, constants, k, g), opts.tol_active)

    for iteration in range(opts.max_iters + 1):
        r_int = _residual_vector(profile, constants, k, g)
        residual = _classify(profile, r_int, opts.tol_active)
        if residual.satisfied(opts.tol_stationarity, opts.tol_active):
            status = "converged"
            converged = True
            break
        if iteration == opts.max_iters:
            break

        u = profile.u
        coef = constants.tau + constants.alpha * _grad_sq_norm(u, h)
        pen_diag = constants.A * (u[1:-1] > k).astype(float)
        ab = _banded_hessian(u.size - 2, h, profile.bc_mode, constants.beta, coef, pen_diag)
        direction = -solveh_banded(ab, r_int)

        refresh = (iteration % opts.refresh_force_every) == 0
        at_obstacle = u[1:-1] <= -profile.H + opts.tol_active
        restricted = False
        accepted = False
        step = opts.step0
        backtracks = 0
        slack = 1e-12 * (1.0 + abs(merit))
        trial = profile
        trial_e_e, trial_field, trial_merit = e_e, None, merit
        while True:
            trial_u = u.copy()
            trial_u[1:-1] = np.maximum(u[1:-1] + step * direction, -profile.H)
            trial = profile.with_values(trial_u)
            if refresh:
                trial_e_e, trial_field = electro_total(trial)
            else:
                trial_e_e = e_e + float(h * np.sum(g * (trial_u - u)))
                trial_field = None
            t_mech, t_pen = _merit_parts(trial, constants, k)
            trial_merit = t_mech + t_pen + trial_e_e
            if trial_merit <= merit + slack:
                accepted = True
                break
            backtracks += 1
            if backtracks > opts.max_backtracks:
                if not restricted and np.any(at_obstacle):
                    direction = direction.copy()
                    direction[at_obstacle] = 0.0
                    if not np.any(direction):
                        break
                    restricted = True
                    step = opts.step0
                    backtracks = 0
                    continue
                break
            step *= opts.shrink

        if not accepted:
            status = "line_search_failure"
            break

        profile = trial
        e_e = trial_e_e
        merit = trial_merit
        if trial_field is not None:
            field = trial_field
            g = compute_force(profile, model, field).g

        audit_gap = float("nan")
        if opts.audit_every > 0 and (iteration + 1) % opts.audit_every == 0:
            audit_gap = _audit_force_consistency(profile, model, opts)

        mech, pen = _merit_parts(profile, constants, k)
        history.append(
            HistoryRow(
                iteration=iteration + 1,
                e_mechanical=mech,
                e_electrostatic=e_e,
                e_penalized=merit,
                stationarity=residual.stationarity,
                active_count=int(np.count_nonzero(residual.active_mask)),
                step_size=step,
                backtracks=backtracks,
                audit_gap=audit_gap,
            )
        )

    report = total_energy(profile, model, constants, k=k, n_eta=opts.n_eta, gap_threshold=opts.gap_threshold)
    return MinimizeResult(
        profile=profile,
        energy=report,
        residual=residual,
        history=history,
        converged=converged,
        iterations=iteration,
        status=status,
    )


def _audit_force_consistency(
    profile: DeflectionProfile, model: DielectricModel, opts: MinimizeOptions
) -> float:
    """One-sided FD probe of the electrostatic energy against the force pairing.

    Probes along a fixed interior bump direction with a small positive step;
    returns |FD - int g theta| relative to max(1, |pairing|). The pairing is
    recomputed from a fresh solve so the probe audits the full chain.
    """
    x = profile.x_nodes
    L = profile.L
    theta = (1.0 - (x / L) ** 2) ** 2
    s = 1e-6 * max(1.0, float(np.max(np.abs(profile.u))) + profile.H)
    if np.any(profile.u + s * theta < -profile.H):
        return float("nan")
    rows = directional_derivative_check(
        profile, theta, model, steps=(s,), n_eta=opts.n_eta, gap_threshold=opts.gap_threshold
    )
    row = rows[0]
    return row.gap / max(1.0, abs(row.pairing))
