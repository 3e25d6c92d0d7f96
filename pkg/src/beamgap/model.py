"""Dielectric data for the gap region and the constants derived from it.

The device occupies the strip above a rigid ground plate at z = -H. The
dielectric permittivity sigma(x) lives on the plate; the boundary potential
h(x, z, w) and the auxiliary bottom datum frak_h(x, w) close the elliptic
problem for the electrostatic potential. Everything downstream (solver,
energy, force, minimizer) consumes the model through the callables stored
here, so analytic derivatives are part of the contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "SigmaProfile",
    "DielectricModel",
    "ModelConstants",
    "SampleBox",
    "ValidationReport",
    "KEstimate",
    "sigma_constant",
    "sigma_polynomial",
    "sigma_tabulated",
    "make_example_model",
    "make_zero_data_model",
    "default_sample_box",
    "validate_assumptions",
    "estimate_K",
    "compute_constants",
]

ArrayFunc = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------- sigma


@dataclass(frozen=True)
class SigmaProfile:
    """Permittivity profile sigma(x) with two derivatives.

    All three callables are vectorized over numpy arrays. ``domain`` is the
    x-interval on which the profile is meant to be evaluated; sigma_min and
    the C2-norm bound sigma_bar are sampled over it.
    """

    value: ArrayFunc
    d1: ArrayFunc
    d2: ArrayFunc
    kind: str
    domain: tuple[float, float] = (-1.0, 1.0)

    def c2_scan(self, n: int = 2001) -> tuple[float, float]:
        """Return (min sigma, max over derivatives of sup |sigma^(j)|) on the domain."""
        x = np.linspace(self.domain[0], self.domain[1], n)
        s = np.asarray(self.value(x), dtype=float)
        s1 = np.asarray(self.d1(x), dtype=float)
        s2 = np.asarray(self.d2(x), dtype=float)
        smin = float(np.min(s))
        sbar = float(max(np.max(np.abs(s)), np.max(np.abs(s1)), np.max(np.abs(s2))))
        return smin, sbar


def sigma_constant(value: float, domain: tuple[float, float] = (-1.0, 1.0)) -> SigmaProfile:
    """Constant permittivity sigma(x) = value."""
    if value <= 0.0:
        raise ValueError(f"sigma must be positive, got {value}")
    c = float(value)
    return SigmaProfile(
        value=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        d1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kind="constant",
        domain=domain,
    )


def sigma_polynomial(coeffs, domain: tuple[float, float] = (-1.0, 1.0)) -> SigmaProfile:
    """Polynomial permittivity with given coefficients (low order first)."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    p1 = p.deriv(1)
    p2 = p.deriv(2)
    prof = SigmaProfile(
        value=lambda x: p(np.asarray(x, dtype=float)),
        d1=lambda x: p1(np.asarray(x, dtype=float)),
        d2=lambda x: p2(np.asarray(x, dtype=float)),
        kind="polynomial",
        domain=domain,
    )
    smin, _ = prof.c2_scan()
    if smin <= 0.0:
        raise ValueError(f"polynomial sigma must stay positive on the domain, min {smin}")
    return prof


def sigma_tabulated(x, s) -> SigmaProfile:
    """Tabulated permittivity from samples (x, sigma), cubic interpolation.

    Accepts two arrays or a path to a two-column CSV. Derivatives come from
    the interpolating spline.
    """
    if s is None and isinstance(x, (str, bytes)):
        data = np.loadtxt(x, delimiter=",", dtype=float)
        x, s = data[:, 0], data[:, 1]
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if x.ndim != 1 or x.shape != s.shape or x.size < 4:
        raise ValueError("tabulated sigma needs two equal-length 1-D arrays (>= 4 points)")
    spline = CubicSpline(x, s)
    d1 = spline.derivative(1)
    d2 = spline.derivative(2)
    prof = SigmaProfile(
        value=lambda q: spline(np.asarray(q, dtype=float)),
        d1=lambda q: d1(np.asarray(q, dtype=float)),
        d2=lambda q: d2(np.asarray(q, dtype=float)),
        kind="tabulated",
        domain=(float(x[0]), float(x[-1])),
    )
    smin, _ = prof.c2_scan()
    if smin <= 0.0:
        raise ValueError(f"tabulated sigma must stay positive, interpolated min {smin}")
    return prof


# ---------------------------------------------------------------- model


@dataclass(frozen=True)
class DielectricModel:
    """Dielectric data: sigma(x), boundary potential h(x, z, w), datum frak_h(x, w).

    The callables h, h_x, h_z, h_w take (x, z, w) and broadcast; frak_h and
    frak_h_w take (x, w). K is the working bound on the data, either supplied
    by the caller or produced by estimate_K over a sample box; sigma_min and
    sigma_bar are the sampled minimum and C2-norm bound of sigma.
    """

    sigma: SigmaProfile
    h: Callable
    h_x: Callable
    h_z: Callable
    h_w: Callable
    frak_h: Callable
    frak_h_w: Callable
    V: float
    K: float
    sigma_min: float
    sigma_bar: float
    H: float
    family: str = "example"


@dataclass(frozen=True)
class ModelConstants:
    """Derived constants: penalty stiffness A, force bound G0, sup bound kappa0."""

    A: float
    G0: float
    kappa0: float
    beta: float
    tau: float
    alpha: float
    L: float
    H: float


@dataclass(frozen=True)
class SampleBox:
    """Tensor sampling box for validate_assumptions and estimate_K."""

    x: tuple[float, float]
    z: tuple[float, float]
    w: tuple[float, float]
    n: int = 33

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.linspace(self.x[0], self.x[1], self.n),
            np.linspace(self.z[0], self.z[1], self.n),
            np.linspace(self.w[0], self.w[1], self.n),
        )


@dataclass(frozen=True)
class ValidationReport:
    """Result of the compatibility scan: worst Robin mismatch of the data."""

    ok: bool
    max_residual: float
    worst_x: float
    worst_w: float
    sigma_min: float
    tol: float


@dataclass(frozen=True)
class KEstimate:
    """Smallest sampled K with the inequality that forced it."""

    K: float
    binding: str
    contributions: dict[str, float] = field(default_factory=dict)


def default_sample_box(L: float, H: float, z_max: float | None = None, n: int = 33) -> SampleBox:
    """Default box x in [-L, L], z and w in [-H, z_max], z_max = 4H unless given."""
    if z_max is None:
        z_max = 4.0 * H
    return SampleBox(x=(-L, L), z=(-H, z_max), w=(-H, z_max), n=n)


def make_example_model(
    V: float,
    sigma: SigmaProfile | float,
    H: float,
    K: float | None = None,
    box: SampleBox | None = None,
) -> DielectricModel:
    """Build the reference dielectric family.

    The boundary potential is

        h(x, z, w) = V (1 + sigma(x)(H + z)) / (1 + sigma(x)(H + w)),

    with frak_h = 0. It satisfies the Robin compatibility
    d_z h(x, -H, w) = sigma(x) (h(x, -H, w) - frak_h(x, w)) identically, so
    the potential problem's mixed boundary data are consistent for every
    admissible deflection.

    Parameters
    ----------
    V : applied voltage, must be positive.
    sigma : permittivity profile, or a positive number for a constant one.
    H : gap height at rest, must be positive.
    K : working data bound; estimated over ``box`` when omitted.
    box : sample box for the K estimate (default: x over sigma's domain,
        z and w in [-H, 4H]).
    """
    if V <= 0.0:
        raise ValueError(f"V must be positive, got {V}")
    if H <= 0.0:
        raise ValueError(f"H must be positive, got {H}")
    if isinstance(sigma, (int, float)):
        sigma = sigma_constant(float(sigma))
    smin, sbar = sigma.c2_scan()
    if smin <= 0.0:
        raise ValueError(f"sigma must be positive on its domain, sampled min {smin}")

    sig, dsig = sigma.value, sigma.d1
    Vf, Hf = float(V), float(H)

    def h(x, z, w):
        s = sig(np.asarray(x, dtype=float))
        return Vf * (1.0 + s * (Hf + z)) / (1.0 + s * (Hf + w))

    def h_x(x, z, w):
        x = np.asarray(x, dtype=float)
        s = sig(x)
        den = 1.0 + s * (Hf + w)
        return Vf * dsig(x) * (np.asarray(z, dtype=float) - w) / den**2

    def h_z(x, z, w):
        s = sig(np.asarray(x, dtype=float))
        return Vf * s / (1.0 + s * (Hf + w)) + 0.0 * np.asarray(z, dtype=float)

    def h_w(x, z, w):
        s = sig(np.asarray(x, dtype=float))
        den = 1.0 + s * (Hf + w)
        return -Vf * s * (1.0 + s * (Hf + z)) / den**2

    def frak_h(x, w):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(w)).shape)

    model = DielectricModel(
        sigma=sigma,
        h=h,
        h_x=h_x,
        h_z=h_z,
        h_w=h_w,
        frak_h=frak_h,
        frak_h_w=frak_h,
        V=Vf,
        K=1.0,
        sigma_min=smin,
        sigma_bar=sbar,
        H=Hf,
        family="example",
    )
    if K is None:
        if box is None:
            box = default_sample_box(L=max(abs(d) for d in sigma.domain), H=Hf)
        K = estimate_K(model, box).K
    if K <= 0.0:
        raise ValueError(f"K must be positive, got {K}")
    return replace(model, K=float(K))


def make_zero_data_model(sigma: SigmaProfile | float, H: float, K: float = 1.0) -> DielectricModel:
    """Degenerate model with h = 0 and frak_h = 0 (the V = 0 configuration).

    Compatibility holds exactly (0 = sigma * 0) and the potential problem has
    the trivial solution, so this model backs the zero-voltage paths and the
    manufactured-solution runs where the only load is an injected source.
    """
    if H <= 0.0:
        raise ValueError(f"H must be positive, got {H}")
    if isinstance(sigma, (int, float)):
        sigma = sigma_constant(float(sigma))
    smin, sbar = sigma.c2_scan()
    if smin <= 0.0:
        raise ValueError(f"sigma must be positive on its domain, sampled min {smin}")

    def zero3(x, z, w):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(z), np.asarray(w)).shape)

    def zero2(x, w):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(w)).shape)

    return DielectricModel(
        sigma=sigma,
        h=zero3,
        h_x=zero3,
        h_z=zero3,
        h_w=zero3,
        frak_h=zero2,
        frak_h_w=zero2,
        V=0.0,
        K=float(K),
        sigma_min=smin,
        sigma_bar=sbar,
        H=float(H),
        family="zero",
    )


# ---------------------------------------------------------------- checks


def validate_assumptions(model: DielectricModel, box: SampleBox, tol: float = 1e-10) -> ValidationReport:
    """Scan the Robin compatibility of (h, frak_h, sigma) on a tensor grid.

    Evaluates R(x, w) = d_z h(x, -H, w) - sigma(x)(h(x, -H, w) - frak_h(x, w))
    over box.x times box.w and reports its worst magnitude and location,
    together with the sampled minimum of sigma.
    """
    xs, _, ws = box.axes()
    X, W = np.meshgrid(xs, ws, indexing="ij")
    H = model.H
    res = model.h_z(X, -H, W) - model.sigma.value(X) * (model.h(X, -H, W) - model.frak_h(X, W))
    res = np.asarray(res, dtype=float)
    idx = np.unravel_index(np.argmax(np.abs(res)), res.shape)
    smin = float(np.min(model.sigma.value(xs)))
    max_res = float(np.abs(res[idx]))
    return ValidationReport(
        ok=bool(max_res <= tol and smin > 0.0),
        max_residual=max_res,
        worst_x=float(X[idx]),
        worst_w=float(W[idx]),
        sigma_min=smin,
        tol=float(tol),
    )


def estimate_K(model: DielectricModel, box: SampleBox) -> KEstimate:
    """Smallest K satisfying the sampled growth bounds on (h, frak_h).

    Four families of bounds are sampled over the box and the largest required
    constant wins:

    * ``bb6``:  (|h_x| + |h_z|) sqrt((H+w)/(1+w^2)) and |h_w| sqrt(H+w);
    * ``bb7``:  |h(x, -H, w)| + |frak_h(x, w)|;
    * ``hbound1``: |h(x, w, w)| plus the worst lateral value |h(x_edge, z, w)|
      at the box's x-faces, coupled through the shared w;
    * ``hbound2``: |h_x| + |h_z| + |h_w| at (x, w, w) plus |frak_h_w(x, w)|.

    The result is monotone nondecreasing in the box since grids include the
    box corners.
    """
    xs, zs, ws = box.axes()
    H = model.H
    X, Z, W = np.meshgrid(xs, zs, ws, indexing="ij", sparse=True)

    gap = np.maximum(W + H, 0.0)
    t1 = (np.abs(model.h_x(X, Z, W)) + np.abs(model.h_z(X, Z, W))) * np.sqrt(gap / (1.0 + W**2))
    t2 = np.abs(model.h_w(X, Z, W)) * np.sqrt(gap)
    k_bb6 = float(max(np.max(t1), np.max(t2)))

    X2, W2 = np.meshgrid(xs, ws, indexing="ij")
    k_bb7 = float(np.max(np.abs(model.h(X2, -H, W2)) + np.abs(model.frak_h(X2, W2))))

    diag = np.abs(model.h(X2, W2, W2))  # |h(x, w, w)| on the (x, w) grid
    m1 = diag.max(axis=0)  # per w
    Zl, Wl = np.meshgrid(zs, ws, indexing="ij")
    lat = np.maximum(
        np.abs(model.h(box.x[0], Zl, Wl)), np.abs(model.h(box.x[1], Zl, Wl))
    ).max(axis=0)  # per w
    k_h1 = float(np.max(m1 + lat))

    k_h2 = float(
        np.max(
            np.abs(model.h_x(X2, W2, W2))
            + np.abs(model.h_z(X2, W2, W2))
            + np.abs(model.h_w(X2, W2, W2))
            + np.abs(model.frak_h_w(X2, W2))
        )
    )

    contributions = {"bb6": k_bb6, "bb7": k_bb7, "hbound1": k_h1, "hbound2": k_h2}
    binding = max(contributions, key=contributions.get)
    return KEstimate(K=contributions[binding], binding=binding, contributions=contributions)


# ---------------------------------------------------------------- constants


def _q_norm(H: float, tol: float = 1e-10) -> float:
    """Sup of |Q| on [0, 1] for Q(y) = y^2 (y^2 + 2(H-1) y + 1 - 3H).

    Dense scan followed by golden-section refinement around the scan argmax.
    """
    y = np.linspace(0.0, 1.0, 4001)
    q = np.abs(y**2 * (y**2 + 2.0 * (H - 1.0) * y + 1.0 - 3.0 * H))
    j = int(np.argmax(q))
    lo = y[max(j - 1, 0)]
    hi = y[min(j + 1, y.size - 1)]

    def f(t: float) -> float:
        return -abs(t**2 * (t**2 + 2.0 * (H - 1.0) * t + 1.0 - 3.0 * H))

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return float(max(-f(0.5 * (a + b)), q[j]))


def compute_constants(
    model: DielectricModel,
    beta: float,
    tau: float,
    alpha: float,
    L: float,
    H: float,
    bc_mode: str = "clamped",
) -> ModelConstants:
    """Derive the penalty stiffness A, force bound G0, and sup bound kappa0.

    A = 8 (K^4 / beta + 2 K^2) and G0 = 2 sigma_bar K^2 + K^2 with K and
    sigma_bar taken from the model. kappa0 is the maximum of H and the four
    comparison-beam case bounds

        case 1:     16 L^4 G0 / beta - H
        cases 2, 3: (16 L^4 G0 + 24 beta + 56 tau (H+1) L^2) / beta + ||Q||_inf
        case 4:     16 L^4 G0 / beta

    with Q(y) = y^2 (y^2 + 2(H-1)y + 1-3H) maximized on [0, 1]. The case
    analysis is carried out for the clamped comparison problems; both boundary
    modes use the same bound.
    """
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if tau < 0.0 or alpha < 0.0:
        raise ValueError(f"tau and alpha must be nonnegative, got {tau}, {alpha}")
    if L <= 0.0 or H <= 0.0:
        raise ValueError(f"L and H must be positive, got {L}, {H}")
    if bc_mode not in ("clamped", "pinned"):
        raise ValueError(f"bc_mode must be 'clamped' or 'pinned', got {bc_mode!r}")

    K = model.K
    A = 8.0 * (K**4 / beta + 2.0 * K**2)
    G0 = 2.0 * model.sigma_bar * K**2 + K**2

    base = 16.0 * L**4 * G0 / beta
    case1 = base - H
    case23 = (16.0 * L**4 * G0 + 24.0 * beta + 56.0 * tau * (H + 1.0) * L**2) / beta + _q_norm(H)
    case4 = base
    kappa0 = max(H, case1, case23, case4)

    return ModelConstants(
        A=float(A),
        G0=float(G0),
        kappa0=float(kappa0),
        beta=float(beta),
        tau=float(tau),
        alpha=float(alpha),
        L=float(L),
        H=float(H),
    )
