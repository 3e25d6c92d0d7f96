"""Deflection profiles, contact detection, and the graph map to a rectangle.

The deflected plate is the graph z = u(x) over D = (-L, L); the gap region
between plate and ground electrode is mapped component by component onto the
reference rectangle (x, eta) in I x (0, 1) via

    (x, eta)  ->  (x, -H + eta (H + v(x))).

The map's metric enters the transformed elliptic operator through the 2x2
symmetric coefficient field A_v with unit determinant; it is evaluated at the
quadrature points of a tensor grid of bilinear cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DeflectionProfile",
    "CoincidenceSet",
    "MappedMesh",
    "detect_coincidence",
    "build_mapped_mesh",
    "default_gap_threshold",
]

_GAUSS_1D = np.array([-1.0, 1.0]) / np.sqrt(3.0)  # 2-point Gauss on [-1, 1]


def default_gap_threshold(H: float) -> float:
    """Contact threshold 1e-8 * H below which the mapped operator degenerates."""
    return 1e-8 * H


# ---------------------------------------------------------------- profile


@dataclass(frozen=True)
class DeflectionProfile:
    """Nodal deflection u on a uniform grid over [-L, L].

    The obstacle constraint u >= -H is enforced at construction, as is the
    vanishing of u at both endpoints. The derivative conditions of the two
    boundary modes (u' = 0 clamped, u'' = 0 pinned) are realized through the
    ghost-node conventions of the discrete operators acting on the profile,
    not as nodewise equalities on the stored values.
    """

    x_nodes: np.ndarray
    u: np.ndarray
    bc_mode: str
    H: float

    def __post_init__(self):
        x = np.ascontiguousarray(self.x_nodes, dtype=float)
        u = np.ascontiguousarray(self.u, dtype=float)
        if x.ndim != 1 or x.size < 5:
            raise ValueError("x_nodes must be a 1-D grid with at least 5 nodes")
        if u.shape != x.shape:
            raise ValueError(f"u shape {u.shape} does not match grid {x.shape}")
        steps = np.diff(x)
        if not np.allclose(steps, steps[0], rtol=1e-12, atol=1e-14):
            raise ValueError("x_nodes must be uniformly spaced")
        if self.bc_mode not in ("clamped", "pinned"):
            raise ValueError(f"bc_mode must be 'clamped' or 'pinned', got {self.bc_mode!r}")
        if self.H <= 0.0:
            raise ValueError(f"H must be positive, got {self.H}")
        if u[0] != 0.0 or u[-1] != 0.0:
            raise ValueError("u must vanish at both endpoints")
        if np.any(u < -self.H):
            j = int(np.argmin(u))
            raise ValueError(f"obstacle violated: u[{j}] = {u[j]} < -H = {-self.H}")
        x.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "x_nodes", x)
        object.__setattr__(self, "u", u)

    # -- derived quantities

    @property
    def L(self) -> float:
        return float(self.x_nodes[-1])

    @property
    def n_cells(self) -> int:
        return self.x_nodes.size - 1

    @property
    def spacing(self) -> float:
        return float(self.x_nodes[1] - self.x_nodes[0])

    def gap(self) -> np.ndarray:
        """Nodal gap H + u, nonnegative by the obstacle constraint."""
        return self.H + self.u

    def slopes(self) -> np.ndarray:
        """Nodal u' by centered second-order differences, one-sided at the ends."""
        u, h = self.u, self.spacing
        s = np.empty_like(u)
        s[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
        s[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
        s[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
        return s

    # -- construction helpers

    def with_values(self, u) -> "DeflectionProfile":
        """Same grid and mode, new nodal values."""
        return DeflectionProfile(x_nodes=self.x_nodes, u=np.asarray(u, dtype=float), bc_mode=self.bc_mode, H=self.H)

    @staticmethod
    def from_callable(f, L: float, H: float, n_cells: int, bc_mode: str = "clamped") -> "DeflectionProfile":
        x = np.linspace(-L, L, n_cells + 1)
        u = np.asarray(f(x), dtype=float)
        u[0] = 0.0
        u[-1] = 0.0
        return DeflectionProfile(x_nodes=x, u=u, bc_mode=bc_mode, H=H)

    @staticmethod
    def zero(L: float, H: float, n_cells: int, bc_mode: str = "clamped") -> "DeflectionProfile":
        x = np.linspace(-L, L, n_cells + 1)
        return DeflectionProfile(x_nodes=x, u=np.zeros_like(x), bc_mode=bc_mode, H=H)

    def to_csv(self, path) -> None:
        """Write the profile as two-column CSV (x, u)."""
        np.savetxt(path, np.column_stack([self.x_nodes, self.u]), delimiter=",", header="x,u", comments="")

    @staticmethod
    def from_csv(path, H: float, bc_mode: str = "clamped") -> "DeflectionProfile":
        """Read a two-column CSV (x, u); a one-line header is tolerated."""
        try:
            data = np.loadtxt(path, delimiter=",", dtype=float)
        except ValueError:
            data = np.loadtxt(path, delimiter=",", dtype=float, skiprows=1)
        if data.ndim != 2 or data.shape[1] < 2:
            raise ValueError("profile CSV must have two columns (x, u)")
        return DeflectionProfile(x_nodes=data[:, 0], u=data[:, 1], bc_mode=bc_mode, H=H)


# ---------------------------------------------------------------- contact


@dataclass(frozen=True)
class CoincidenceSet:
    """Contact mask and the maximal non-contact runs (as node index spans).

    ``components`` lists inclusive node-index pairs (i_lo, i_hi) of the
    maximal runs where the gap exceeds the threshold; their open x-intervals
    partition the complement of the contact set.
    """

    contact_mask: np.ndarray
    components: tuple[tuple[int, int], ...]
    gap_threshold: float

    def x_intervals(self, x_nodes: np.ndarray) -> list[tuple[float, float]]:
        return [(float(x_nodes[i]), float(x_nodes[j])) for i, j in self.components]

    @property
    def contact_fraction(self) -> float:
        return float(np.count_nonzero(self.contact_mask)) / self.contact_mask.size


def detect_coincidence(profile: DeflectionProfile, gap_threshold: float | None = None) -> CoincidenceSet:
    """Split the grid into contact nodes and maximal non-contact components.

    A node is in contact when H + u <= gap_threshold (default 1e-8 H). The
    endpoints are never in contact (u vanishes there while H > 0). Interior
    non-contact runs spanning fewer than 3 cells are absorbed into contact:
    below that width the mapped operator cannot be assembled meaningfully.
    """
    if gap_threshold is None:
        gap_threshold = default_gap_threshold(profile.H)
    if gap_threshold <= 0.0:
        raise ValueError(f"gap_threshold must be positive, got {gap_threshold}")
    mask = profile.gap() <= gap_threshold
    mask[0] = False
    mask[-1] = False

    def runs_of(clear: np.ndarray) -> list[tuple[int, int]]:
        idx = np.flatnonzero(clear)
        if idx.size == 0:
            return []
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([0], breaks + 1))
        ends = np.concatenate((breaks, [idx.size - 1]))
        return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, ends)]

    last = mask.size - 1
    for i_lo, i_hi in runs_of(~mask):
        interior = i_lo > 0 and i_hi < last
        if interior and (i_hi - i_lo) < 3:
            mask[i_lo : i_hi + 1] = True

    components = tuple(runs_of(~mask))
    return CoincidenceSet(contact_mask=mask, components=components, gap_threshold=float(gap_threshold))


# ---------------------------------------------------------------- mapped mesh


@dataclass(frozen=True)
class MappedMesh:
    """Tensor mesh of one non-contact component pulled back to the rectangle.

    Cell quadrature uses 2x2 Gauss points; the metric coefficients a11, a12,
    a22 and the map data (x, eta, gap, slope at the quadrature points) are
    stored as arrays of shape (n_x, n_eta, 4). The deflection is interpolated
    linearly within each cell and its slope is the cell slope, so the stored
    map is exactly the piecewise-linear-graph geometry.
    """

    node_span: tuple[int, int]
    H: float
    x_nodes: np.ndarray
    eta_nodes: np.ndarray
    gap_nodes: np.ndarray
    slope_nodes: np.ndarray
    x_q: np.ndarray
    eta_q: np.ndarray
    gap_q: np.ndarray
    slope_q: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    @property
    def n_x(self) -> int:
        return self.x_nodes.size - 1

    @property
    def n_eta(self) -> int:
        return self.eta_nodes.size - 1

    @property
    def dx(self) -> float:
        return float(self.x_nodes[1] - self.x_nodes[0])

    @property
    def deta(self) -> float:
        return float(self.eta_nodes[1] - self.eta_nodes[0])

    def z_q(self) -> np.ndarray:
        """Physical height of the quadrature points, z = -H + eta (H + v)."""
        return -self.H + self.eta_q * self.gap_q

    def v_q(self) -> np.ndarray:
        """Interpolated deflection at the quadrature points, v = gap - H."""
        return self.gap_q - self.H


def build_mapped_mesh(profile: DeflectionProfile, component: tuple[int, int], n_eta: int) -> MappedMesh:
    """Assemble quadrature-point metric data for one non-contact component.

    ``component`` is an inclusive node-index pair from detect_coincidence.
    Fails if the interpolated gap is nonpositive at any quadrature point
    (the map is singular there).
    """
    i_lo, i_hi = int(component[0]), int(component[1])
    if not (0 <= i_lo < i_hi <= profile.x_nodes.size - 1):
        raise ValueError(f"invalid component span ({i_lo}, {i_hi})")
    if n_eta < 3:
        raise ValueError(f"n_eta must be at least 3, got {n_eta}")

    x = profile.x_nodes[i_lo : i_hi + 1]
    u = profile.u[i_lo : i_hi + 1]
    H = profile.H
    n_x = x.size - 1
    dx = profile.spacing

    gap_nodes = H + u
    slope_nodes = np.empty_like(u)
    cell_slope = np.diff(u) / dx
    slope_nodes[1:-1] = 0.5 * (cell_slope[:-1] + cell_slope[1:])
    slope_nodes[0] = cell_slope[0]
    slope_nodes[-1] = cell_slope[-1]

    eta_nodes = np.linspace(0.0, 1.0, n_eta + 1)

    # quadrature points: 2 per axis per cell -> 4 per cell, shape (n_x, n_eta, 4)
    gx = 0.5 * (1.0 + _GAUSS_1D)  # offsets within a cell, in (0, 1)
    xq_1d = (x[:-1, None] + dx * gx[None, :]).reshape(-1)  # (n_x * 2,)
    eq_1d = (eta_nodes[:-1, None] + (eta_nodes[1] - eta_nodes[0]) * gx[None, :]).reshape(-1)

    # linear interpolation of u and cellwise-constant slope at the x Gauss points
    u_q1 = (u[:-1, None] * (1.0 - gx)[None, :] + u[1:, None] * gx[None, :]).reshape(-1)
    vp_q1 = np.repeat(cell_slope, 2)

    Xq = np.broadcast_to(xq_1d[:, None], (xq_1d.size, eq_1d.size))
    Eq = np.broadcast_to(eq_1d[None, :], (xq_1d.size, eq_1d.size))
    Gq = np.broadcast_to((H + u_q1)[:, None], Xq.shape)
    Sq = np.broadcast_to(vp_q1[:, None], Xq.shape)

    if np.any(Gq <= 0.0):
        raise ValueError("quadrature gap nonpositive; the graph map is singular on this component")

    a11 = Gq.copy()
    a12 = -Eq * Sq
    a22 = (1.0 + Eq**2 * Sq**2) / Gq

    def cellview(arr_2d: np.ndarray) -> np.ndarray:
        # (2 n_x, 2 n_eta) -> (n_x, n_eta, 4) with the 4 Gauss points per cell
        a = arr_2d.reshape(n_x, 2, n_eta, 2)
        return np.ascontiguousarray(a.transpose(0, 2, 1, 3).reshape(n_x, n_eta, 4))

    return MappedMesh(
        node_span=(i_lo, i_hi),
        H=H,
        x_nodes=x.copy(),
        eta_nodes=eta_nodes,
        gap_nodes=gap_nodes,
        slope_nodes=slope_nodes,
        x_q=cellview(np.ascontiguousarray(Xq)),
        eta_q=cellview(np.ascontiguousarray(Eq)),
        gap_q=cellview(np.ascontiguousarray(Gq)),
        slope_q=cellview(np.ascontiguousarray(Sq)),
        a11=cellview(a11),
        a12=cellview(a12),
        a22=cellview(a22),
    )
