"""Embedded grids and the Dirichlet operator ``-Laplace + q``.

Cells cut by the boundary use Shortley-Weller arms: when the neighbour in a
direction lies outside, the arm is shortened to the boundary crossing
(fraction ``theta`` of the spacing) where the Dirichlet value 0 is imposed.
The resulting matrix is an M-matrix but not symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import GridTooCoarse
from ..geometry import ConvexDomain, bounding_box

MIN_CELLS = 200
NODE_SNAP = 1e-6

# E, W, N, S unit offsets (axis, sign)
ARMS = ((0, 1), (0, -1), (1, 1), (1, -1))


@dataclass
class Grid2D:
    domain: ConvexDomain
    h: float
    origin: np.ndarray          # coordinates of node (0, 0)
    shape: tuple                # (nx, ny)
    inside: np.ndarray          # bool (nx, ny)
    index: np.ndarray           # int (nx, ny), -1 outside
    ij: np.ndarray              # (M, 2) node indices of unknowns
    points: np.ndarray          # (M, 2) coordinates of unknowns
    theta: np.ndarray           # (M, 4) arm fractions in (0, 1]
    cut: np.ndarray             # (M, 4) True where the arm ends on the boundary

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return 2

    def node(self, i, j):
        return self.origin + self.h * np.stack([i, j], axis=-1)

    def full_stencil(self) -> np.ndarray:
        return ~np.any(self.cut, axis=1)

    def to_array(self, values, fill=np.nan) -> np.ndarray:
        """Scatter unknown values back onto the ``(nx, ny)`` node array."""
        out = np.full(self.shape, fill, dtype=float)
        out[self.ij[:, 0], self.ij[:, 1]] = values
        return out


def _boundary_fraction(domain, p, q, iterations=60):
    """Fraction ``t`` in (0, 1] with ``phi(p + t (q - p)) = 0``."""
    lo = np.zeros(len(p))
    hi = np.ones(len(p))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        inside = domain.phi(p + mid[:, None] * (q - p)) > 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return hi


def build_grid(domain: ConvexDomain, h: float) -> Grid2D:
    if domain.dimension != 2:
        raise ValueError("the embedded grid is two-dimensional")
    lo, hi = bounding_box(domain)
    seed = domain.seed_point
    # align nodes with the seed so symmetric domains get symmetric grids
    k_lo = np.floor((lo - seed) / h).astype(int) - 1
    k_hi = np.ceil((hi - seed) / h).astype(int) + 1
    origin = seed + k_lo * h
    nx, ny = (k_hi - k_lo + 1)
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    nodes = origin + h * np.stack([I, J], axis=-1)
    # nodes within ~1e-6 h of the boundary are treated as boundary nodes;
    # keeping them would create arms of length ~eps and amplify rounding
    phi = domain.phi(nodes)
    gnorm = np.linalg.norm(domain.grad(nodes), axis=-1)
    inside = phi > NODE_SNAP * h * np.maximum(gnorm, 1e-300)
    # the outer ring is always outside by construction of the padded box
    inside[0, :] = inside[-1, :] = inside[:, 0] = inside[:, -1] = False
    ij = np.argwhere(inside)
    M = len(ij)
    if M < MIN_CELLS:
        raise GridTooCoarse(f"only {M} interior nodes at h={h}; need {MIN_CELLS}")
    index = np.full((nx, ny), -1, dtype=np.int64)
    index[ij[:, 0], ij[:, 1]] = np.arange(M)
    points = origin + h * ij
    theta = np.ones((M, 4))
    cut = np.zeros((M, 4), dtype=bool)
    for a, (axis, sign) in enumerate(ARMS):
        nb = ij.copy()
        nb[:, axis] += sign
        out = ~inside[nb[:, 0], nb[:, 1]]
        cut[:, a] = out
        if np.any(out):
            p = points[out]
            q = origin + h * nb[out]
            theta[out, a] = _boundary_fraction(domain, p, q)
    return Grid2D(domain, float(h), origin, (int(nx), int(ny)), inside, index,
                  ij, points, theta, cut)


@dataclass
class Grid1D:
    """Interior nodes of ``[-L, L]`` with spacing ``h = 2L / (n + 1)``."""

    L: float
    n: int

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return -self.L + self.h * np.arange(1, self.n + 1)

    @property
    def points(self) -> np.ndarray:
        return self.nodes[:, None]

    @property
    def size(self) -> int:
        return self.n

    @property
    def dim(self) -> int:
        return 1


@dataclass
class Operator:
    """``A = L + diag(q(x, t))`` on the unknowns of a grid."""

    grid: object
    laplacian: sp.csr_matrix
    potential: object = None
    time_dependent: bool = False
    _static: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @property
    def size(self) -> int:
        return self.laplacian.shape[0]

    def q_values(self, t: float = 0.0) -> np.ndarray:
        if self.potential is None:
            return np.zeros(self.size)
        return np.broadcast_to(
            np.asarray(self.potential.value(self.points, t), dtype=float),
            (self.size,)).copy()

    def matrix(self, t: float = 0.0) -> sp.csr_matrix:
        if not self.time_dependent and self._static is not None:
            return self._static
        A = (self.laplacian + sp.diags(self.q_values(t))).tocsr()
        if not self.time_dependent:
            self._static = A
        return A

    @property
    def A(self) -> sp.csr_matrix:
        return self.matrix(0.0)

    def shifted(self, c: float) -> "Operator":
        """Same operator with ``q + c``."""
        from ..functions import Polynomial, SumFunction
        const = Polynomial({(0,) * self.grid.dim: c}, self.grid.dim) \
            if c != 0 else Polynomial({}, self.grid.dim)
        pot = const if self.potential is None else SumFunction(self.potential, const)
        return Operator(self.grid, self.laplacian, pot, self.time_dependent)

    def __matmul__(self, v):
        return self.A @ v


def shortley_weller_laplacian(grid: Grid2D) -> sp.csr_matrix:
    """Matrix of ``-Laplace`` with zero Dirichlet data at the cut points."""
    h2 = grid.h ** 2
    M = grid.size
    rows, cols, vals = [], [], []
    diag = np.zeros(M)
    for axis, (plus, minus) in enumerate(((0, 1), (2, 3))):
        tp = grid.theta[:, plus]
        tm = grid.theta[:, minus]
        diag += 2.0 / (h2 * tp * tm)
        for a, t_self, t_other in ((plus, tp, tm), (minus, tm, tp)):
            sign = ARMS[a][1]
            nb = grid.ij.copy()
            nb[:, axis] += sign
            j = grid.index[nb[:, 0], nb[:, 1]]
            ok = j >= 0
            rows.append(np.nonzero(ok)[0])
            cols.append(j[ok])
            vals.append(-2.0 / (h2 * t_self[ok] * (t_self[ok] + t_other[ok])))
    rows.append(np.arange(M))
    cols.append(np.arange(M))
    vals.append(diag)
    return sp.csr_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(M, M))


def build_operator(domain: ConvexDomain, q=None, h: float = 0.02,
                   time_dependent: bool = False) -> Operator:
    grid = build_grid(domain, h)
    return Operator(grid, shortley_weller_laplacian(grid), q, time_dependent)


def build_operator_1d(L: float, n: int, q=None,
                      time_dependent: bool = False) -> Operator:
    """Three-point ``-d^2/ds^2 + q`` on ``n`` interior nodes of ``[-L, L]``."""
    if n < 3:
        raise GridTooCoarse("need at least three interior nodes")
    grid = Grid1D(float(L), int(n))
    h2 = grid.h ** 2
    main = np.full(n, 2.0 / h2)
    off = np.full(n - 1, -1.0 / h2)
    lap = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    return Operator(grid, lap, q, time_dependent)
