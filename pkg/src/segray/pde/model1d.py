"""The even one-dimensional model problem on ``[-L, L]``.

Parabolic runs solve ``u_t - u_ss + q u = 0``; eigen runs find the first
Dirichlet eigenpair of ``-d^2/ds^2 + q``.  Derivatives of
``fbar = -log u`` come from fourth-order differences on the node set,
splined for evaluation between nodes.  For eigen runs the higher derivatives
use the Riccati closure ``fbar_ss = fbar_s^2 + lambda - q`` instead of
differentiating the spline, which keeps them free of amplified rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline

from ..errors import NonPositiveState, NotEven, OutsideDomain, TimeMismatch
from .grid import build_operator_1d
from .solvers import eigen_smallest, heat_solve

EVEN_TOL = 1e-10


def check_even(fn, L: float, what: str, samples: int = 257) -> None:
    s = np.linspace(0.0, L, samples)
    a, b = fn(s), fn(-s)
    scale = np.maximum(1.0, np.abs(a))
    if not np.all(np.abs(a - b) <= EVEN_TOL * scale):
        worst = float(np.max(np.abs(a - b)))
        raise NotEven(f"{what} is not even (max |g(s) - g(-s)| = {worst:.3e})")


def fourth_order_gradient(g: np.ndarray, h: float) -> np.ndarray:
    """``dg/ds`` at every node; centred inside, one-sided at the two ends."""
    n = len(g)
    if n < 5:
        raise ValueError("need at least five nodes")
    d = np.empty(n)
    d[2:-2] = (-g[4:] + 8 * g[3:-1] - 8 * g[1:-3] + g[:-4]) / (12 * h)
    d[0] = (-25 * g[0] + 48 * g[1] - 36 * g[2] + 16 * g[3] - 3 * g[4]) / (12 * h)
    d[1] = (-3 * g[0] - 10 * g[1] + 18 * g[2] - 6 * g[3] + g[4]) / (12 * h)
    d[-1] = (25 * g[-1] - 48 * g[-2] + 36 * g[-3] - 16 * g[-4] + 3 * g[-5]) / (12 * h)
    d[-2] = (3 * g[-1] + 10 * g[-2] - 18 * g[-3] + 6 * g[-4] - g[-5]) / (12 * h)
    return d


@dataclass
class Interval1DSolution:
    L: float
    nodes: np.ndarray
    times: np.ndarray
    values: np.ndarray                  # (K, n)
    qbar: object = None                 # ScalarFunction of one variable or None
    eigenvalue: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values.setflags(write=False)
        self._splines = {}

    @property
    def h(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    @property
    def s_max(self) -> float:
        """Largest ``s`` at which derivative accessors are trusted."""
        return float(self.nodes[-1] - 2 * self.h)

    def index_of(self, t: float) -> int:
        k = np.nonzero(np.abs(self.times - t) <= 1e-9 * max(1.0, abs(t)))[0]
        if len(k) == 0:
            raise TimeMismatch(f"no model snapshot at t={t}")
        return int(k[0])

    def at(self, t: float = 0.0) -> np.ndarray:
        return self.values[self.index_of(t)]

    def q_of(self, s, t=0.0, order=0):
        if self.qbar is None:
            return np.zeros_like(np.asarray(s, dtype=float))
        return self.qbar.deriv(np.asarray(s, dtype=float)[..., None], order, t) \
            .reshape(np.shape(s))

    def fbar_s_nodes(self, t: float = 0.0) -> np.ndarray:
        u = self.at(t)
        if not np.all(u > 0):
            raise NonPositiveState("model solution not positive", time=t)
        return -fourth_order_gradient(np.log(u), self.h)

    def _spline(self, k):
        if k not in self._splines:
            fs = self.fbar_s_nodes(self.times[k])
            # enforce the odd symmetry exactly before splining
            fs = 0.5 * (fs - fs[::-1])
            self._splines[k] = (CubicSpline(self.nodes, fs),
                                make_interp_spline(self.nodes, fs, k=5))
        return self._splines[k]

    def _check_s(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) > self.nodes[-1] + 1e-12):
            raise OutsideDomain(f"|s| beyond the last model node {self.nodes[-1]}")
        return s

    def fbar(self, s, t: float = 0.0):
        s = self._check_s(s)
        u = CubicSpline(self.nodes, np.log(self.at(t)))(s)
        return -u

    def fbar_s(self, s, t: float = 0.0, order: int = 0):
        """``d^order/ds^order`` of ``fbar_s`` at ``s`` (orders 0-3)."""
        s = self._check_s(s)
        k = self.index_of(t)
        cub, quint = self._spline(k)
        v = cub(s)
        if order == 0:
            return v
        if self.eigenvalue is not None:
            lam = self.eigenvalue
            q0, q1, q2 = (self.q_of(s, t, j) for j in range(3))
            v1 = v * v + lam - q0
            if order == 1:
                return v1
            v2 = 2 * v * v1 - q1
            if order == 2:
                return v2
            return 2 * v1 * v1 + 2 * v * v2 - q2
        return quint(s, order)

    def fbar_st(self, s, t: float = 0.0):
        """``d/dt fbar_s`` from ``fbar_t = fbar_ss - fbar_s^2 + q``."""
        if self.eigenvalue is not None:
            return np.zeros_like(np.asarray(s, dtype=float))
        v = self.fbar_s(s, t)
        v1 = self.fbar_s(s, t, 1)
        v2 = self.fbar_s(s, t, 2)
        return v2 - 2 * v * v1 + self.q_of(s, t, 1)

    def energy(self, r, t: float = 0.0):
        """Model energy ``E_fbar(-r/2, r/2) = 2 fbar_s(r/2)``."""
        return 2.0 * self.fbar_s(0.5 * np.asarray(r, dtype=float), t)


def solve_1d_model(qbar=None, L: float = 1.0, u0=None, mode: str = "eigen",
                   dt: float = 1e-4, t_end: float = 0.0, n_nodes: int = 2001,
                   snapshots=None, scheme: str = "crank-nicolson",
                   time_dependent: bool = False) -> Interval1DSolution:
    """Run the model problem.

    ``qbar`` is a one-variable :class:`ScalarFunction` (points of shape
    ``(..., 1)``) or None for zero potential; ``u0`` a callable of ``s``.
    """
    if mode not in ("eigen", "heat"):
        raise ValueError("mode must be 'eigen' or 'heat'")
    if qbar is not None:
        check_even(lambda s: qbar.value(s[:, None]), L, "qbar")
    op = build_operator_1d(L, n_nodes, qbar, time_dependent)
    s = op.grid.nodes
    if mode == "eigen":
        pair = eigen_smallest(op)
        vals = pair.vector[None, :].copy()
        return Interval1DSolution(float(L), s, np.array([0.0]), vals, qbar,
                                  pair.eigenvalue,
                                  {"mode": "eigen", "iterations": pair.iterations,
                                   "residual": pair.residual})
    if u0 is None:
        raise ValueError("heat mode needs initial data u0")
    check_even(u0, L, "initial data")
    v0 = np.asarray(u0(s), dtype=float)
    if not np.all(v0 > 0):
        raise NonPositiveState("initial data must be positive", time=0.0)
    sol = heat_solve(op, v0, dt, t_end, scheme, snapshots)
    return Interval1DSolution(float(L), s, sol.times, sol.values.copy(), qbar,
                              None, {"mode": "heat", **sol.meta})
