"""Time stepping and the first eigenpair for ``A = -Laplace + q``.

Linear systems use a sparse LU factorisation (the cut-cell operator is not
symmetric, so conjugate gradients do not apply); the residual of every solve
is checked against ``SOLVE_TOL``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import (NonPositiveState, NotConverged, SolverDiverged,
                      TimeMismatch)
from .grid import Operator

log = logging.getLogger(__name__)

SOLVE_TOL = 1e-10
POSITIVITY_FLOOR = 1e-300
SCHEMES = ("crank-nicolson", "implicit-euler")


@dataclass
class GridSolution:
    """Snapshots of a parabolic run (or a single eigenfunction at t=0)."""

    operator: Operator
    times: np.ndarray
    values: np.ndarray              # (K, M)
    floor: float = POSITIVITY_FLOOR
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values.setflags(write=False)
        self.times.setflags(write=False)

    @property
    def grid(self):
        return self.operator.grid

    @property
    def potential(self):
        return self.operator.potential

    def index_of(self, t: float) -> int:
        k = np.nonzero(np.abs(self.times - t) <= 1e-9 * max(1.0, abs(t)))[0]
        if len(k) == 0:
            raise TimeMismatch(f"no snapshot at t={t}; stored {self.times.tolist()}")
        return int(k[0])

    def at(self, t: float) -> np.ndarray:
        return self.values[self.index_of(t)]

    def log_field(self, t: float = 0.0, **kw):
        from .fields import LogField
        return LogField(self.grid, self.at(t), floor=self.floor, **kw)


@dataclass
class EigenPair:
    eigenvalue: float
    solution: GridSolution
    iterations: int
    residual: float
    shift: float

    @property
    def vector(self) -> np.ndarray:
        return self.solution.values[0]


def _check_residual(M, x, rhs, what):
    res = np.linalg.norm(M @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not res < SOLVE_TOL:
        raise SolverDiverged(f"{what}: linear residual {res:.3e}")
    return res


class _Stepper:
    """One-step maps for CN / IE, refactorising only when q depends on t."""

    def __init__(self, op: Operator, dt: float):
        self.op = op
        self.dt = dt
        self._lu = {}

    def _factor(self, theta, t_new):
        key = (theta, t_new if self.op.time_dependent else None)
        if key not in self._lu:
            if len(self._lu) > 8:
                self._lu.clear()
            I = sp.identity(self.op.size, format="csc")
            M = (I + theta * self.dt * self.op.matrix(t_new)).tocsc()
            self._lu[key] = (M, splu(M))
        return self._lu[key]

    def step(self, u, t, scheme):
        theta = 0.5 if scheme == "crank-nicolson" else 1.0
        t_new = t + self.dt
        rhs = u
        if theta < 1.0:
            rhs = u - (1.0 - theta) * self.dt * (self.op.matrix(t) @ u)
        M, lu = self._factor(theta, t_new)
        u_new = lu.solve(rhs)
        _check_residual(M, u_new, rhs, scheme)
        return u_new


def heat_solve(op: Operator, u0, dt: float, t_end: float,
               scheme: str = "crank-nicolson", snapshots=None,
               startup_steps: int = 2, check_max_principle: bool = True
               ) -> GridSolution:
    """Integrate ``u_t + A u = 0`` from ``u0`` to ``t_end``.

    Crank-Nicolson runs start with ``startup_steps`` implicit Euler steps to
    damp the non-smooth start; any CN step that produces a non-positive value
    is redone with implicit Euler and counted in ``meta['fallback_steps']``.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    if not dt > 0 or not t_end >= 0:
        raise ValueError("dt must be positive and t_end nonnegative")
    u = np.asarray(u0, dtype=float).copy()
    if u.shape != (op.size,):
        raise ValueError(f"u0 has shape {u.shape}, expected ({op.size},)")
    if not np.all(u > 0):
        raise NonPositiveState("initial data must be positive", time=0.0)
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    snaps = sorted(set([0.0, float(t_end)] if snapshots is None
                       else [float(s) for s in snapshots]))
    want = {}
    for s in snaps:
        k = int(round(s / dt))
        if abs(k * dt - s) > 1e-9 * max(1.0, s) or k > n_steps or k < 0:
            raise TimeMismatch(f"snapshot time {s} is not a step of dt={dt} "
                               f"within [0, {t_end}]")
        want[k] = s
    q_nonneg = bool(np.all(op.q_values(0.0) >= 0)) and not op.time_dependent
    stepper = _Stepper(op, dt)
    times, values = [], []
    if 0 in want:
        times.append(want[0])
        values.append(u.copy())
    fallbacks = 0
    for k in range(1, n_steps + 1):
        t = (k - 1) * dt
        use = scheme
        if scheme == "crank-nicolson" and k <= startup_steps:
            use = "implicit-euler"
        u_new = stepper.step(u, t, use)
        if use == "crank-nicolson" and not np.all(u_new > 0):
            fallbacks += 1
            use = "implicit-euler"
            u_new = stepper.step(u, t, use)
        if not np.all(u_new > 0):
            raise NonPositiveState(f"non-positive value at t={t + dt:.6g}",
                                   time=t + dt)
        if use == "implicit-euler" and q_nonneg and check_max_principle:
            if u_new.max() > u.max() * (1 + 1e-12):
                raise SolverDiverged(
                    f"discrete maximum principle violated at t={t + dt:.6g}")
        u = u_new
        if k in want:
            times.append(want[k])
            values.append(u.copy())
    if fallbacks:
        log.info("%d Crank-Nicolson steps redone with implicit Euler", fallbacks)
    meta = {"scheme": scheme, "dt": dt, "t_end": t_end, "steps": n_steps,
            "startup_steps": startup_steps if scheme == "crank-nicolson" else 0,
            "fallback_steps": fallbacks}
    return GridSolution(op, np.array(times), np.array(values), meta=meta)


def eigen_smallest(op: Operator, tol: float = 1e-8,
                   max_iter: int = 2000) -> EigenPair:
    """Smallest eigenpair by shifted inverse iteration.

    The shift sits below the Gershgorin lower bound of ``A`` so that the
    shifted matrix is nonsingular and the Perron eigenvalue is the one
    closest to it.
    """
    A = op.A.tocsr()
    diag = A.diagonal()
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    gersh = float(np.min(diag - off))
    shift = min(0.0, gersh) - 1.0 if gersh <= 0 else 0.0
    B = (A - shift * sp.identity(op.size)).tocsc()
    lu = splu(B)
    # a positive start has a nonzero Perron component and keeps symmetry
    v = np.full(op.size, 1.0 / math.sqrt(op.size))
    lam, res = math.nan, math.inf
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        _check_residual(B, w, v, "inverse iteration")
        w /= np.linalg.norm(w)
        Aw = A @ w
        lam = float(w @ Aw)
        res = float(np.linalg.norm(Aw - lam * w))
        v = w
        if res < tol:
            break
    else:
        raise NotConverged(f"inverse iteration stalled at residual {res:.3e}",
                           residual=res)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    v = v / v.max()
    res = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v))
    sol = GridSolution(op, np.array([0.0]), v[None, :].copy(),
                       meta={"eigenvalue": lam, "iterations": it,
                             "residual": res, "shift": shift})
    return EigenPair(lam, sol, it, res, shift)
