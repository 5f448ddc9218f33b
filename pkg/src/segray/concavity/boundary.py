"""Boundary blow-up probes for ``f = -log(defining function)``.

Sequences approach a boundary point ``p`` with outward normal ``nu`` and
unit tangent ``tau`` at boundary distance ``delta_k = 2^-k``:

case1  x_k = seed,               y_k = p - delta nu
case2  case1 with x and y swapped
case3  x_k = p - delta nu,       y_k = p' - delta nu'  (p' across the domain)
case4  x_k = p + delta(-nu - tau), y_k = p + delta(-nu + tau); tail of E_f
case5  same sequence as case4; tail of E_f / r
lemma31  scan of phi(x) * smallest eigenvalue of the Hessian of f near the
         boundary
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SequenceLeftDomain
from ..geometry import ConvexDomain, _directions, chord_clip
from ..quadrature import QuadratureRule
from ..rayenergy import energy, energy_by_gradient_difference
from ..tensorfield import HessianTensor

MODES = ("case1", "case2", "case3", "case4", "case5", "lemma31")
TAIL = 5
DEFAULT_ESCAPE = 10.0
DEFAULT_RATIO_ESCAPE = 1e3
CASE4_FLOOR = -1e-6
C0_STABILITY = 0.2


@dataclass
class BoundarySequenceReport:
    mode: str
    k: np.ndarray
    boundary_distance: np.ndarray
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray
    values: np.ndarray              # E_f, or E_f / r for case5
    energy_check: np.ndarray        # gradient-difference E_f (cross-check)
    monotone_tail: bool = False
    final_value: float = math.nan
    log_slope: float = math.nan
    passed: bool = False
    meta: dict = field(default_factory=dict)

    def columns(self):
        n = self.x.shape[1] if self.x.ndim == 2 else 0
        return (["k", "boundary_distance"] + [f"x{i + 1}" for i in range(n)]
                + [f"y{i + 1}" for i in range(n)] + ["r", "E_f", "E_f_gradient"]
                + (["ratio"] if self.mode == "case5" else []))

    def rows(self):
        for j in range(len(self.k)):
            e = self.values[j] * self.r[j] if self.mode == "case5" else self.values[j]
            row = [int(self.k[j]), float(self.boundary_distance[j])]
            if self.x.ndim == 2:
                row += self.x[j].tolist() + self.y[j].tolist()
            row += [float(self.r[j]), float(e), float(self.energy_check[j])]
            if self.mode == "case5":
                row.append(float(self.values[j]))
            yield row

    def summary(self) -> dict:
        return {"mode": self.mode, "steps": int(len(self.k)),
                "monotone_tail": self.monotone_tail,
                "final_value": self.final_value, "log_slope": self.log_slope,
                "passed": self.passed, **self.meta}


def _frame_at(domain: ConvexDomain, direction):
    """Boundary point hit from the seed along ``direction``, its outward
    unit normal and a unit tangent (2D: quarter turn of the normal)."""
    seed = domain.seed_point
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    _, hi = chord_clip(domain, seed, d)
    p = seed + hi * d
    g = domain.grad(p)
    nu = -g / np.linalg.norm(g)
    if domain.dimension == 2:
        tau = np.array([-nu[1], nu[0]])
    else:
        a = np.eye(domain.dimension)[int(np.argmin(np.abs(nu)))]
        tau = a - (a @ nu) * nu
        tau /= np.linalg.norm(tau)
    return p, nu, tau


def _graded_rule(level: int) -> QuadratureRule:
    return QuadratureRule(panels=2, nodes_per_panel=16, adaptive=True,
                          refine_tol=1e-11, grade_levels=level + 4,
                          max_panels=20000)


def _strictly_increasing(v):
    v = np.asarray(v)
    return bool(len(v) >= 2 and np.all(np.diff(v) > 0))


def _sequence(domain, mode, K, x0, direction):
    p, nu, tau = _frame_at(domain, direction)
    if mode == "case3":
        q, nu2, _ = _frame_at(domain, -np.asarray(direction, dtype=float))
    ks = np.arange(1, K + 1)
    deltas = 0.5 ** ks
    xs, ys = [], []
    for d in deltas:
        if mode in ("case1", "case2"):
            a, b = x0, p - d * nu
            if mode == "case2":
                a, b = b, a
        elif mode == "case3":
            a, b = p - d * nu, q - d * nu2
        else:
            a, b = p + d * (-nu - tau), p + d * (-nu + tau)
        xs.append(a)
        ys.append(b)
    xs, ys = np.array(xs), np.array(ys)
    outside = ~((domain.phi(xs) > 0) & (domain.phi(ys) > 0))
    if np.any(outside):
        k = int(ks[np.argmax(outside)])
        raise SequenceLeftDomain(f"{mode} sequence leaves the domain at k={k}")
    return ks, deltas, xs, ys, p


def boundary_probe(domain: ConvexDomain, f_eval=None, mode: str = "case1",
                   steps: int = 12, x0=None, direction=(1.0, 0.0),
                   escape: float | None = None,
                   probe_distance: float = 0.05, probe_points: int = 64
                   ) -> BoundarySequenceReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    f = domain.neg_log() if f_eval is None else f_eval
    if mode == "lemma31":
        return _lemma31(domain, f, probe_distance, probe_points)
    x0 = domain.seed_point if x0 is None else np.asarray(x0, dtype=float)
    ks, deltas, xs, ys, p = _sequence(domain, mode, steps, x0, direction)
    hess = HessianTensor(f)
    E = np.array([energy(hess, xs[j], ys[j], _graded_rule(int(ks[j])))
                  for j in range(len(ks))])
    Eg = energy_by_gradient_difference(f.grad, xs, ys)
    r = np.linalg.norm(ys - xs, axis=1)
    vals = E / r if mode == "case5" else E
    tail = vals[-TAIL:]
    meta = {"boundary_point": p.tolist(), "seed_point": x0.tolist(),
            "max_quadrature_vs_gradient": float(np.max(np.abs(E - Eg)
                                                       / np.maximum(1, np.abs(Eg))))}
    if mode == "case4":
        monotone = _strictly_increasing(tail)
        passed = bool(np.min(tail) >= CASE4_FLOOR)
        meta.update({"tail_min": float(np.min(tail)), "floor": CASE4_FLOOR})
    else:
        thr = escape if escape is not None else (
            DEFAULT_RATIO_ESCAPE if mode == "case5" else DEFAULT_ESCAPE)
        monotone = _strictly_increasing(tail)
        passed = monotone and float(vals[-1]) > thr
        meta["escape_threshold"] = thr
    pos = vals > 0
    slope = math.nan
    if np.sum(pos) >= 3:
        slope = float(np.polyfit(ks[pos], np.log(vals[pos]), 1)[0])
    return BoundarySequenceReport(mode, ks, deltas, xs, ys, r, vals, Eg,
                                  monotone, float(vals[-1]), slope, passed, meta)


def _c_values(domain, f, dist, frames):
    """``phi(x) * lambda_min(Hess f(x))`` at boundary points pulled inward
    by ``dist`` along the normal; ``frames`` is ``(points, normals)``."""
    P, NU = frames
    xs = P - dist * NU
    if not np.all(domain.phi(xs) > 0):
        raise SequenceLeftDomain("lemma31 probe point outside the domain")
    lam = np.linalg.eigvalsh(f.hess(xs))[:, 0]
    return xs, domain.phi(xs) * lam, domain.phi(xs)


def _lemma31(domain, f, probe_distance, points, levels: int = 6):
    """Empirical ``c0`` at a probe distance and at half of it.

    ``c0(d)`` is the infimum over scanned points within boundary distance
    ``d`` (dyadic levels ``d 2^-j``); ``delta0`` is the largest ``phi`` such
    that the product stays positive at every scanned point below it.
    """
    dirs = _directions(domain.dimension, points)
    pairs = [_frame_at(domain, d)[:2] for d in dirs]
    frames = (np.array([a for a, _ in pairs]), np.array([b for _, b in pairs]))

    def scan(d):
        vals, phis = [], []
        for j in range(levels):
            _, c, ph = _c_values(domain, f, d * 0.5 ** j, frames)
            vals.append(c)
            phis.append(ph)
        return np.concatenate(vals), np.concatenate(phis)

    c_full, ph_full = scan(probe_distance)
    c_half, _ = scan(probe_distance / 2)
    c0, c0_half = float(np.min(c_full)), float(np.min(c_half))
    # coarser outward scan for delta0
    dists = probe_distance * 2.0 ** np.arange(0, 6)
    phi_ok = 0.0
    for d in dists:
        try:
            _, c, ph = _c_values(domain, f, d, frames)
        except SequenceLeftDomain:
            break
        if np.min(c) <= 0:
            break
        phi_ok = max(phi_ok, float(np.max(ph)))
    delta0 = max(phi_ok, float(np.max(ph_full)) if c0 > 0 else 0.0)
    stable = bool(c0 > 0 and abs(c0 - c0_half) <= C0_STABILITY * c0)
    k = np.arange(1, levels + 1)
    dist = probe_distance * 0.5 ** (k - 1)
    per_level = np.array([np.min(c_full[j * points:(j + 1) * points])
                          for j in range(levels)])
    return BoundarySequenceReport(
        "lemma31", k, dist, np.zeros((levels, 0)), np.zeros((levels, 0)),
        np.zeros(levels), per_level, per_level, stable, c0, math.nan,
        bool(c0 > 0 and stable),
        {"c0": c0, "c0_half_distance": c0_half, "delta0": delta0,
         "probe_distance": probe_distance, "probe_points": points,
         "stable": stable})
