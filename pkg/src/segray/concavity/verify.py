"""Sampled verification of log-concavity lower bounds and comparisons.

``E_f`` is always taken from the gradient difference ``<grad f(y) -
grad f(x), N>``; a small share of the samples is re-evaluated by quadrature
of the interpolated Hessian and the largest discrepancy is reported.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import HypothesisViolated, OutsideDomain, SamplerStarved
from ..geometry import ConvexDomain, _directions, bounding_box, diameter
from ..quadrature import QuadratureRule
from ..rayenergy import energy, energy_by_gradient_difference
from ..tensorfield import HessianTensor

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 0.02           # fraction of the diameter
DEFAULT_TOL_REL = 1e-3
RING_DIRECTIONS = 64
MAX_REJECTION = 0.999
SPOT_RULE = QuadratureRule(panels=8, nodes_per_panel=8)


# ---------------------------------------------------------------------------
# sampling


def clearance_ok(domain: ConvexDomain, pts, dist: float) -> np.ndarray:
    """True where the ball of radius ``dist`` is inside, tested on a ring."""
    pts = np.asarray(pts, dtype=float)
    ok = domain.phi(pts) > 0
    if dist <= 0:
        return ok
    dirs = _directions(domain.dimension, RING_DIRECTIONS)
    ring = pts[:, None, :] + dist * dirs[None, :, :]
    return ok & np.all(domain.phi(ring) > 0, axis=1)


def sample_points(domain: ConvexDomain, count: int, dist: float,
                  rng: np.random.Generator, batch: int = 4096) -> np.ndarray:
    lo, hi = bounding_box(domain)
    out, tried = [], 0
    have = 0
    while have < count:
        cand = rng.uniform(lo, hi, size=(batch, domain.dimension))
        tried += batch
        good = cand[clearance_ok(domain, cand, dist)]
        out.append(good)
        have += len(good)
        if tried >= 20 * batch and have / tried < 1 - MAX_REJECTION:
            raise SamplerStarved(
                f"accepted {have} of {tried} candidates at clearance {dist:g}")
    return np.concatenate(out)[:count]


def sample_pairs(domain: ConvexDomain, count: int, dist: float, seed: int,
                 min_r: float = 1e-9):
    rng = np.random.default_rng(seed)
    pts = sample_points(domain, 2 * count + 16, dist, rng)
    x, y = pts[0::2], pts[1::2]
    keep = np.linalg.norm(y - x, axis=1) > min_r
    x, y = x[keep][:count], y[keep][:count]
    if len(x) < count:
        raise SamplerStarved("too many coincident pairs")
    return x, y


# ---------------------------------------------------------------------------
# reports


@dataclass
class VerificationReport:
    kind: str
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    r: np.ndarray
    energy: np.ndarray
    bound: np.ndarray
    tol: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        order = np.lexsort((np.arange(len(self.margin)), self.margin))
        for name in ("x", "y", "t", "r", "energy", "bound", "tol"):
            setattr(self, name, np.asarray(getattr(self, name))[order])

    @property
    def margin(self) -> np.ndarray:
        return np.asarray(self.energy) - np.asarray(self.bound)

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin)) if len(self.r) else math.nan

    @property
    def violations(self) -> int:
        return int(np.sum(self.margin < -self.tol))

    @property
    def passed(self) -> bool:
        return len(self.r) > 0 and self.violations == 0

    def columns(self):
        n = self.x.shape[1]
        names = ([f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
                 + ["t", "r", "E_f", "bound", "margin", "tol"])
        return names

    def rows(self):
        m = self.margin
        for k in range(len(self.r)):
            yield ([*self.x[k].tolist(), *self.y[k].tolist(),
                    float(self.t[k]), float(self.r[k]), float(self.energy[k]),
                    float(self.bound[k]), float(m[k]), float(self.tol[k])])

    def summary(self) -> dict:
        by_t = {}
        for t in np.unique(self.t):
            sel = self.t == t
            by_t[repr(float(t))] = float(np.min(self.margin[sel]))
        return {"kind": self.kind, "samples": int(len(self.r)),
                "min_margin": self.min_margin, "violations": self.violations,
                "passed": self.passed, "min_margin_by_t": by_t, **self.meta}


# ---------------------------------------------------------------------------
# helpers


def _field_at(f_eval, t):
    """Resolve the various ways a time-indexed f may be supplied."""
    if hasattr(f_eval, "log_field"):
        return f_eval.log_field(t)
    if isinstance(f_eval, dict):
        return f_eval[t]
    if hasattr(f_eval, "grad"):
        return f_eval
    return f_eval(t)


def _tolerance(bound, tol_abs, tol_rel):
    bound = np.asarray(bound, dtype=float)
    if tol_abs is not None:
        return np.full_like(bound, float(tol_abs))
    return tol_rel * np.maximum(1.0, np.abs(bound))


def gradient_energy(fld, x, y, t=0.0):
    return energy_by_gradient_difference(lambda p: fld.grad(p, t), x, y)


def _spot_check(fld, x, y, fraction, rng):
    k = max(1, int(round(fraction * len(x))))
    idx = np.sort(rng.choice(len(x), size=min(k, len(x)), replace=False))
    try:
        quad = energy(HessianTensor(fld), x[idx], y[idx], SPOT_RULE)
    except OutsideDomain:
        return {"spot_checked": 0}
    grad = gradient_energy(fld, x[idx], y[idx])
    diff = np.abs(np.atleast_1d(quad) - np.atleast_1d(grad))
    return {"spot_checked": int(len(idx)),
            "spot_max_abs_diff": float(diff.max()),
            "spot_max_rel_diff": float(np.max(diff / np.maximum(1.0, np.abs(grad))))}


def _cutoff_distance(domain, cutoff, D=None):
    D = diameter(domain) if D is None else D
    return cutoff * D, D


def _stack(parts, kind, meta):
    cat = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    return VerificationReport(kind, cat["x"], cat["y"], cat["t"], cat["r"],
                              cat["energy"], cat["bound"], cat["tol"], meta)


# ---------------------------------------------------------------------------
# operations


def verify_lower_bound(f_eval, profile, m: float, domain: ConvexDomain,
                       samples: int = 1000, t_list=(0.0,),
                       cutoff: float = DEFAULT_CUTOFF, seed: int = 0,
                       tol_abs: float | None = None,
                       tol_rel: float = DEFAULT_TOL_REL,
                       spot_fraction: float = 0.01,
                       diameter_value: float | None = None
                       ) -> VerificationReport:
    """Check ``E_f(x, y, t) >= m psi(r/2, t)`` on sampled pairs."""
    dist, D = _cutoff_distance(domain, cutoff, diameter_value)
    x, y = sample_pairs(domain, samples, dist, seed)
    r = np.linalg.norm(y - x, axis=1)
    if np.max(r) / 2 > profile.s_end + 1e-12:
        raise OutsideDomain("sampled r/2 exceeds the profile range")
    rng = np.random.default_rng(seed + 1)
    parts, spots = [], {}
    for t in t_list:
        fld = _field_at(f_eval, t)
        E = gradient_energy(fld, x, y, t)
        bound = m * profile.psi(r / 2, t)
        parts.append({"x": x, "y": y, "t": np.full(len(r), float(t)), "r": r,
                      "energy": E, "bound": bound,
                      "tol": _tolerance(bound, tol_abs, tol_rel)})
        if spot_fraction > 0:
            spots[repr(float(t))] = _spot_check(fld, x, y, spot_fraction, rng)
    meta = {"count": samples, "cutoff": cutoff, "cutoff_distance": dist,
            "diameter": D, "seed": seed, "m": m, "spot_checks": spots,
            "tol_abs": tol_abs, "tol_rel": tol_rel}
    return _stack(parts, "lower-bound", meta)


def _hypothesis(name, lhs, rhs, x, y, tol):
    margin = lhs - rhs
    k = int(np.argmin(margin))
    info = {"check": name, "min_margin": float(margin[k]),
            "passed": bool(np.all(margin >= -tol))}
    if not info["passed"]:
        worst = {"x": x[k].tolist(), "y": y[k].tolist(),
                 "lhs": float(lhs[k]), "rhs": float(rhs[k]),
                 "margin": float(margin[k])}
        raise HypothesisViolated(
            f"{name} fails: margin {margin[k]:.3e} at x={x[k].tolist()}, "
            f"y={y[k].tolist()}", worst=worst)
    return info


def _q_energy(q, x, y, t):
    if q is None:
        return np.zeros(len(x))
    return energy_by_gradient_difference(lambda p: q.grad(p, t), x, y)


def _model_potential_energy(model, r, t):
    return 2.0 * model.q_of(r / 2, t, 1)


def _comparison(kind, field_for, model, q, domain, samples, t_list, cutoff,
                seed, tol_abs, tol_rel, diameter_value, check_initial,
                spot_fraction):
    dist, D = _cutoff_distance(domain, cutoff, diameter_value)
    x, y = sample_pairs(domain, samples, dist, seed)
    r = np.linalg.norm(y - x, axis=1)
    if np.max(r) / 2 > model.s_max:
        raise OutsideDomain("sampled r/2 exceeds the model interval")
    hyp = []
    # hypotheses first; any failure aborts before conclusion margins exist
    for t in sorted(set([0.0] + [float(t) for t in t_list])) if check_initial \
            else [float(t) for t in t_list]:
        lhs = _q_energy(q, x, y, t)
        rhs = _model_potential_energy(model, r, t)
        hyp.append({"t": t, **_hypothesis(f"potential energy at t={t:g}", lhs,
                                          rhs, x, y, _tolerance(rhs, tol_abs, tol_rel))})
    if check_initial:
        fld = field_for(0.0)
        lhs = gradient_energy(fld, x, y, 0.0)
        rhs = model.energy(r, 0.0)
        hyp.append({"t": 0.0, **_hypothesis("initial log-concavity", lhs, rhs,
                                            x, y, _tolerance(rhs, tol_abs, tol_rel))})
    rng = np.random.default_rng(seed + 1)
    parts, spots = [], {}
    for t in t_list:
        fld = field_for(t)
        E = gradient_energy(fld, x, y, t)
        bound = model.energy(r, t)
        parts.append({"x": x, "y": y, "t": np.full(len(r), float(t)), "r": r,
                      "energy": E, "bound": bound,
                      "tol": _tolerance(bound, tol_abs, tol_rel)})
        if spot_fraction > 0:
            spots[repr(float(t))] = _spot_check(fld, x, y, spot_fraction, rng)
    meta = {"count": samples, "cutoff": cutoff, "cutoff_distance": dist,
            "diameter": D, "seed": seed, "hypotheses": hyp,
            "spot_checks": spots, "tol_abs": tol_abs, "tol_rel": tol_rel,
            "model_L": model.L}
    return _stack(parts, kind, meta)


def verify_comparison_elliptic(solution, model, q=None, domain=None,
                               samples: int = 10000,
                               cutoff: float = DEFAULT_CUTOFF, seed: int = 0,
                               tol_abs: float | None = None,
                               tol_rel: float = DEFAULT_TOL_REL,
                               spot_fraction: float = 0.01,
                               diameter_value: float | None = None
                               ) -> VerificationReport:
    """First eigenfunction against the 1D model eigenfunction."""
    domain = domain if domain is not None else solution.grid.domain
    fld = _field_at(solution, 0.0)
    return _comparison("comparison-elliptic", lambda t: fld, model, q, domain,
                       samples, [0.0], cutoff, seed, tol_abs, tol_rel,
                       diameter_value, False, spot_fraction)


def verify_comparison_parabolic(solution, model, q=None, domain=None,
                                samples: int = 1000, t_list=(0.05, 0.1, 0.2),
                                cutoff: float = DEFAULT_CUTOFF, seed: int = 0,
                                tol_abs: float | None = None,
                                tol_rel: float = DEFAULT_TOL_REL,
                                spot_fraction: float = 0.01,
                                diameter_value: float | None = None,
                                kind: str = "comparison-parabolic",
                                check_initial: bool = True
                                ) -> VerificationReport:
    domain = domain if domain is not None else solution.grid.domain
    for t in list(t_list) + ([0.0] if check_initial else []):
        solution.index_of(t)
        model.index_of(t)
    return _comparison(kind, lambda t: _field_at(solution, t), model, q,
                       domain, samples, list(t_list), cutoff, seed, tol_abs,
                       tol_rel, diameter_value, check_initial, spot_fraction)


def verify_model_self(model, t_list=None, count: int = 200,
                      tol_abs: float = 1e-8) -> VerificationReport:
    """The interval model against itself with ``x = -s``, ``y = s``."""
    times = list(model.times) if t_list is None else list(t_list)
    s = np.linspace(0.0, model.s_max, count + 1)[1:]
    parts = []
    for t in times:
        x, y = -s, s
        # 1D gradient difference: N = +1
        E = model.fbar_s(y, t) - model.fbar_s(x, t)
        bound = model.energy(y - x, t)
        parts.append({"x": x[:, None], "y": y[:, None],
                      "t": np.full(len(s), float(t)), "r": y - x, "energy": E,
                      "bound": bound, "tol": np.full(len(s), tol_abs)})
    return _stack(parts, "model-self", {"count": count, "model_L": model.L})
