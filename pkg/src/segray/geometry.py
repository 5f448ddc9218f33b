"""Convex domains given by defining functions, and segment kinematics.

A domain is the component of ``{phi > 0}`` containing ``seed``.  Chord
endpoints are located by vectorised bisection on ``phi``; everything else
(bounding box, diameter, rejection sampling) is built on top of that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateSegment, DomainInvalid, NotInside, Unbounded
from .functions import NegLog
from .numerics import central_first, central_second, observed_order

DEGENERATE_TOL = 1e-12
CHORD_RESIDUAL = 1e-10


@dataclass(frozen=True)
class ConvexDomain:
    defining_fn: Callable
    grad_fn: Callable
    hess_fn: Callable
    dimension: int
    diameter_hint: float | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    seed: tuple | None = None
    max_radius: float = 1e3

    def phi(self, x):
        return self.defining_fn(np.asarray(x, dtype=float))

    def grad(self, x):
        return self.grad_fn(np.asarray(x, dtype=float))

    def hess(self, x):
        return self.hess_fn(np.asarray(x, dtype=float))

    def contains(self, x):
        return self.phi(x) > 0.0

    @property
    def seed_point(self) -> np.ndarray:
        if self.seed is None:
            return np.zeros(self.dimension)
        return np.asarray(self.seed, dtype=float)

    def neg_log(self) -> NegLog:
        """``f = -log(phi)``, the model log-concave function of the domain."""
        return NegLog(self.defining_fn, self.grad_fn, self.hess_fn,
                      self.dimension)

    def boundary_distance(self, x):
        """First-order distance estimate ``phi / |grad phi|``."""
        x = np.asarray(x, dtype=float)
        g = np.linalg.norm(self.grad(x), axis=-1)
        return self.phi(x) / np.maximum(g, 1e-300)

    def validate(self, n_samples: int = 400, seed: int = 0) -> None:
        """Probe the load-time invariants; raise ``DomainInvalid`` on failure.

        Strict convexity cannot be certified symbolically, so quasiconcavity
        of ``phi`` is checked on random interior pairs instead.
        """
        rng = np.random.default_rng(seed)
        if self.phi(self.seed_point) <= 0:
            raise DomainInvalid(f"seed {self.seed_point} is not inside")
        lo, hi = bounding_box(self)
        pts = rng.uniform(lo, hi, size=(20 * n_samples, self.dimension))
        pts = pts[self.phi(pts) > 0][:n_samples]
        if len(pts) < 2:
            raise DomainInvalid("could not sample interior points")
        a, b = pts[: len(pts) // 2], pts[len(pts) // 2: 2 * (len(pts) // 2)]
        pa, pb = self.phi(a), self.phi(b)
        pm = self.phi(0.5 * (a + b))
        bad = pm < np.minimum(pa, pb) - 1e-12
        if np.any(bad):
            raise DomainInvalid(
                f"phi is not quasiconcave: {int(bad.sum())} midpoint violations")

        dirs = _directions(self.dimension, 64)
        origin = np.broadcast_to(self.seed_point, dirs.shape)
        _, s_exit = _clip_many(self, origin, dirs)
        exits = origin + s_exit[:, None] * dirs
        diam = float(np.max(np.linalg.norm(exits - exits.mean(0), axis=1))) * 2
        outside = exits + 1e-6 * diam * dirs
        if np.any(self.phi(outside) >= 0):
            raise DomainInvalid("phi is not negative just outside the boundary")
        for frac in (0.0, 0.01, 0.025, 0.05):
            probe = exits - frac * diam * dirs
            g = np.linalg.norm(self.grad(probe), axis=1)
            if np.any(g <= 1e-8):
                raise DomainInvalid("grad phi vanishes near the boundary")


def disc(radius: float = 1.0, center=(0.0, 0.0)) -> ConvexDomain:
    c = np.asarray(center, dtype=float)
    r2 = float(radius) ** 2
    n = c.size

    def phi(x):
        return 1.0 - np.sum((x - c) ** 2, axis=-1) / r2

    def grad(x):
        return -2.0 * (x - c) / r2

    def hess(x):
        return np.broadcast_to(-2.0 / r2 * np.eye(n),
                               np.shape(x)[:-1] + (n, n)).copy()

    return ConvexDomain(phi, grad, hess, n, 2.0 * radius, "disc",
                        {"radius": float(radius), "center": list(c)},
                        seed=tuple(c))


def ellipse(semi_axes=(2.0, 1.0)) -> ConvexDomain:
    """``phi = 1 - sum (x_i / a_i)^2``; also covers ellipsoids in 3D."""
    a = np.asarray(semi_axes, dtype=float)
    w = 1.0 / a ** 2
    n = a.size

    def phi(x):
        return 1.0 - np.sum(w * x ** 2, axis=-1)

    def grad(x):
        return -2.0 * w * x

    def hess(x):
        return np.broadcast_to(np.diag(-2.0 * w),
                               np.shape(x)[:-1] + (n, n)).copy()

    return ConvexDomain(phi, grad, hess, n, 2.0 * float(a.max()), "ellipse",
                        {"semi_axes": list(a)})


def quartic(quadratic=(0.0, 0.0), quartic=(1.0, 1.0)) -> ConvexDomain:
    """``phi = 1 - sum (a_i x_i^2 + b_i x_i^4)`` with ``a_i, b_i >= 0``."""
    a = np.asarray(quadratic, dtype=float)
    b = np.asarray(quartic, dtype=float)
    if a.shape != b.shape or np.any(a < 0) or np.any(b < 0) or np.any(a + b <= 0):
        raise DomainInvalid("quartic coefficients must be nonnegative and "
                            "nonzero in every axis")
    n = a.size

    def phi(x):
        return 1.0 - np.sum(a * x ** 2 + b * x ** 4, axis=-1)

    def grad(x):
        return -(2.0 * a * x + 4.0 * b * x ** 3)

    def hess(x):
        d = -(2.0 * a + 12.0 * b * x ** 2)
        out = np.zeros(np.shape(x)[:-1] + (n, n))
        idx = np.arange(n)
        out[..., idx, idx] = d
        return out

    return ConvexDomain(phi, grad, hess, n, None, "quartic",
                        {"quadratic": list(a), "quartic": list(b)})


BUILTIN_DOMAINS = {"disc": disc, "ellipse": ellipse, "quartic": quartic}


# ---------------------------------------------------------------------------
# segments


@dataclass(frozen=True)
class SegmentFrame:
    x: np.ndarray
    y: np.ndarray
    r: float
    N: np.ndarray
    frame: np.ndarray  # rows e_1..e_n, e_n = N

    @property
    def dimension(self) -> int:
        return self.x.size

    def e(self, i: int) -> np.ndarray:
        """1-based frame vector, matching the usual e_1..e_n labelling."""
        return self.frame[i - 1]

    def theta(self, s):
        s = np.asarray(s, dtype=float)
        return self.x + s[..., None] * self.N


def complete_frame(N: np.ndarray) -> np.ndarray:
    """Orthonormal frame with last row ``N``.

    Gram-Schmidt over the standard basis, skipping the basis vector with the
    largest ``|N_k|``; then ``e_1`` is flipped if needed so that
    ``(N, e_1, ..., e_{n-1})`` is positively oriented.  In 2D this makes
    ``e_1`` the quarter-turn of ``N``.
    """
    N = np.asarray(N, dtype=float)
    n = N.size
    skip = int(np.argmax(np.abs(N)))
    vecs = [N]
    for k in range(n):
        if k == skip:
            continue
        v = np.zeros(n)
        v[k] = 1.0
        for u in vecs:
            v = v - (v @ u) * u
        vecs.append(v / np.linalg.norm(v))
    frame = np.array(vecs[1:] + [N])
    if n > 1 and np.linalg.det(np.array([N] + vecs[1:])) < 0:
        frame[0] = -frame[0]
    return frame


def segment_frame(x, y) -> SegmentFrame:
    x = np.array(x, dtype=float)
    y = np.array(y, dtype=float)
    d = y - x
    r = float(np.linalg.norm(d))
    if r <= DEGENERATE_TOL:
        raise DegenerateSegment(f"|y - x| = {r:.3e} <= {DEGENERATE_TOL}")
    N = d / r
    x.setflags(write=False)
    y.setflags(write=False)
    return SegmentFrame(x, y, r, N, complete_frame(N))


def _r(x, y):
    return np.linalg.norm(y - x, axis=-1)


def _N(x, y):
    d = y - x
    return d / np.linalg.norm(d, axis=-1)[..., None]


def _theta(s, x, y):
    return x + s * _N(x, y)


def shifted_pair(frame: SegmentFrame, i: int, paired: bool, h):
    """Endpoints after a joint shift of size ``h`` along ``E_i`` or ``E~_i``.

    ``E_i`` moves both endpoints by ``+h e_i``; ``E~_i`` moves x by
    ``+h e_i`` and y by ``-h e_i``.
    """
    e = frame.e(i)
    h = np.asarray(h)
    if h.dtype.kind != "f":
        h = h.astype(float)
    h = h[..., None]
    x = frame.x + h * e
    y = frame.y - h * e if paired else frame.y + h * e
    return x, y


def _lemma_quantities(frame, i, paired, s_values):
    def q(h):
        x, y = shifted_pair(frame, i, paired, h)
        th = np.array([_theta(s, x, y) for s in s_values])
        return _r(x, y), _N(x, y), th
    return q


def lemma21_residuals(frame: SegmentFrame, h: float) -> dict:
    """Finite-difference residuals of the segment-kinematics identities.

    Keys are ``"<item>.<quantity>"`` with item 1-5 and quantity in
    ``r, N, theta``; each value is the max over the applicable frame indices
    (and over five equispaced arc parameters for ``theta``).
    """
    if not (1e-8 < h < frame.r / 10):
        raise ValueError(f"step {h} outside (1e-8, r/10)")
    n = frame.dimension
    r = frame.r
    s_values = np.linspace(0.0, r, 5)
    res = {f"{item}.{qty}": 0.0 for item in range(1, 6)
           for qty in ("r", "N", "theta")}

    def upd(key, val):
        res[key] = max(res[key], float(np.max(np.abs(val))))

    for i in range(1, n + 1):
        e = frame.e(i)
        q = _lemma_quantities(frame, i, False, s_values)
        parts0 = q(0.0)
        qp, qm = q(h), q(-h)
        d1 = [(a - b) / (2 * h) for a, b in zip(qp, qm)]
        d2 = [(a - 2 * c + b) / (h * h) for a, b, c in zip(qp, qm, parts0)]
        upd("1.r", d1[0])
        upd("1.N", d1[1])
        upd("1.theta", d1[2] - e)
        upd("4.r", d2[0])
        upd("4.N", d2[1])
        upd("4.theta", d2[2])

        q = _lemma_quantities(frame, i, True, s_values)
        qp, qm = q(h), q(-h)
        d1 = [(a - b) / (2 * h) for a, b in zip(qp, qm)]
        if i < n:
            upd("2.r", d1[0])
            upd("2.N", d1[1] + 2.0 / r * e)
            expected = (1.0 - 2.0 * s_values / r)[:, None] * e
            upd("2.theta", d1[2] - expected)
        else:
            d2 = [(a - 2 * c + b) / (h * h) for a, b, c in zip(qp, qm, parts0)]
            upd("3.r", d1[0] + 2.0)
            upd("3.N", d1[1])
            upd("3.theta", d1[2] - e)
            upd("5.r", d2[0])
            upd("5.N", d2[1])
            upd("5.theta", d2[2])
    return res


def lemma21_check(frame: SegmentFrame, h: float, levels: int = 3) -> dict:
    """Residuals at ``h, h/2, ...`` plus the observed order of each.

    Returns ``{key: {"residuals": [...], "order": float | None}}``; the order
    is ``None`` when the difference quotient is exact to rounding.
    """
    steps = [h / 2 ** k for k in range(levels)]
    per_level = [lemma21_residuals(frame, s) for s in steps]
    out = {}
    for key in per_level[0]:
        errs = [lvl[key] for lvl in per_level]
        floor = 1e3 * np.finfo(float).eps * max(1.0, frame.r) / steps[-1] ** (
            2 if key[0] in "45" else 1)
        out[key] = {"residuals": errs,
                    "order": observed_order(steps, errs, floor)}
    return out


# ---------------------------------------------------------------------------
# chords, bounding box, diameter


def _directions(n: int, count: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        a = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        rho = np.sqrt(1 - z * z)
        ang = np.pi * (1 + 5 ** 0.5) * k
        return np.stack([rho * np.cos(ang), rho * np.sin(ang), z], axis=1)
    raise ValueError("dimension must be 1, 2 or 3")


def _clip_many(domain: ConvexDomain, x, d, iterations: int = 200):
    """Vectorised chord clipping for points ``x`` (all inside) along ``d``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.atleast_2d(np.asarray(d, dtype=float))
    out = []
    for sign in (-1.0, 1.0):
        dd = sign * d
        step = np.full(len(x), domain.diameter_hint or 1.0)
        hi = step.copy()
        lo = np.zeros(len(x))
        pending = domain.phi(x + hi[:, None] * dd) > 0
        while np.any(pending):
            lo[pending] = hi[pending]
            hi[pending] *= 2.0
            if np.any(hi[pending] > domain.max_radius):
                raise Unbounded(
                    f"ray left radius {domain.max_radius} while still inside")
            pending = domain.phi(x + hi[:, None] * dd) > 0
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            inside = domain.phi(x + mid[:, None] * dd) > 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
            width = hi - lo
            if np.all(width <= 4 * np.finfo(float).eps * np.maximum(hi, 1.0)):
                break
        # pick whichever bracket end has the smaller residual
        plo = np.abs(domain.phi(x + lo[:, None] * dd))
        phi_hi = np.abs(domain.phi(x + hi[:, None] * dd))
        out.append(sign * np.where(plo <= phi_hi, lo, hi))
    return out[0], out[1]


def chord_clip(domain: ConvexDomain, x, direction):
    """Parameter interval ``(s_entry, s_exit)`` of ``x + s d`` inside the domain."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if domain.phi(x) <= 0:
        raise NotInside(f"phi({x.tolist()}) = {float(domain.phi(x)):.3e} <= 0")
    lo, hi = _clip_many(domain, x[None], d[None])
    s_entry, s_exit = float(lo[0]), float(hi[0])
    for s in (s_entry, s_exit):
        val = float(domain.phi(x + s * d))
        if abs(val) >= CHORD_RESIDUAL:
            raise RuntimeError(f"chord residual {val:.2e} above tolerance")
    return s_entry, s_exit


def boundary_points(domain: ConvexDomain, count: int = 720) -> np.ndarray:
    dirs = _directions(domain.dimension, count)
    origin = np.broadcast_to(domain.seed_point, dirs.shape)
    _, s_exit = _clip_many(domain, origin, dirs)
    return origin + s_exit[:, None] * dirs


def bounding_box(domain: ConvexDomain, count: int = 720, pad: float = 0.02):
    """Axis-aligned box containing the domain, from ray-marched boundary points."""
    if domain.phi(domain.seed_point) <= 0:
        raise NotInside("domain seed is not inside")
    pts = boundary_points(domain, count)
    lo, hi = pts.min(0), pts.max(0)
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _orthonormal_complement(d):
    frame = complete_frame(d)
    return frame[:-1]


def _chord_length(domain, direction, offset, radius, samples=48):
    """Length of the chord ``{o + s d}`` (0 when the line misses)."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    comp = _orthonormal_complement(d)
    base = domain.seed_point + np.asarray(offset) @ comp
    s = np.linspace(-radius, radius, samples)
    pts = base + s[:, None] * d
    vals = domain.phi(pts)
    k = int(np.argmax(vals))
    if vals[k] <= 0:
        return 0.0
    lo, hi = _clip_many(domain, pts[k][None], d[None])
    return float(hi[0] - lo[0])


def diameter(domain: ConvexDomain, n_directions: int = 180,
             n_offsets: int = 32, samples: int = 48) -> float:
    """Longest chord over a direction/offset grid, then a local search.

    Offsets are parametrised in the complement of each direction through
    the domain seed, and an interior point on each line is found by scanning
    ``phi`` along it; lines that miss the domain contribute zero.
    """
    n = domain.dimension
    bpts = boundary_points(domain, 720 if n == 2 else 2000)
    radius = float(np.max(np.linalg.norm(bpts - domain.seed_point, axis=1))) * 1.05
    if n == 1:
        return float(bpts.max() - bpts.min())
    if n == 2:
        ang = np.pi * np.arange(n_directions) / n_directions
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        dirs = _directions(n, 2 * n_directions)
        dirs = dirs[dirs[:, -1] >= 0]
    grid1 = radius * (2.0 * np.arange(1, n_offsets) / n_offsets - 1.0)
    best = (0.0, None, None)
    for d in dirs:
        comp = _orthonormal_complement(d)
        # projected support of the domain on the complement
        proj = (bpts - domain.seed_point) @ comp.T
        if n == 2:
            offsets = grid1[(grid1 > proj.min()) & (grid1 < proj.max())][:, None]
        else:
            g = grid1[::2]
            offsets = np.array(np.meshgrid(g, g)).reshape(2, -1).T
        if len(offsets) == 0:
            continue
        base = domain.seed_point + offsets @ comp
        s = np.linspace(-radius, radius, samples)
        pts = base[:, None, :] + s[None, :, None] * d
        vals = domain.phi(pts)
        k = np.argmax(vals, axis=1)
        ok = vals[np.arange(len(k)), k] > 0
        if not np.any(ok):
            continue
        starts = pts[np.arange(len(k)), k][ok]
        lo, hi = _clip_many(domain, starts, np.broadcast_to(d, starts.shape))
        lengths = hi - lo
        j = int(np.argmax(lengths))
        if lengths[j] > best[0]:
            best = (float(lengths[j]), d, offsets[ok][j])

    length, d0, o0 = best
    if d0 is None:
        raise Unbounded("no chord found")

    if n == 2:
        a0 = math.atan2(d0[1], d0[0])

        def neg(p):
            d = np.array([math.cos(p[0]), math.sin(p[0])])
            return -_chord_length(domain, d, [p[1]], radius, samples)

        start = np.array([a0, o0[0]])
        scale = [np.pi / n_directions, 2 * radius / n_offsets]
    else:
        def neg(p):
            d = p[:3]
            if np.linalg.norm(d) == 0:
                return 0.0
            return -_chord_length(domain, d, p[3:], radius, samples)

        start = np.concatenate([d0, o0])
        scale = [2.0 / np.sqrt(len(dirs))] * 3 + [4 * radius / n_offsets] * 2
    simplex = [start] + [start + np.eye(len(start))[i] * scale[i]
                         for i in range(len(start))]
    res = minimize(neg, start, method="Nelder-Mead",
                   options={"initial_simplex": np.array(simplex),
                            "xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000})
    return max(length, float(-res.fun))
