"""Line-segment energy of tensor fields and its derivative identities.

``energy(tau, x, y)`` integrates ``tau(N, N)`` along the segment from x to y.
The identity helpers compare finite differences of the energy under joint
endpoint shifts with closed-form right-hand sides:

========  ============  ===================================================
id        shift         right-hand side
========  ============  ===================================================
thm-2.2   E_i, first    E of grad_{e_i} tau
thm-2.3   E~_i, first   i<n: E of grad_{e_i} tau minus (2/r) times the
                        integral of (s tau_nn;i + 2 tau_in);
                        i=n: E of grad_{e_n} tau minus 2 tau_nn(y)
thm-2.4   E_i, second   E of grad_{e_i} grad_{e_i} tau
thm-2.5   E~_n, second  E of grad_{e_n} grad_{e_n} tau
========  ============  ===================================================
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateSegment
from .geometry import DEGENERATE_TOL, SegmentFrame, segment_frame, shifted_pair
from .numerics import observed_order, richardson
from .quadrature import QuadratureRule, integrate_adaptive, integrate_unit
from .tensorfield import TensorField, derived_tensor

DEFAULT_RULE = QuadratureRule()

IDENTITIES = ("thm-2.2", "thm-2.3", "thm-2.4", "thm-2.5")


# Finite differences of the energy divide rounding noise by h or h^2; the
# shifted energies are therefore formed in extended precision where the
# platform has it (80-bit on x86), which keeps second differences at h=1e-3
# clean to ~1e-12.
FD_DTYPE = np.longdouble


def _pairs(x, y, dtype=float):
    x = np.asarray(x, dtype=dtype)
    y = np.asarray(y, dtype=dtype)
    d = y - x
    r = np.linalg.norm(d, axis=-1)
    if np.any(r <= DEGENERATE_TOL):
        raise DegenerateSegment("segment endpoints coincide")
    return x, y, r, d / r[..., None]


def segment_integral(integrand, x, y, rule: QuadratureRule = DEFAULT_RULE,
                     dtype=float):
    """``int_0^r integrand(s, theta(s)) ds`` for a batch of segments.

    ``integrand(s, pts, N)`` receives ``s`` of shape ``(..., M)``, points of
    shape ``(..., M, n)`` and the unit directions broadcast as ``(..., 1, n)``,
    and returns ``(..., M)``.
    """
    x, y, r, N = _pairs(x, y, dtype)
    if rule.adaptive:
        return _adaptive_batch(integrand, x, y, r, N, rule)

    def fn(t):
        s = r[..., None] * t
        pts = x[..., None, :] + s[..., None] * N[..., None, :]
        return integrand(s, pts, N[..., None, :])

    return r * integrate_unit(fn, rule)


def _adaptive_batch(integrand, x, y, r, N, rule):
    flat_x = np.reshape(x, (-1, x.shape[-1]))
    flat_N = np.reshape(N, (-1, N.shape[-1]))
    flat_r = np.ravel(r)
    out = np.empty(len(flat_r))
    for k, (xk, Nk, rk) in enumerate(zip(flat_x, flat_N, flat_r)):
        def fn(t, xk=xk, Nk=Nk, rk=rk):
            s = rk * t
            return integrand(s, xk + s[:, None] * Nk, Nk[None, :])
        out[k] = rk * integrate_adaptive(fn, rule)
    return out.reshape(np.shape(r))


def energy(tau: TensorField, x, y, rule: QuadratureRule = DEFAULT_RULE,
           dtype=float):
    """Line-segment energy; scalar for single points, array for batches."""

    def integrand(s, pts, NN):
        return np.einsum("...ab,...a,...b->...", tau.eval(pts), NN, NN)

    out = segment_integral(integrand, x, y, rule, dtype)
    if np.ndim(out) == 0:
        return float(out) if dtype is float else out[()]
    return out


def energy_by_gradient_difference(f_grad, x, y):
    """``<grad f(y) - grad f(x), N>``: exact energy of a Hessian field."""
    x, y, r, N = _pairs(x, y)
    out = np.sum((f_grad(y) - f_grad(x)) * N, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# identities


def _shift_layout(identity_id: str, i: int, n: int):
    """(paired, derivative order, frame index) for an identity."""
    if identity_id == "thm-2.2":
        return False, 1, i
    if identity_id == "thm-2.3":
        return True, 1, i
    if identity_id == "thm-2.4":
        return False, 2, i
    if identity_id == "thm-2.5":
        return True, 2, n
    raise ValueError(f"unknown identity {identity_id!r}")


def identity_label(identity_id: str, i: int, n: int) -> str:
    if identity_id == "thm-2.3":
        return "thm-2.3-n" if i == n else "thm-2.3-i<n"
    if identity_id == "thm-2.5":
        return "thm-2.5"
    return f"{identity_id}-i"


def identity_rhs(identity_id: str, tau: TensorField, frame: SegmentFrame,
                 rule: QuadratureRule = DEFAULT_RULE, i: int | None = None
                 ) -> float:
    """Closed-form right-hand side; ``i`` is the 1-based frame index."""
    n = frame.dimension
    if identity_id == "thm-2.5":
        i = n
    if i is None or not 1 <= i <= n:
        raise ValueError(f"frame index {i} out of range for n={n}")
    e = frame.e(i)
    x, y = frame.x, frame.y
    if identity_id == "thm-2.2":
        return energy(derived_tensor(tau, e, 1), x, y, rule)
    if identity_id in ("thm-2.4", "thm-2.5"):
        return energy(derived_tensor(tau, e, 2), x, y, rule)
    if identity_id != "thm-2.3":
        raise ValueError(f"unknown identity {identity_id!r}")
    base = energy(derived_tensor(tau, e, 1), x, y, rule)
    N = frame.N
    if i == n:
        return base - 2.0 * float(N @ tau.eval(y) @ N)

    def correction(s, pts, _N):
        d1 = tau.eval_d1(pts)
        t_nn_i = np.einsum("...abc,a,b,c->...", d1, N, N, e)
        t_in = np.einsum("...ab,a,b->...", tau.eval(pts), e, N)
        return s * t_nn_i + 2.0 * t_in

    corr = float(segment_integral(correction, x, y, rule))
    return base - 2.0 / frame.r * corr


def _difference_quotients(identity_id, tau, frame, rule, steps, i):
    """Raw central differences of the energy at each step in ``steps``."""
    n = frame.dimension
    paired, order, idx = _shift_layout(identity_id, i, n)
    steps = np.asarray(steps, dtype=FD_DTYPE)
    shifts = np.concatenate([steps, -steps, np.zeros(1, dtype=FD_DTYPE)])
    xs, ys = shifted_pair(frame, idx, paired, shifts)
    if np.any(np.linalg.norm(ys - xs, axis=-1) <= DEGENERATE_TOL):
        raise DegenerateSegment("shifted pair collapsed")
    E = energy(tau, xs, ys, rule, dtype=FD_DTYPE)
    k = len(steps)
    Ep, Em, E0 = E[:k], E[k:2 * k], E[-1]
    if order == 1:
        dq = (Ep - Em) / (2.0 * steps)
    else:
        dq = (Ep - 2.0 * E0 + Em) / steps ** 2
    return dq.astype(float), E.astype(float), order


def identity_fd(identity_id: str, tau: TensorField, frame: SegmentFrame,
                rule: QuadratureRule = DEFAULT_RULE, h: float = 1e-3,
                i: int | None = None) -> float:
    """Richardson-extrapolated finite difference over ``{h, h/2}``."""
    n = frame.dimension
    if identity_id == "thm-2.5":
        i = n
    if not 1e-6 < h < frame.r / 20:
        raise ValueError(f"step {h} outside (1e-6, r/20) for r={frame.r}")
    dq, _, _ = _difference_quotients(identity_id, tau, frame, rule,
                                     [h, h / 2], i)
    return float(richardson(dq[0], dq[1], order=2))


@dataclass
class IdentityReport:
    identity_id: str
    index: int
    lhs_fd: float
    rhs_formula: float
    abs_err: float
    rel_err: float
    h: float
    x: tuple
    y: tuple
    pair_index: int = 0
    raw_steps: tuple = ()
    raw_errors: tuple = ()
    order: float | None = None
    error: str | None = None

    def row(self) -> dict:
        d = asdict(self)
        d["x"] = list(self.x)
        d["y"] = list(self.y)
        return d


def identity_report(identity_id, tau, frame, rule=DEFAULT_RULE, h=1e-3,
                    i=None, slope_steps=None, pair_index=0) -> IdentityReport:
    n = frame.dimension
    if identity_id == "thm-2.5":
        i = n
    if slope_steps is None:
        slope_steps = (h, h / 2, h / 4)
    steps = sorted(set([h, h / 2]) | set(slope_steps), reverse=True)
    if not 1e-6 < h < frame.r / 20:
        raise ValueError(f"step {h} outside (1e-6, r/20) for r={frame.r}")
    dq, E, order = _difference_quotients(identity_id, tau, frame, rule,
                                         steps, i)
    by_step = dict(zip(steps, dq))
    lhs = float(richardson(by_step[h], by_step[h / 2], order=2))
    rhs = identity_rhs(identity_id, tau, frame, rule, i)
    abs_err = abs(lhs - rhs)
    rel_err = abs_err / max(1.0, abs(rhs))
    raw = [abs(by_step[s] - rhs) for s in slope_steps]
    # rounding floor of the quotient: energies carry ~eps * scale error
    scale = max(float(np.max(np.abs(E))), frame.r)
    noise = 64 * np.finfo(FD_DTYPE).eps * scale / min(slope_steps) ** order
    obs = observed_order(slope_steps, raw, noise_floor=10 * noise)
    return IdentityReport(
        identity_label(identity_id, i, n), i, lhs, rhs, abs_err, rel_err, h,
        tuple(frame.x.tolist()), tuple(frame.y.tolist()), pair_index,
        tuple(slope_steps), tuple(raw), obs)


def identity_suite(tau: TensorField, pairs, rule: QuadratureRule = DEFAULT_RULE,
                   h: float = 1e-3, slope_steps=None) -> list:
    """Every identity, every applicable frame index, every pair.

    Per-pair failures are recorded in the report's ``error`` field rather
    than aborting the suite.
    """
    reports = []
    for k, (x, y) in enumerate(pairs):
        try:
            frame = segment_frame(x, y)
        except DegenerateSegment as exc:
            reports.append(IdentityReport("pair", 0, math.nan, math.nan,
                                          math.nan, math.nan, h, tuple(x),
                                          tuple(y), k, error=exc.name))
            continue
        n = frame.dimension
        jobs = [("thm-2.2", i) for i in range(1, n + 1)]
        jobs += [("thm-2.3", i) for i in range(1, n + 1)]
        jobs += [("thm-2.4", i) for i in range(1, n + 1)]
        jobs += [("thm-2.5", n)]
        for ident, i in jobs:
            try:
                reports.append(identity_report(ident, tau, frame, rule, h, i,
                                               slope_steps, k))
            except (DegenerateSegment, ValueError) as exc:
                name = getattr(exc, "name", type(exc).__name__)
                reports.append(IdentityReport(
                    identity_label(ident, i, n), i, math.nan, math.nan,
                    math.nan, math.nan, h, tuple(frame.x.tolist()),
                    tuple(frame.y.tolist()), k, error=name))
    return reports


def suite_passed(reports, rel_tol: float = 1e-5, min_order: float = 1.9) -> bool:
    for rep in reports:
        if rep.error is not None or not rep.rel_err < rel_tol:
            return False
        if rep.order is not None and rep.order < min_order:
            return False
    return True
