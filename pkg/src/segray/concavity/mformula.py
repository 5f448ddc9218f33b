"""The bound constant ``m``: minimum over ``(s, t)`` of

    (A + sqrt(A^2 + 4 phi psi psi_s)) / (2 psi_s psi),   A = psi_ss - psi_t

(elliptic: ``psi_t`` dropped, no ``m0``).  The quotient is 0/0 at s = 0;
below ``LIMIT_FRACTION * D`` it is replaced by ``psi_sss(0) / psi_s(0)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import LimitUndefined
from .profiles import PotentialModulus, Profile

LIMIT_FRACTION = 1e-3
MIN_NS, MIN_NT = 64, 16


@dataclass
class MResult:
    m: float
    s_argmin: float
    t_argmin: float
    from_limit: bool
    clamped_by_m0: bool = False
    grid: tuple = ()
    meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"m": self.m, "s_argmin": self.s_argmin, "t_argmin": self.t_argmin,
                "from_limit": self.from_limit, "clamped_by_m0": self.clamped_by_m0,
                "grid": list(self.grid), **self.meta}


def limit_value(profile: Profile, t: float = 0.0) -> float:
    z = np.zeros(1)
    ps0 = float(profile.psi_s(z, t)[0])
    if not ps0 > 0:
        raise LimitUndefined(f"psi_s(0, {t:g}) = {ps0:.3e} is not positive")
    return float(profile.psi_sss(z, t)[0]) / ps0 ** 2


def raw_quotient(profile: Profile, phi_mod: PotentialModulus, s, t=0.0,
                 parabolic: bool = True):
    """The quotient itself, without the small-``s`` replacement."""
    s = np.asarray(s, dtype=float)
    psi = profile.psi(s, t)
    ps = profile.psi_s(s, t)
    A = profile.psi_ss(s, t)
    if parabolic:
        A = A - profile.psi_t(s, t)
    c = 4.0 * phi_mod(s, t) * psi * ps
    root = np.sqrt(A * A + np.maximum(c, 0.0))
    # rationalised form avoids cancellation when A < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.where(A >= 0, A + root, c / (root - A))
        return num / (2.0 * ps * psi)


def m_quotient(profile: Profile, phi_mod: PotentialModulus, s, t=0.0,
               parabolic: bool = True):
    s = np.asarray(s, dtype=float)
    eps = LIMIT_FRACTION * profile.diameter
    out = raw_quotient(profile, phi_mod, s, t, parabolic)
    small = s < eps
    if np.any(small):
        out = np.where(small, limit_value(profile, t), out)
    return out


def _refine_s(profile, phi_mod, t, lo, hi, parabolic):
    eps = LIMIT_FRACTION * profile.diameter
    lo = max(lo, eps)
    if hi <= lo:
        return None

    def fn(s):
        return float(m_quotient(profile, phi_mod, np.array([s]), t, parabolic)[0])

    res = minimize_scalar(fn, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def _minimise(profile, phi_mod, ns, nt, parabolic):
    if ns < MIN_NS or (parabolic and profile.time_dependent
                       and profile.times is None and nt < MIN_NT):
        raise ValueError(f"grid must be at least {MIN_NS} x {MIN_NT}")
    profile.validate(ns, nt)
    times = profile.t_grid(nt) if parabolic else np.zeros(1)
    phi_mod.validate(profile.s_end, times)
    s = np.linspace(0.0, profile.s_end, ns)
    eps = LIMIT_FRACTION * profile.diameter
    best = (math.inf, 0.0, 0.0, False)
    for t in times:
        for tt in np.atleast_1d(t):
            limit_value(profile, tt)
        q = m_quotient(profile, phi_mod, s, t, parabolic)
        k = int(np.nanargmin(q))
        cand = (float(q[k]), float(s[k]), float(t), bool(s[k] < eps))
        ref = _refine_s(profile, phi_mod, t, s[max(k - 1, 0)],
                        s[min(k + 1, ns - 1)], parabolic)
        if ref is not None and ref[1] < cand[0]:
            cand = (ref[1], ref[0], float(t), False)
        if cand[0] < best[0]:
            best = cand
    if parabolic and profile.time_dependent and profile.times is None:
        # golden search in t around the grid argmin at fixed s
        s_star = best[1]
        dt = profile.horizon / (nt - 1)
        lo_t, hi_t = max(0.0, best[2] - dt), min(profile.horizon, best[2] + dt)

        def ft(t):
            return float(m_quotient(profile, phi_mod, np.array([s_star]), t)[0])

        res = minimize_scalar(ft, bounds=(lo_t, hi_t), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < best[0]:
            t_star = float(res.x)
            ref = _refine_s(profile, phi_mod, t_star,
                            max(0.0, s_star - profile.s_end / (ns - 1)),
                            min(profile.s_end, s_star + profile.s_end / (ns - 1)),
                            parabolic)
            val = float(res.fun)
            if ref is not None and ref[1] < val:
                s_star, val = ref
            best = (val, s_star, t_star, bool(s_star < eps))
    return best


def compute_m_parabolic(profile: Profile, phi_mod: PotentialModulus,
                        m0: float, ns: int = 256, nt: int = 16) -> MResult:
    if not m0 >= 0:
        raise ValueError("m0 must be nonnegative")
    val, s, t, lim = _minimise(profile, phi_mod, ns, nt, parabolic=True)
    clamped = m0 < val
    m = min(m0, val)
    return MResult(m, s, t, lim, clamped, (ns, nt),
                   {"quotient_min": val, "m0": m0, "kind": "parabolic"})


def compute_m_elliptic(profile: Profile, phi_mod: PotentialModulus,
                       ns: int = 256) -> MResult:
    val, s, t, lim = _minimise(profile, phi_mod, ns, 1, parabolic=False)
    return MResult(val, s, 0.0, lim, False, (ns,),
                   {"quotient_min": val, "kind": "elliptic"})


def quotient_curve(profile: Profile, phi_mod: PotentialModulus, t: float = 0.0,
                   ns: int = 256, parabolic: bool = True):
    """``(s, quotient)`` samples for plotting."""
    s = np.linspace(0.0, profile.s_end, ns)
    return s, m_quotient(profile, phi_mod, s, t, parabolic)
