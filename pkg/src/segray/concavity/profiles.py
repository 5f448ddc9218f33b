"""Bound profiles ``psi(s, t)`` and potential moduli ``phi_mod(s, t)``.

Every callable takes an array of ``s`` and a scalar ``t`` and returns an
array shaped like ``s``.  Elliptic profiles ignore ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial as P1

from ..errors import ProfileInvalid

ZERO_TOL = 1e-8


def _zeros(s, t=0.0):
    return np.zeros_like(np.asarray(s, dtype=float))


@dataclass
class Profile:
    psi: Callable
    psi_s: Callable
    psi_ss: Callable
    psi_sss: Callable
    psi_t: Callable = _zeros
    diameter: float = 2.0
    horizon: float = 0.0            # T; 0 for time-independent profiles
    source: str = "analytic"
    s_max: float | None = None      # upper end of the usable s-range
    times: tuple | None = None      # admissible t values (model-backed)
    meta: dict = field(default_factory=dict)

    @property
    def s_end(self) -> float:
        half = self.diameter / 2.0
        return half if self.s_max is None else min(half, self.s_max)

    @property
    def time_dependent(self) -> bool:
        return self.horizon > 0

    def t_grid(self, nt: int) -> np.ndarray:
        if self.times is not None:
            return np.asarray(self.times, dtype=float)
        if not self.time_dependent:
            return np.zeros(1)
        return np.linspace(0.0, self.horizon, nt)

    def validate(self, ns: int = 256, nt: int = 16) -> None:
        s = np.linspace(0.0, self.s_end, ns)
        for t in self.t_grid(nt):
            p0 = float(self.psi(np.zeros(1), t)[0])
            pss0 = float(self.psi_ss(np.zeros(1), t)[0])
            if abs(p0) > ZERO_TOL:
                raise ProfileInvalid(f"psi(0, {t:g}) = {p0:.3e}, expected 0")
            if abs(pss0) > ZERO_TOL:
                raise ProfileInvalid(f"psi_ss(0, {t:g}) = {pss0:.3e}, expected 0")
            ps = self.psi_s(s, t)
            if not np.all(ps > 0):
                k = int(np.argmin(ps))
                raise ProfileInvalid(
                    f"psi_s must be positive; psi_s({s[k]:.4g}, {t:g}) = {ps[k]:.3e}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def polynomial(cls, coefficients, diameter: float) -> "Profile":
        """Time-independent ``psi(s) = sum_k c_k s^k``."""
        p = P1(np.asarray(coefficients, dtype=float))
        d1, d2, d3 = p.deriv(1), p.deriv(2), p.deriv(3)

        def wrap(poly):
            return lambda s, t=0.0: poly(np.asarray(s, dtype=float))

        return cls(wrap(p), wrap(d1), wrap(d2), wrap(d3), _zeros,
                   float(diameter), 0.0, "analytic",
                   meta={"coefficients": [float(c) for c in p.coef]})

    @classmethod
    def separable(cls, coefficients, rate, rate_dot, diameter: float,
                  horizon: float) -> "Profile":
        """``psi(s, t) = a(t) * p(s)`` for a polynomial ``p``."""
        base = cls.polynomial(coefficients, diameter)

        def scale(fn):
            return lambda s, t=0.0: rate(t) * fn(s)

        return cls(scale(base.psi), scale(base.psi_s), scale(base.psi_ss),
                   scale(base.psi_sss), lambda s, t=0.0: rate_dot(t) * base.psi(s),
                   float(diameter), float(horizon), "analytic",
                   meta=dict(base.meta))

    @classmethod
    def from_model(cls, model, diameter: float | None = None) -> "Profile":
        """``psi = 2 fbar_s`` of a 1D model run (eigen or parabolic).

        Parabolic profiles are only defined at the model's snapshot times.
        """
        D = 2.0 * model.L if diameter is None else float(diameter)

        def deriv(order):
            return lambda s, t=0.0: 2.0 * model.fbar_s(s, t, order)

        eigen = model.eigenvalue is not None
        times = None if eigen else tuple(float(t) for t in model.times)
        return cls(deriv(0), deriv(1), deriv(2), deriv(3),
                   _zeros if eigen else (lambda s, t=0.0: 2.0 * model.fbar_st(s, t)),
                   D, 0.0 if eigen else float(model.times[-1]), "from-1d-model",
                   s_max=model.s_max, times=times,
                   meta={"model_L": model.L, "eigenvalue": model.eigenvalue})


@dataclass
class PotentialModulus:
    phi: Callable
    source: str = "analytic"

    def __call__(self, s, t=0.0):
        return self.phi(s, t)

    def validate(self, s_end: float, times=(0.0,), ns: int = 256) -> None:
        s = np.linspace(0.0, s_end, ns)
        for t in times:
            v = self.phi(s, t)
            if np.any(v < -ZERO_TOL):
                raise ProfileInvalid("potential modulus must be nonnegative")
            if abs(float(v[0])) > ZERO_TOL:
                raise ProfileInvalid(
                    f"potential modulus must vanish at s=0, got {float(v[0]):.3e}")

    @classmethod
    def zero(cls) -> "PotentialModulus":
        return cls(_zeros, "zero")

    @classmethod
    def polynomial(cls, coefficients) -> "PotentialModulus":
        p = P1(np.asarray(coefficients, dtype=float))
        return cls(lambda s, t=0.0: p(np.asarray(s, dtype=float)), "analytic")

    @classmethod
    def from_model_potential(cls, qbar) -> "PotentialModulus":
        """``2 qbar_s`` for an even one-variable potential."""
        if qbar is None:
            return cls.zero()

        def phi(s, t=0.0):
            s = np.asarray(s, dtype=float)
            return 2.0 * qbar.deriv(s[..., None], 1, t)[..., 0]

        return cls(phi, "from-1d-model")
