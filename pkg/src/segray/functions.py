"""Scalar functions on R^n with exact partial derivatives.

All evaluators are vectorised over leading axes: a point array of shape
``(..., n)`` gives values of shape ``(...,)``, gradients ``(..., n)`` and
k-th derivatives ``(...,) + (n,) * k``.  Time-dependent potentials take an
extra ``t``; static functions accept and ignore it so they can be used
anywhere a potential is expected.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import OrderUnsupported


def as_float(x):
    """Array view of ``x`` that keeps extended precision if it has it."""
    a = np.asarray(x)
    return a if a.dtype.kind == "f" else a.astype(float)


class ScalarFunction:
    dim: int
    max_order: int = 4

    def deriv(self, x, order: int, t: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def value(self, x, t: float = 0.0) -> np.ndarray:
        return self.deriv(x, 0, t)

    def grad(self, x, t: float = 0.0) -> np.ndarray:
        return self.deriv(x, 1, t)

    def hess(self, x, t: float = 0.0) -> np.ndarray:
        return self.deriv(x, 2, t)

    def time_derivative(self, x, t: float = 0.0) -> np.ndarray:
        return np.zeros(np.shape(x)[:-1])

    def __call__(self, x, t: float = 0.0):
        return self.value(x, t)

    def __add__(self, other):
        return SumFunction(self, other)

    def _check_order(self, order):
        if order < 0 or order > self.max_order:
            raise OrderUnsupported(
                f"{type(self).__name__} provides derivatives up to order "
                f"{self.max_order}, requested {order}")


class Polynomial(ScalarFunction):
    """Multivariate polynomial stored as ``{exponent tuple: coefficient}``."""

    max_order = 64

    def __init__(self, terms: dict, dim: int | None = None):
        cleaned = {}
        for exps, c in terms.items():
            exps = tuple(int(e) for e in exps)
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            if c != 0.0:
                cleaned[exps] = cleaned.get(exps, 0.0) + float(c)
        if dim is None:
            if not terms:
                raise ValueError("dimension required for the zero polynomial")
            dim = len(next(iter(terms)))
        if any(len(e) != dim for e in cleaned):
            raise ValueError("inconsistent exponent lengths")
        self.dim = dim
        self.terms = cleaned
        self._partial = lru_cache(maxsize=None)(self._partial_uncached)

    @classmethod
    def parse(cls, table: str, dim: int) -> "Polynomial":
        """Parse a coefficient table ``"e1 e2 : c; e1 e2 : c"``.

        >>> Polynomial.parse("4 0 : 1; 0 2 : 1", 2).terms
        {(4, 0): 1.0, (0, 2): 1.0}
        """
        terms = {}
        for entry in table.split(";"):
            entry = entry.strip()
            if not entry:
                continue
            try:
                lhs, rhs = entry.split(":")
                exps = tuple(int(tok) for tok in lhs.replace(",", " ").split())
                coef = float(rhs)
            except ValueError as exc:
                raise ValueError(f"bad polynomial term {entry!r}") from exc
            if len(exps) != dim:
                raise ValueError(
                    f"term {entry!r} has {len(exps)} exponents, expected {dim}")
            terms[exps] = terms.get(exps, 0.0) + coef
        return cls(terms, dim)

    def differentiate(self, axis: int) -> "Polynomial":
        out = {}
        for exps, c in self.terms.items():
            e = exps[axis]
            if e == 0:
                continue
            new = list(exps)
            new[axis] = e - 1
            out[tuple(new)] = out.get(tuple(new), 0.0) + c * e
        return Polynomial(out, self.dim)

    def _partial_uncached(self, index: tuple) -> "Polynomial":
        p = self
        for axis in index:
            p = p.differentiate(axis)
        return p

    def _eval(self, x):
        x = as_float(x)
        out = np.zeros(x.shape[:-1], dtype=x.dtype)
        for exps, c in self.terms.items():
            term = np.full(x.shape[:-1], c, dtype=x.dtype)
            for axis, e in enumerate(exps):
                if e:
                    term = term * x[..., axis] ** e
            out = out + term
        return out

    def deriv(self, x, order, t=0.0):
        self._check_order(order)
        x = as_float(x)
        if order == 0:
            return self._eval(x)
        n = self.dim
        out = np.empty(x.shape[:-1] + (n,) * order, dtype=x.dtype)
        cache = {}
        for idx in itertools.product(range(n), repeat=order):
            key = tuple(sorted(idx))
            if key not in cache:
                cache[key] = self._partial(key)._eval(x)
            out[(Ellipsis,) + idx] = cache[key]
        return out

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __repr__(self):
        return f"Polynomial({self.terms!r}, dim={self.dim})"


class Cosine(ScalarFunction):
    """``offset + amplitude * cos(k . x + phase)``; derivatives of any order."""

    max_order = 64

    def __init__(self, wavevector, amplitude=1.0, phase=0.0, offset=0.0):
        self.k = np.asarray(wavevector, dtype=float)
        self.dim = self.k.size
        self.amplitude = float(amplitude)
        self.phase = float(phase)
        self.offset = float(offset)

    def deriv(self, x, order, t=0.0):
        self._check_order(order)
        x = as_float(x)
        arg = x @ self.k + self.phase + order * math.pi / 2
        val = self.amplitude * np.cos(arg)
        if order == 0:
            return val + self.offset
        kk = self.k
        for _ in range(order - 1):
            kk = np.multiply.outer(kk, self.k)
        return val[(Ellipsis,) + (None,) * order] * kk


class SumFunction(ScalarFunction):
    def __init__(self, *parts):
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise ValueError("summands must share a dimension")
        self.parts = parts
        self.dim = dims.pop()
        self.max_order = min(p.max_order for p in parts)

    def deriv(self, x, order, t=0.0):
        self._check_order(order)
        return sum(p.deriv(x, order, t) for p in self.parts)

    def time_derivative(self, x, t=0.0):
        return sum(p.time_derivative(x, t) for p in self.parts)


class TimeModulated(ScalarFunction):
    """Separable time-dependent potential ``a(t) * g(x)``.

    ``rate`` and ``rate_dot`` are callables returning a(t) and a'(t).
    """

    def __init__(self, space: ScalarFunction, rate, rate_dot):
        self.space = space
        self.rate = rate
        self.rate_dot = rate_dot
        self.dim = space.dim
        self.max_order = space.max_order

    def deriv(self, x, order, t=0.0):
        return self.rate(t) * self.space.deriv(x, order)

    def time_derivative(self, x, t=0.0):
        return self.rate_dot(t) * self.space.value(x)


class NegLog(ScalarFunction):
    """``f = -log g`` for a positive function ``g`` with value/grad/hess.

    Only orders 0-2 are available; this is what the boundary probes and the
    Hessian lower-bound scan need.
    """

    max_order = 2

    def __init__(self, value_fn, grad_fn, hess_fn, dim):
        self._g = value_fn
        self._dg = grad_fn
        self._ddg = hess_fn
        self.dim = dim

    def deriv(self, x, order, t=0.0):
        self._check_order(order)
        x = as_float(x)
        g = self._g(x)
        if order == 0:
            return -np.log(g)
        dg = self._dg(x)
        if order == 1:
            return -dg / g[..., None]
        ddg = self._ddg(x)
        return (-ddg / g[..., None, None]
                + dg[..., :, None] * dg[..., None, :] / (g ** 2)[..., None, None])


def zero_function(dim: int) -> Polynomial:
    return Polynomial({}, dim)


def quadratic_norm(dim: int, a: float = 1.0) -> Polynomial:
    """``a * |x|^2 / 2``."""
    terms = {}
    for i in range(dim):
        e = [0] * dim
        e[i] = 2
        terms[tuple(e)] = a / 2.0
    return Polynomial(terms, dim)
