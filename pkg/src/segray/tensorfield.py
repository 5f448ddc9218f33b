"""Symmetric (0,2)-tensor fields with exact partial derivatives.

In flat space the covariant derivative is the partial derivative, so
``tau_{ab;c} = d_c tau_ab``.  Derivative arrays are laid out as
``[..., a, b, c1, ..., ck]``.
"""

from __future__ import annotations

import numpy as np

from .errors import OrderUnsupported, UnknownKind
from .functions import Cosine, Polynomial, ScalarFunction, quadratic_norm

# A potential q is just a scalar function (optionally time dependent).
ScalarPotential = ScalarFunction


class TensorField:
    dimension: int
    max_order: int = 2
    kind: str = "custom"

    def deriv(self, x, order: int) -> np.ndarray:
        raise NotImplementedError

    def eval(self, x) -> np.ndarray:
        return self.deriv(x, 0)

    def eval_d1(self, x) -> np.ndarray:
        return self.deriv(x, 1)

    def eval_d2(self, x) -> np.ndarray:
        return self.deriv(x, 2)

    def _check(self, order):
        if order < 0 or order > self.max_order:
            raise OrderUnsupported(
                f"{self.kind} tensor has derivatives up to order "
                f"{self.max_order}, requested {order}")


class ConstantTensor(TensorField):
    kind = "constant"
    max_order = 64

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("constant tensor needs a square matrix")
        if not np.allclose(m, m.T, rtol=0, atol=1e-14):
            raise ValueError("constant tensor must be symmetric")
        self.matrix = 0.5 * (m + m.T)
        self.dimension = m.shape[0]

    def deriv(self, x, order):
        self._check(order)
        lead = np.shape(x)[:-1]
        n = self.dimension
        if order == 0:
            return np.broadcast_to(self.matrix, lead + (n, n)).copy()
        return np.zeros(lead + (n,) * (2 + order))


class ConformalTensor(TensorField):
    """``tau = g(x) * delta``."""

    kind = "conformal"

    def __init__(self, g: ScalarFunction):
        self.g = g
        self.dimension = g.dim
        self.max_order = g.max_order

    def deriv(self, x, order):
        self._check(order)
        dg = self.g.deriv(x, order)
        eye = np.eye(self.dimension)
        # delta_ab * d^k g
        return (eye[(Ellipsis,) + (slice(None),) * 2 + (None,) * order]
                * dg[(Ellipsis, None, None) + (slice(None),) * order])


class HessianTensor(TensorField):
    """``tau = grad^2 f``; needs ``f`` differentiable to order ``k + 2``."""

    kind = "hessian"

    def __init__(self, f: ScalarFunction):
        self.f = f
        self.dimension = f.dim
        self.max_order = f.max_order - 2

    def deriv(self, x, order):
        self._check(order)
        return self.f.deriv(x, order + 2)


class DerivedTensor(TensorField):
    """Directional derivative ``(grad_e)^m tau`` of a base field."""

    kind = "derived"

    def __init__(self, base: TensorField, direction, order: int):
        self.base = base
        self.e = np.asarray(direction, dtype=float)
        self.m = order
        self.dimension = base.dimension
        self.max_order = base.max_order - order

    def deriv(self, x, order):
        self._check(order)
        d = self.base.deriv(x, order + self.m)
        # contract the first m derivative slots (axis 2 after the leading dims)
        lead = len(np.shape(x)) - 1
        for _ in range(self.m):
            d = np.tensordot(d, self.e, axes=([lead + 2], [0]))
            # tensordot moves nothing else, so the next slot is again lead+2
        return d


def derived_tensor(tau: TensorField, direction, order: int) -> DerivedTensor:
    if order not in (1, 2):
        raise OrderUnsupported(f"derived tensor order {order} not in {{1, 2}}")
    e = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    if tau.max_order < order:
        raise OrderUnsupported(
            f"{tau.kind} tensor lacks derivatives of order {order}")
    return DerivedTensor(tau, e, order)


def contract_NN(tau: TensorField, point, N) -> np.ndarray:
    """``sum_ab tau_ab(point) N_a N_b``."""
    N = np.asarray(N, dtype=float)
    if np.any(np.abs(np.linalg.norm(N, axis=-1) - 1.0) > 1e-10):
        raise ValueError("N must be a unit vector")
    t = tau.eval(point)
    return np.einsum("...ab,...a,...b->...", t, N, N)


def scalar_from_params(params: dict, dim: int) -> ScalarFunction:
    """Build a scalar function from a small config dictionary.

    ``{"poly": "e1 e2 : c; ..."}``, ``{"cos": [k1, k2], "amplitude": A,
    "phase": p, "offset": c}``, ``{"quadratic": a}`` (``a |x|^2 / 2``), or
    ``{"zero": True}``.
    """
    if "poly" in params:
        return Polynomial.parse(params["poly"], dim)
    if "cos" in params:
        k = params["cos"]
        if len(k) != dim:
            raise ValueError("cosine wavevector has the wrong dimension")
        return Cosine(k, params.get("amplitude", 1.0), params.get("phase", 0.0),
                      params.get("offset", 0.0))
    if "quadratic" in params:
        return quadratic_norm(dim, float(params["quadratic"]))
    if params.get("zero"):
        return Polynomial({}, dim)
    raise UnknownKind(f"cannot build a scalar function from {params!r}")


def builtin_tensor(kind: str, params: dict | None = None, dim: int = 2
                   ) -> TensorField:
    """Named built-in fields.

    ``constant``: ``params["matrix"]`` (default identity).
    ``conformal``: ``g * delta`` with ``g`` from :func:`scalar_from_params`.
    ``hessian``: ``grad^2 f`` with ``f`` from :func:`scalar_from_params`.
    """
    params = dict(params or {})
    if kind == "constant":
        return ConstantTensor(params.get("matrix", np.eye(dim)))
    if kind == "conformal":
        return ConformalTensor(scalar_from_params(params, dim))
    if kind == "hessian":
        return HessianTensor(scalar_from_params(params, dim))
    raise UnknownKind(f"unknown tensor kind {kind!r}")
