"""Evaluate ``f = -log u`` and its derivatives off the grid.

The default method interpolates ``u`` itself with a local tensor-product
cubic (4x4 nodes) and forms ``grad f = -grad u / u``.  Near the boundary the
stencil block is shifted inward, then lowered in degree, so every block
uses interior nodes only.  ``method="bilinear-log"`` interpolates ``log u``
bilinearly and differentiates the interpolant by centred differences at the
grid scale; it is cheaper and much less accurate for gradients.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonPositiveValue, OutsideDomain
from ..functions import ScalarFunction, as_float

NEAR_BOUNDARY_CELLS = 2.0
METHODS = ("cubic-u", "bilinear-log")


def _lagrange_tables(p: int):
    """Monomial coefficients of the Lagrange basis on nodes 0..p and of its
    first two derivatives; row k is basis function k."""
    nodes = np.arange(p + 1, dtype=float)
    C = np.zeros((p + 1, p + 1))
    for k in range(p + 1):
        others = np.delete(nodes, k)
        poly = np.poly(others)[::-1] / np.prod(nodes[k] - others)
        C[k] = poly
    D1 = np.zeros_like(C)
    D2 = np.zeros_like(C)
    j = np.arange(p + 1)
    D1[:, :-1] = C[:, 1:] * j[1:]
    D2[:, :-2] = D1[:, 1:-1] * j[1:-1]
    return C, D1, D2


_TABLES = {p: _lagrange_tables(p) for p in (1, 2, 3)}


def _basis(p, tau):
    """Basis values and derivatives at local coordinates ``tau`` (P,)."""
    C, D1, D2 = _TABLES[p]
    powers = tau[:, None] ** np.arange(p + 1)
    return powers @ C.T, powers @ D1.T, powers @ D2.T


class LogField(ScalarFunction):
    """``f = -log u`` for grid values ``u`` on a :class:`Grid2D`."""

    max_order = 2

    def __init__(self, grid, values, floor: float = 1e-300,
                 method: str = "cubic-u"):
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        values = np.asarray(values, dtype=float)
        if not np.all(values > floor):
            bad = int(np.sum(~(values > floor)))
            raise NonPositiveValue(f"{bad} grid values at or below floor {floor:g}")
        self.grid = grid
        self.dim = 2
        self.floor = floor
        self.method = method
        self.values = values
        arr = grid.to_array(values)
        self._table = arr if method == "cubic-u" else np.log(arr)
        self._ok = {p: self._block_ok(p) for p in (1, 2, 3)}

    def _block_ok(self, p):
        """``ok[i, j]``: the (p+1)^2 block starting at node (i, j) is interior."""
        m = self.grid.inside.astype(np.int64)
        c = np.zeros((m.shape[0] + 1, m.shape[1] + 1), dtype=np.int64)
        c[1:, 1:] = m.cumsum(0).cumsum(1)
        w = p + 1
        s = c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]
        out = np.zeros(m.shape, dtype=bool)
        out[: s.shape[0], : s.shape[1]] = s == w * w
        return out

    # -- block selection ---------------------------------------------------

    def _choose(self, xi, p):
        """Best interior block start for each point, or -1 when none fits."""
        ok = self._ok[p]
        nx, ny = ok.shape
        pref = np.floor(xi - (p - 1) / 2.0).astype(np.int64)
        best = np.full(xi.shape, -1, dtype=np.int64)
        best_d = np.full(len(xi), np.inf)
        span = range(-2, 3)
        for di in span:
            for dj in span:
                st = pref + np.array([di, dj])
                inb = ((st[:, 0] >= 0) & (st[:, 0] < nx)
                       & (st[:, 1] >= 0) & (st[:, 1] < ny))
                valid = np.zeros(len(xi), dtype=bool)
                valid[inb] = ok[st[inb, 0], st[inb, 1]]
                d = np.max(np.abs(st + p / 2.0 - xi), axis=1)
                take = valid & (d < best_d)
                best[take] = st[take]
                best_d[take] = d[take]
        return best, best_d

    def _interp(self, x, order):
        """Interpolated table value and derivatives, shapes (P,), (P,2), (P,2,2)."""
        g = self.grid
        xi = (x - g.origin) / g.h
        P = len(xi)
        val = np.empty(P)
        d1 = np.empty((P, 2))
        d2 = np.empty((P, 2, 2))
        todo = np.ones(P, dtype=bool)
        degrees = (3, 2, 1) if self.method == "cubic-u" else (1,)
        for p in degrees:
            if not np.any(todo):
                break
            idx = np.nonzero(todo)[0]
            start, dist = self._choose(xi[idx], p)
            # reject blocks that would extrapolate more than one cell
            good = (start[:, 0] >= 0) & (dist <= p / 2.0 + 1.0)
            idx, start = idx[good], start[good]
            if len(idx) == 0:
                continue
            tau = xi[idx] - start
            bx, bx1, bx2 = _basis(p, tau[:, 0])
            by, by1, by2 = _basis(p, tau[:, 1])
            o = np.arange(p + 1)
            I = start[:, 0, None, None] + o[None, :, None]
            J = start[:, 1, None, None] + o[None, None, :]
            V = self._table[I, J]
            val[idx] = np.einsum("pi,pj,pij->p", bx, by, V)
            if order >= 1:
                d1[idx, 0] = np.einsum("pi,pj,pij->p", bx1, by, V) / g.h
                d1[idx, 1] = np.einsum("pi,pj,pij->p", bx, by1, V) / g.h
            if order >= 2:
                h2 = g.h ** 2
                d2[idx, 0, 0] = np.einsum("pi,pj,pij->p", bx2, by, V) / h2
                d2[idx, 1, 1] = np.einsum("pi,pj,pij->p", bx, by2, V) / h2
                d2[idx, 0, 1] = d2[idx, 1, 0] = np.einsum(
                    "pi,pj,pij->p", bx1, by1, V) / h2
            todo[idx] = False
        if np.any(todo):
            raise OutsideDomain(f"{int(todo.sum())} points have no interior "
                                "interpolation stencil")
        return val, d1, d2

    # -- public evaluators -------------------------------------------------

    def _points(self, x):
        x = np.asarray(as_float(x), dtype=float)
        lead = x.shape[:-1]
        flat = x.reshape(-1, 2)
        if not np.all(self.grid.domain.phi(flat) > 0):
            raise OutsideDomain("evaluation point outside the domain")
        return flat, lead

    def near_boundary(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (self.grid.domain.boundary_distance(x)
                < NEAR_BOUNDARY_CELLS * self.grid.h)

    def deriv(self, x, order, t=0.0):
        self._check_order(order)
        flat, lead = self._points(x)
        if self.method == "bilinear-log":
            out = self._bilinear_log(flat, order)
        else:
            u, du, ddu = self._interp(flat, order)
            if np.any(u <= self.floor):
                raise NonPositiveValue("interpolated u is not positive")
            if order == 0:
                out = -np.log(u)
            elif order == 1:
                out = -du / u[:, None]
            else:
                out = (-ddu / u[:, None, None]
                       + du[:, :, None] * du[:, None, :] / (u ** 2)[:, None, None])
        return out.reshape(lead + out.shape[1:])

    def _bilinear_log(self, flat, order):
        g, _, _ = self._interp(flat, 0)
        if order == 0:
            return -g
        h = self.grid.h

        def logu(pts):
            ins = self.grid.domain.phi(pts) > 0
            out = np.full(len(pts), np.nan)
            if np.any(ins):
                out[ins] = self._interp(pts[ins], 0)[0]
            return out

        grad = np.empty((len(flat), 2))
        for a in range(2):
            e = np.zeros(2)
            e[a] = h
            gp, gm = logu(flat + e), logu(flat - e)
            c = (gp - gm) / (2 * h)
            c = np.where(np.isnan(gp), (g - gm) / h, c)
            c = np.where(np.isnan(gm), (gp - g) / h, c)
            grad[:, a] = c
        if order == 1:
            return -grad
        raise ValueError("bilinear-log provides f and grad f only")

    def evaluate(self, x):
        """``(f, grad f, near_boundary)`` in one pass."""
        return self.value(x), self.grad(x), self.near_boundary(x)
