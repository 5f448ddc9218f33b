"""Composite Gauss-Legendre rules on segments."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureNotConverged


@lru_cache(maxsize=None)
def gauss_legendre01(n: int):
    """Nodes and weights on [0, 1], symmetric about 1/2."""
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    # mirror the rule so reversed segments see the same nodes up to rounding
    t = 0.5 * (t + (1.0 - t[::-1]))
    w = 0.5 * (w + w[::-1])
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


@dataclass(frozen=True)
class QuadratureRule:
    panels: int = 2
    nodes_per_panel: int = 16
    adaptive: bool = False
    refine_tol: float = 1e-12
    grade_levels: int = 0
    max_panels: int = 4000

    def __post_init__(self):
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if not 4 <= self.nodes_per_panel <= 16:
            raise ValueError("nodes_per_panel must lie in 4..16")
        if self.refine_tol <= 0:
            raise ValueError("refine_tol must be positive")

    def breakpoints(self) -> np.ndarray:
        """Panel edges on [0, 1], dyadically graded toward both ends."""
        pts = set(np.linspace(0.0, 1.0, self.panels + 1).tolist())
        for k in range(1, self.grade_levels + 1):
            a = 0.5 ** k / self.panels
            pts.update((a, 1.0 - a))
        return np.array(sorted(pts))

    def nodes(self):
        """Fixed composite nodes/weights on [0, 1]."""
        return _composite(tuple(self.breakpoints()), self.nodes_per_panel)


@lru_cache(maxsize=64)
def _composite(edges: tuple, n: int):
    t0, w0 = gauss_legendre01(n)
    edges = np.asarray(edges)
    a, b = edges[:-1], edges[1:]
    t = (a[:, None] + (b - a)[:, None] * t0).ravel()
    w = ((b - a)[:, None] * w0).ravel()
    # mirror symmetry survives the panel layout when edges are symmetric
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def integrate_unit(fn, rule: QuadratureRule):
    """Integrate a vectorised ``fn(t)`` (t in [0, 1], shape (M,) ->
    (..., M)) with the fixed composite rule."""
    t, w = rule.nodes()
    return fn(t) @ w


def integrate_adaptive(fn, rule: QuadratureRule, a: float = 0.0,
                       b: float = 1.0) -> float:
    """Scalar adaptive bisection driven by the panel-vs-halves difference.

    ``fn`` maps an array of parameters to an array of values.  The initial
    partition is the rule's (graded) breakpoints scaled to ``[a, b]``.
    """
    t0, w0 = gauss_legendre01(rule.nodes_per_panel)

    def panel(lo, hi):
        return float(fn(lo + (hi - lo) * t0) @ w0) * (hi - lo)

    edges = a + (b - a) * rule.breakpoints()
    stack = [(lo, hi, panel(lo, hi)) for lo, hi in zip(edges[:-1], edges[1:])]
    total = 0.0
    used = len(stack)
    done = []
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = panel(lo, mid), panel(mid, hi)
        if abs(left + right - whole) <= rule.refine_tol * max(1.0, abs(left + right)):
            done.append(left + right)
            continue
        used += 1
        if used > rule.max_panels:
            raise QuadratureNotConverged(
                f"adaptive refinement exceeded {rule.max_panels} panels")
        stack.append((lo, mid, left))
        stack.append((mid, hi, right))
    done.sort(key=abs)
    total = float(np.sum(done))
    return total
