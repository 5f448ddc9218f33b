"""Small finite-difference helpers shared by the identity checks."""

from __future__ import annotations

import numpy as np


def central_first(f, h):
    """Central difference of ``f(h)`` at 0, ``f`` taking a signed step."""
    return (f(h) - f(-h)) / (2.0 * h)


def central_second(f, h, f0=None):
    if f0 is None:
        f0 = f(0.0)
    return (f(h) - 2.0 * f0 + f(-h)) / (h * h)


def richardson(coarse, fine, order: int = 2, ratio: float = 2.0):
    """Eliminate the leading ``h**order`` term from two step levels."""
    k = ratio ** order
    return (k * fine - coarse) / (k - 1.0)


def observed_order(steps, errors, noise_floor=0.0):
    """Least-squares slope of ``log(error)`` against ``log(step)``.

    Returns ``None`` when any error sits at or below ``noise_floor``: a
    difference quotient that is exact up to rounding has no measurable
    order.
    """
    steps = np.asarray(steps, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    if np.any(errors <= noise_floor) or np.any(errors == 0.0):
        return None
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)
