from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import j0

from segray.errors import (GridTooCoarse, NonPositiveState, NonPositiveValue,
                           NotEven, OutsideDomain, TimeMismatch)
from segray.functions import Cosine, Polynomial
from segray.geometry import disc, ellipse
from segray.pde import (GridSolution, LogField, build_grid, build_operator,
                        build_operator_1d, eigen_smallest, heat_solve,
                        solve_1d_model)


def bessel_j01():
    return brentq(j0, 2.0, 3.0, xtol=1e-15)


def const(c, dim=2):
    return Polynomial({(0,) * dim: c}, dim)


# -- grid / operator ----------------------------------------------------------

def test_grid_cells_inside_and_fractions(unit_disc):
    g = build_grid(unit_disc, 0.05)
    assert np.all(unit_disc.phi(g.points) > 0)
    assert np.all((g.theta > 0) & (g.theta <= 1))


def test_grid_too_coarse(unit_disc):
    with pytest.raises(GridTooCoarse):
        build_grid(unit_disc, 0.2)


def test_operator_paraboloid(unit_disc):
    op = build_operator(unit_disc, None, 0.02)
    p = op.points
    Af = op @ (1 - np.sum(p ** 2, axis=1))
    # exact on this quadratic, including cut cells (f vanishes on the circle)
    assert np.max(np.abs(Af - 4)) < 1e-8


def test_operator_constant_potential_adds_cf(unit_disc):
    c = 2.5
    op0 = build_operator(unit_disc, None, 0.05)
    op1 = build_operator(unit_disc, const(c), 0.05)
    f = np.cos(op0.points[:, 0]) * (1 - np.sum(op0.points ** 2, axis=1))
    np.testing.assert_allclose(op1 @ f - op0 @ f, c * f, atol=1e-12)


@pytest.mark.parametrize("fn", [lambda p: p[:, 0] * p[:, 1],
                                lambda p: 3 * p[:, 0] - p[:, 1] + 0.5])
def test_harmonic_on_full_stencils(ellipse21, fn):
    # the Dirichlet data of f is nonzero, so compare away from cut cells
    op = build_operator(ellipse21, None, 0.05)
    full = op.grid.full_stencil()
    assert np.max(np.abs((op @ fn(op.points))[full])) < 1e-10


def test_interior_error_second_order(unit_disc):
    errs = []
    for h in (0.04, 0.02):
        op = build_operator(unit_disc, None, h)
        p = op.points
        f = np.exp(p[:, 0]) * np.cos(p[:, 1]) + np.sin(p[:, 0] * p[:, 1])
        exact = (p[:, 0] ** 2 + p[:, 1] ** 2) * np.sin(p[:, 0] * p[:, 1])
        full = op.grid.full_stencil()
        errs.append(np.max(np.abs((op @ f) - exact)[full]))
    assert math.log2(errs[0] / errs[1]) > 1.8


# -- heat ---------------------------------------------------------------------

def test_heat_1d_cosine_decay():
    L = math.pi / 2
    n = int(round(2 * L / 1e-3)) - 1
    op = build_operator_1d(L, n)
    s = op.grid.nodes
    sol = heat_solve(op, np.cos(s), 1e-4, 0.5, snapshots=[0.5])
    assert np.max(np.abs(sol.at(0.5) - math.exp(-0.5) * np.cos(s))) < 1e-3
    assert sol.meta["scheme"] == "crank-nicolson"


def test_heat_eigen_decay(unit_disc):
    op = build_operator(unit_disc, None, 0.05)
    pair = eigen_smallest(op)
    sol = heat_solve(op, pair.vector, 1e-3, 0.05, scheme="implicit-euler")
    # implicit Euler multiplies an eigenvector by 1/(1 + lam dt) per step
    expect = pair.vector * (1 + pair.eigenvalue * 1e-3) ** -50
    assert np.max(np.abs(sol.at(0.05) - expect)) < 50 * 10 * 1e-10 + 1e-8


def test_heat_gauge_factor(unit_disc):
    c = 1.7
    op0 = build_operator(unit_disc, None, 0.05)
    op1 = build_operator(unit_disc, const(c), 0.05)
    u0 = np.exp(-np.sum(op0.points ** 2, axis=1))
    a = heat_solve(op0, u0, 1e-3, 0.1, scheme="implicit-euler")
    b = heat_solve(op1, u0, 1e-3, 0.1, scheme="implicit-euler")
    # implicit Euler only reproduces the factor e^{-ct} to O(dt)
    ratio = b.at(0.1) / a.at(0.1)
    assert np.max(np.abs(ratio - math.exp(-c * 0.1))) < 5e-3


def test_heat_gauge_factor_crank_nicolson(unit_disc):
    c = 1.0
    op0 = build_operator(unit_disc, None, 0.05)
    op1 = build_operator(unit_disc, const(c), 0.05)
    u0 = np.exp(-np.sum(op0.points ** 2, axis=1))
    a = heat_solve(op0, u0, 1e-3, 0.2, startup_steps=0)
    b = heat_solve(op1, u0, 1e-3, 0.2, startup_steps=0)
    ratio = b.at(0.2) / a.at(0.2)
    # the factor is spatially uniform; its value carries the O(dt) time error
    assert np.ptp(ratio) < 1e-6
    assert np.max(np.abs(ratio - math.exp(-0.2))) < 1e-5


def test_heat_maximum_principle_and_positivity(unit_disc):
    op = build_operator(unit_disc, const(0.5), 0.05)
    u0 = np.exp(-5 * np.sum(op.points ** 2, axis=1))
    sol = heat_solve(op, u0, 1e-3, 0.05, scheme="implicit-euler",
                     snapshots=np.arange(0, 51) * 1e-3)
    mx = sol.values.max(axis=1)
    assert np.all(np.diff(mx) <= 1e-15)
    assert np.all(sol.values > 0)


def test_heat_errors(unit_disc):
    op = build_operator(unit_disc, None, 0.05)
    u0 = np.ones(op.size)
    with pytest.raises(NonPositiveState):
        heat_solve(op, -u0, 1e-3, 0.01)
    with pytest.raises(TimeMismatch):
        heat_solve(op, u0, 1e-3, 0.01, snapshots=[0.0025])
    sol = heat_solve(op, u0, 1e-3, 0.01)
    with pytest.raises(TimeMismatch):
        sol.at(0.005)


def test_snapshots_immutable(unit_disc):
    op = build_operator(unit_disc, None, 0.05)
    sol = heat_solve(op, np.ones(op.size), 1e-3, 0.002)
    with pytest.raises(ValueError):
        sol.values[0, 0] = 3.0


# -- eigen --------------------------------------------------------------------

def test_eigen_1d_cosine():
    L = math.pi / 2
    op = build_operator_1d(L, 2000)
    pair = eigen_smallest(op)
    assert pair.eigenvalue == pytest.approx(1.0, abs=1e-4)
    assert np.max(np.abs(pair.vector - np.cos(op.grid.nodes))) < 1e-4
    assert pair.residual < 1e-8
    assert pair.vector.max() == 1.0 and np.all(pair.vector > 0)


def test_eigen_disc_bessel(disc_eigen_coarse):
    lam = disc_eigen_coarse.eigenvalue
    assert abs(lam - bessel_j01() ** 2) / bessel_j01() ** 2 < 1e-2
    assert disc_eigen_coarse.residual < 1e-8


def test_eigen_shift_by_constant(unit_disc):
    op = build_operator(unit_disc, None, 0.05)
    a = eigen_smallest(op)
    b = eigen_smallest(op.shifted(3.0))
    assert b.eigenvalue - a.eigenvalue == pytest.approx(3.0, abs=1e-9)
    assert np.max(np.abs(a.vector - b.vector)) < 1e-7


def test_eigen_negative_potential_uses_shift(unit_disc):
    op = build_operator(unit_disc, const(-10.0), 0.05)
    pair = eigen_smallest(op)
    ref = eigen_smallest(build_operator(unit_disc, None, 0.05))
    assert pair.shift < 0
    assert pair.eigenvalue == pytest.approx(ref.eigenvalue - 10.0, abs=1e-8)


def test_eigen_refinement_order(unit_disc):
    hs = (0.08, 0.04, 0.02)
    exact = bessel_j01() ** 2
    errs = [abs(eigen_smallest(build_operator(unit_disc, None, h)).eigenvalue - exact)
            for h in hs]
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert min(orders) >= 1.0


# -- log field -----------------------------------------------------------------

def _field(grid, fn, **kw):
    return LogField(grid, fn(grid.points), **kw)


def test_log_field_gaussian(unit_disc):
    grid = build_grid(unit_disc, 0.02)
    fld = _field(grid, lambda p: np.exp(-np.sum(p ** 2, axis=1)))
    x = np.random.default_rng(0).uniform(-0.6, 0.6, (200, 2))
    np.testing.assert_allclose(fld.grad(x), 2 * x, atol=1e-5)
    np.testing.assert_allclose(fld.value(x), np.sum(x ** 2, axis=1), atol=1e-7)


def test_log_field_gaussian_order(unit_disc):
    x = np.random.default_rng(1).uniform(-0.5, 0.5, (100, 2))
    errs = []
    for h in (0.04, 0.02):
        fld = _field(build_grid(unit_disc, h), lambda p: np.exp(-np.sum(p ** 2, axis=1)))
        errs.append(np.max(np.abs(fld.grad(x) - 2 * x)))
    assert math.log2(errs[0] / errs[1]) > 1.9


def test_log_field_constant_exact(unit_disc):
    grid = build_grid(unit_disc, 0.05)
    fld = _field(grid, lambda p: np.full(len(p), 0.3))
    x = np.random.default_rng(2).uniform(-0.6, 0.6, (50, 2))
    assert np.max(np.abs(fld.grad(x))) < 1e-12
    blog = _field(grid, lambda p: np.full(len(p), 0.3), method="bilinear-log")
    assert np.max(np.abs(blog.grad(x))) < 1e-12


def test_log_field_eigen_radial_outward(disc_eigen_coarse):
    fld = disc_eigen_coarse.solution.log_field(0.0)
    rng = np.random.default_rng(3)
    ang = rng.uniform(0, 2 * np.pi, 200)
    rad = rng.uniform(0.1, 0.9, 200)
    x = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    g = fld.grad(x)
    unit = x / rad[:, None]
    radial = np.sum(g * unit, axis=1)
    tangential = g[:, 0] * unit[:, 1] - g[:, 1] * unit[:, 0]
    assert np.all(radial > 0)
    assert np.max(np.abs(tangential) / radial) < 1e-2


def test_log_field_near_boundary_and_errors(unit_disc):
    grid = build_grid(unit_disc, 0.05)
    fld = _field(grid, lambda p: 1 - np.sum(p ** 2, axis=1))
    flags = fld.near_boundary(np.array([[0.0, 0.0], [0.95, 0.0]]))
    assert flags.tolist() == [False, True]
    with pytest.raises(OutsideDomain):
        fld.grad(np.array([[1.2, 0.0]]))
    vals = np.ones(grid.size)
    vals[3] = -1.0
    with pytest.raises(NonPositiveValue):
        LogField(grid, vals)


# -- 1D model -------------------------------------------------------------------

def test_model_tan_half_pi():
    m = solve_1d_model(None, math.pi / 2, mode="eigen", n_nodes=2001)
    s = np.linspace(-1.4, 1.4, 301)
    assert np.max(np.abs(m.fbar_s(s) - np.tan(s))) < 1e-4


def test_model_scaled_tan(model_eigen_unit):
    s = np.linspace(-0.9, 0.9, 301)
    exact = math.pi / 2 * np.tan(math.pi * s / 2)
    assert np.max(np.abs(model_eigen_unit.fbar_s(s) - exact)) < 1e-4
    assert model_eigen_unit.eigenvalue == pytest.approx(math.pi ** 2 / 4, rel=1e-5)


def test_model_heat_stays_even():
    m = solve_1d_model(Polynomial({(2,): 1.0}), 1.0,
                       lambda s: np.exp(-s ** 2), mode="heat", dt=1e-3,
                       t_end=0.2, n_nodes=801,
                       snapshots=[0.0, 0.05, 0.1, 0.2])
    for t in m.times:
        u = m.at(t)
        assert np.max(np.abs(u - u[::-1])) < 1e-10
        assert abs(float(m.fbar_s(np.array([0.0]), t)[0])) < 1e-10


def test_model_rejects_odd_input():
    with pytest.raises(NotEven):
        solve_1d_model(Polynomial({(1,): 1.0}), 1.0, mode="eigen", n_nodes=201)
    with pytest.raises(NotEven):
        solve_1d_model(None, 1.0, lambda s: np.exp(-(s - 0.1) ** 2), mode="heat",
                       dt=1e-3, t_end=0.01, n_nodes=201)


def test_model_cosine_potential_even():
    q = Cosine([1.0], amplitude=0.5, offset=0.5)
    m = solve_1d_model(q, 1.0, mode="eigen", n_nodes=801)
    assert m.eigenvalue > math.pi ** 2 / 4
