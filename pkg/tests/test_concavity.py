from __future__ import annotations

import math

import numpy as np
import pytest

from segray.concavity import (PotentialModulus, Profile, boundary_probe,
                              compute_m_elliptic, compute_m_parabolic,
                              heat_kernel_spot_check, m_quotient,
                              quotient_curve, sample_pairs,
                              verify_comparison_elliptic,
                              verify_comparison_parabolic, verify_lower_bound,
                              verify_model_self)
from segray.concavity.mformula import limit_value
from segray.errors import (HypothesisViolated, LimitUndefined, ProfileInvalid,
                           SamplerStarved, SequenceLeftDomain, TimeMismatch,
                           WidthTooSmall)
from segray.functions import Polynomial, quadratic_norm
from segray.geometry import disc, ellipse
from segray.pde import build_operator, heat_solve, solve_1d_model

CUBIC = [0.0, 1.0, 0.0, 1.0]            # psi = s + s^3


def cubic_quotient_oracle(s):
    """psi_ss / (psi_s psi) for psi = s + s^3 with zero modulus."""
    return 6.0 / ((1 + 3 * s ** 2) * (1 + s ** 2))


# -- m formula -----------------------------------------------------------------

def test_cubic_profile_closed_form():
    prof = Profile.polynomial(CUBIC, 2.0)
    zero = PotentialModulus.zero()
    brute = np.min(cubic_quotient_oracle(np.linspace(0, 1, 100001)))
    assert brute == pytest.approx(0.75, abs=1e-12)
    ell = compute_m_elliptic(prof, zero)
    par = compute_m_parabolic(prof, zero, 1e6)
    assert ell.m == pytest.approx(0.75, abs=1e-8)
    assert ell.s_argmin == pytest.approx(1.0, abs=1e-6)
    assert abs(ell.m - par.m) < 1e-12
    assert not par.clamped_by_m0


def test_m0_clamps():
    prof = Profile.polynomial(CUBIC, 2.0)
    res = compute_m_parabolic(prof, PotentialModulus.zero(), 0.0)
    assert res.m == 0.0 and res.clamped_by_m0


def test_grid_doubling_stability():
    prof = Profile.polynomial([0, 1, 0, 0.4, 0, 0.1], 3.0)
    zero = PotentialModulus.polynomial([0, 0.5, 0.2])
    a = compute_m_elliptic(prof, zero, ns=128).m
    b = compute_m_elliptic(prof, zero, ns=256).m
    assert abs(a - b) < 1e-8


def test_time_dependent_grid_stability():
    prof = Profile.separable(CUBIC, lambda t: 1 + t, lambda t: np.ones_like(t) * 1.0,
                             2.0, 1.0)
    mod = PotentialModulus.zero()
    a = compute_m_parabolic(prof, mod, 1e6, ns=128, nt=16).m
    b = compute_m_parabolic(prof, mod, 1e6, ns=256, nt=32).m
    assert abs(a - b) < 1e-8


def test_separable_profile_against_brute_scan():
    rate = lambda t: 1 + t
    prof = Profile.separable(CUBIC, rate, lambda t: 1.0 + 0 * t, 2.0, 1.0)
    mod = PotentialModulus.zero()
    res = compute_m_parabolic(prof, mod, 1e6)
    s = np.linspace(1e-3, 1, 801)
    best = min(np.min(m_quotient(prof, mod, s, t)) for t in np.linspace(0, 1, 201))
    assert res.m <= best + 1e-12
    assert res.m == pytest.approx(best, rel=1e-4)


def test_limit_path():
    # psi = s + s^3 + 3 s^5 on D = 0.4: the quotient increases from its s -> 0 value
    prof = Profile.polynomial([0, 1, 0, 1, 0, 3], 0.4)
    res = compute_m_elliptic(prof, PotentialModulus.zero())
    assert res.from_limit
    assert res.m == pytest.approx(6.0 / 1.0 ** 2, abs=1e-6)
    assert limit_value(prof) == pytest.approx(6.0)
    q = m_quotient(prof, PotentialModulus.zero(), np.array([1e-5, 3e-4]))
    np.testing.assert_allclose(q, 6.0)


def test_nonnegative_when_convex_profile():
    for coefs in ([0, 1, 0, 1], [0, 2, 0, 0.1, 0, 0.5], [0, 1]):
        prof = Profile.polynomial(coefs, 2.0)
        assert compute_m_elliptic(prof, PotentialModulus.zero()).m >= 0


def test_modulus_term_and_small_s_value():
    prof = Profile.polynomial([0, 1], 2.0)        # psi_ss = 0
    mod = PotentialModulus.polynomial([0, 4.0])
    assert compute_m_elliptic(prof, PotentialModulus.zero()).m == 0.0
    # away from 0 the quotient is sqrt(phi / psi) = 2 for phi = 4s
    s = np.linspace(0.01, 1, 50)
    np.testing.assert_allclose(m_quotient(prof, mod, s, parabolic=False), 2.0)
    # below the threshold the value psi_sss(0)/psi_s(0)^2 = 0 is used as stated,
    # which ignores the modulus slope and therefore sets m to 0
    res = compute_m_elliptic(prof, mod)
    assert res.from_limit and res.m == 0.0


def test_profile_validation():
    with pytest.raises(ProfileInvalid):
        compute_m_elliptic(Profile.polynomial([0, 1, 0, -1], 4.0),
                           PotentialModulus.zero())
    with pytest.raises(ProfileInvalid):
        compute_m_elliptic(Profile.polynomial([0.1, 1], 2.0), PotentialModulus.zero())
    with pytest.raises(ProfileInvalid):
        compute_m_elliptic(Profile.polynomial([0, 1, 1], 2.0), PotentialModulus.zero())
    with pytest.raises(ProfileInvalid):
        compute_m_elliptic(Profile.polynomial(CUBIC, 2.0),
                           PotentialModulus.polynomial([0.5]))
    with pytest.raises(ValueError):
        compute_m_elliptic(Profile.polynomial(CUBIC, 2.0), PotentialModulus.zero(),
                           ns=32)


def test_limit_undefined():
    prof = Profile.polynomial([0, 0, 0, 1], 2.0)
    with pytest.raises(LimitUndefined):
        limit_value(prof)


def test_model_profile_self_consistent(model_eigen_unit):
    prof = Profile.from_model(model_eigen_unit)
    res = compute_m_elliptic(prof, PotentialModulus.zero())
    assert res.m >= 1 - 1e-2


def test_quotient_curve_minimum():
    s, q = quotient_curve(Profile.polynomial(CUBIC, 2.0), PotentialModulus.zero(),
                          ns=257, parabolic=False)
    k = int(np.argmin(q))
    assert s[k] == pytest.approx(1.0) and q[k] == pytest.approx(0.75)


# -- sampling and lower bounds ------------------------------------------------------

def test_sampler_clearance_and_seed(unit_disc):
    x, y = sample_pairs(unit_disc, 500, 0.04, seed=3)
    assert np.all(np.linalg.norm(x, axis=1) <= 0.96 + 1e-12)
    assert np.all(np.linalg.norm(y, axis=1) <= 0.96 + 1e-12)
    x2, _ = sample_pairs(unit_disc, 500, 0.04, seed=3)
    np.testing.assert_array_equal(x, x2)


def test_sampler_starved():
    with pytest.raises(SamplerStarved):
        sample_pairs(ellipse((1.0, 1e-3)), 10, 0.0099, seed=0)


def test_lower_bound_equality_case(unit_disc):
    a = 1.5
    f = quadratic_norm(2, a)
    rep = verify_lower_bound(f, Profile.polynomial([0, 1], 2.0), 2 * a, unit_disc,
                             samples=500, seed=1)
    assert np.max(np.abs(rep.margin)) < 1e-12
    assert rep.passed
    np.testing.assert_array_equal(rep.margin, rep.energy - rep.bound)
    assert np.all(np.diff(rep.margin) >= 0)          # rows sorted by margin
    assert rep.meta["spot_checks"]["0.0"]["spot_max_abs_diff"] < 1e-10


def test_lower_bound_m_zero_is_convexity(disc_eigen_coarse, unit_disc):
    rep = verify_lower_bound(disc_eigen_coarse.solution, Profile.polynomial([0, 1], 2.0),
                             0.0, unit_disc, samples=1000, seed=4)
    assert rep.min_margin > 0
    assert rep.violations == 0


def test_elliptic_comparison(disc_eigen_coarse, model_eigen_unit):
    rep = verify_comparison_elliptic(disc_eigen_coarse.solution, model_eigen_unit,
                                     samples=2000, seed=5)
    assert rep.min_margin >= -1e-2
    assert rep.meta["seed"] == 5


def test_model_self_sharpness(model_eigen_unit):
    rep = verify_model_self(model_eigen_unit)
    assert abs(rep.min_margin) < 1e-8
    assert np.max(np.abs(rep.margin)) < 1e-8


@pytest.fixture(scope="module")
def parabolic_pair(unit_disc):
    op = build_operator(unit_disc, None, 0.02)
    u0 = np.exp(-np.sum(op.points ** 2, axis=1))
    times = [0.0, 0.05, 0.1, 0.2]
    sol = heat_solve(op, u0, 1e-3, 0.2, snapshots=times)
    model = solve_1d_model(None, 1.0, lambda s: np.exp(-s ** 2), mode="heat",
                           dt=1e-4, t_end=0.2, snapshots=times)
    return sol, model


def test_parabolic_comparison(parabolic_pair):
    sol, model = parabolic_pair
    rep = verify_comparison_parabolic(sol, model, samples=1000, seed=2)
    assert rep.min_margin >= -1e-2
    assert [h["passed"] for h in rep.meta["hypotheses"]] == [True] * 5
    assert sorted(set(rep.t.tolist())) == [0.05, 0.1, 0.2]


def test_parabolic_hypothesis_first(parabolic_pair):
    sol, _ = parabolic_pair
    qbar = Polynomial({(2,): 1.0})
    model = solve_1d_model(qbar, 1.0, lambda s: np.exp(-s ** 2), mode="heat",
                           dt=1e-4, t_end=0.2, snapshots=[0.0, 0.05, 0.1, 0.2])
    with pytest.raises(HypothesisViolated) as info:
        verify_comparison_parabolic(sol, model, samples=200, seed=2)
    assert info.value.worst["margin"] < 0


def test_parabolic_missing_snapshot(parabolic_pair):
    sol, model = parabolic_pair
    with pytest.raises(TimeMismatch):
        verify_comparison_parabolic(sol, model, samples=100, t_list=(0.15,))


# -- boundary probes ------------------------------------------------------------

@pytest.mark.parametrize("mode", ["case1", "case2", "case3", "case5"])
def test_probe_escape(unit_disc, mode):
    rep = boundary_probe(unit_disc, mode=mode, steps=12)
    assert rep.monotone_tail and rep.passed
    thr = 1e3 if mode == "case5" else 10
    assert rep.final_value > thr
    assert rep.meta["max_quadrature_vs_gradient"] < 1e-8


def test_probe_case1_closed_form(unit_disc):
    rep = boundary_probe(unit_disc, mode="case1", steps=8)
    # along the x1-axis E_f = f'(y1) - f'(0) with f = -log(1 - x^2): 2y/(1-y^2)
    y1 = rep.y[:, 0]
    np.testing.assert_allclose(rep.values, 2 * y1 / (1 - y1 ** 2), rtol=1e-10)


def test_probe_case4_tail(unit_disc):
    rep = boundary_probe(unit_disc, mode="case4", steps=12)
    assert rep.passed
    assert np.min(rep.values[-5:]) >= -1e-6


def test_probe_lemma31(unit_disc):
    rep = boundary_probe(unit_disc, mode="lemma31")
    c0, half = rep.meta["c0"], rep.meta["c0_half_distance"]
    assert c0 > 0 and abs(c0 - half) <= 0.2 * c0
    assert rep.meta["delta0"] > 0
    # radial direction at (1 - d, 0): phi * f_rr = 2 (1 + x^2) / (1 - x^2) -> 2
    for d in (1e-2, 1e-4):
        x = 1 - d
        assert 2 * (1 + x * x) / (1 - x * x) * (1 - x * x) >= 2


def test_probe_ellipse(ellipse21):
    rep = boundary_probe(ellipse21, mode="case3", steps=12, direction=(0.0, 1.0))
    assert rep.passed


def test_probe_left_domain(unit_disc):
    with pytest.raises(SequenceLeftDomain):
        boundary_probe(unit_disc, mode="case1", x0=(1.5, 0.0))


# -- heat kernel ------------------------------------------------------------------

def test_kernel_width_checks(unit_disc):
    with pytest.raises(WidthTooSmall):
        heat_kernel_spot_check(unit_disc, width=0.01, h=0.02)
    with pytest.raises(ValueError):
        heat_kernel_spot_check(unit_disc, width=0.06, t_list=(0.01,))


def test_kernel_spot_check_runs(unit_disc):
    rep = heat_kernel_spot_check(unit_disc, t_list=(0.3,), h=0.04, samples=200,
                                 model_nodes=801)
    assert rep.meta["label"] == "INDICATIVE"
    assert np.all(np.isfinite(rep.margin))
