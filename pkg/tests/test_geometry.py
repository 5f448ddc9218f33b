from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segray.errors import DegenerateSegment, NotInside
from segray.geometry import (boundary_points, chord_clip, diameter, disc,
                             ellipse, lemma21_check, lemma21_residuals,
                             quartic, segment_frame)

coord = st.floats(-5, 5, allow_nan=False)


def test_frame_345():
    f = segment_frame([0, 0], [3, 4])
    assert f.r == pytest.approx(5.0, abs=1e-15)
    np.testing.assert_allclose(f.N, [0.6, 0.8], atol=1e-15)


def test_frame_axis_aligned_completion():
    f = segment_frame([1, 1], [1, 2])
    assert f.r == pytest.approx(1.0)
    np.testing.assert_allclose(f.N, [0, 1], atol=1e-15)
    np.testing.assert_allclose(f.e(1), [-1, 0], atol=1e-15)


def test_frame_3d_diagonal():
    f = segment_frame([0, 0, 0], [1, 1, 1])
    assert f.r == pytest.approx(np.sqrt(3))
    np.testing.assert_allclose(f.N, np.ones(3) / np.sqrt(3), atol=1e-15)


def test_frame_endpoints_exact():
    f = segment_frame([0.1, 0.2], [0.7, -0.3])
    np.testing.assert_array_equal(f.theta(0.0), f.x)
    np.testing.assert_allclose(f.theta(f.r), f.y, atol=1e-15)


def test_degenerate_segment():
    with pytest.raises(DegenerateSegment):
        segment_frame([0.5, 0.5], [0.5, 0.5 + 1e-13])


@settings(max_examples=200, deadline=None)
@given(st.lists(coord, min_size=3, max_size=3), st.lists(coord, min_size=3, max_size=3))
def test_frame_orthonormal_property(x, y):
    if np.linalg.norm(np.subtract(y, x)) <= 1e-6:
        return
    f = segment_frame(x, y)
    E = f.frame
    assert abs(np.linalg.norm(f.N) - 1) < 1e-14
    np.testing.assert_allclose(E @ E.T, np.eye(3), atol=1e-12)
    assert abs(E[-1] @ f.N - 1) < 1e-12


def test_frame_orthonormal_bulk():
    rng = np.random.default_rng(3)
    P = rng.normal(size=(20000, 2, 2))
    worst = 0.0
    for x, y in P:
        f = segment_frame(x, y)
        worst = max(worst, np.max(np.abs(f.frame @ f.frame.T - np.eye(2))),
                    abs(f.frame[-1] @ f.N - 1))
    assert worst < 1e-12


def test_lemma_item3_paired_r_derivative():
    f = segment_frame([0, 0], [2, 0])
    res = lemma21_residuals(f, 1e-3)
    assert res["3.r"] < 1e-9      # linear in h, exact up to rounding
    assert res["1.N"] < 1e-9
    assert res["2.theta"] < 1e-5


@pytest.mark.parametrize("x,y", [([0.1, -0.2], [0.5, 0.6]),
                                 ([-0.3, 0.4], [0.2, -0.7]),
                                 ([0, 0, 0], [0.3, -0.4, 0.5])])
def test_lemma_residual_orders(x, y):
    out = lemma21_check(segment_frame(x, y), 1e-2, levels=3)
    assert len(out) == 15
    for key, val in out.items():
        assert max(val["residuals"]) < 50 * 1e-2 ** 2, key
        if val["order"] is not None:
            assert val["order"] >= 1.9, (key, val)


def test_lemma_step_precondition():
    with pytest.raises(ValueError):
        lemma21_residuals(segment_frame([0, 0], [1, 0]), 0.5)


@pytest.mark.parametrize("dom,x,expected", [
    (disc(), [0.0, 0.0], (-1.0, 1.0)),
    (disc(), [0.5, 0.0], (-1.5, 0.5)),
    (ellipse((2.0, 1.0)), [0.0, 0.0], (-2.0, 2.0)),
])
def test_chord_clip_examples(dom, x, expected):
    a, b = chord_clip(dom, x, [1.0, 0.0])
    assert a == pytest.approx(expected[0], abs=1e-8)
    assert b == pytest.approx(expected[1], abs=1e-8)


def test_chord_clip_residual_and_midpoint():
    dom = ellipse((2.0, 1.0))
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.uniform(-0.5, 0.5, 2)
        d = rng.normal(size=2)
        d /= np.linalg.norm(d)
        a, b = chord_clip(dom, x, d)
        assert abs(dom.phi(x + a * d)) < 1e-10
        assert abs(dom.phi(x + b * d)) < 1e-10
        assert dom.phi(x + 0.5 * (a + b) * d) > 0


def test_chord_clip_outside():
    with pytest.raises(NotInside):
        chord_clip(disc(), [2.0, 0.0], [1.0, 0.0])


def test_diameter_disc_and_ellipse():
    assert diameter(disc()) == pytest.approx(2.0, abs=2e-4)
    assert diameter(ellipse((2.0, 1.0))) == pytest.approx(4.0, abs=4e-4)


def test_diameter_quartic_against_boundary_samples():
    dom = quartic((0.0, 0.0), (1.0, 1.0))
    pts = boundary_points(dom, 720)
    brute = np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1))
    D = diameter(dom)
    assert D >= brute * (1 - 1e-4)
    assert abs(D - brute) / brute < 1e-3


def test_domain_validation_probes():
    for dom in (disc(), ellipse((2.0, 1.0)), quartic((0.0, 0.0), (1.0, 1.0))):
        dom.validate()
