import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import CubicSpline

from pulsecomp.spline import (
    CubicSegment,
    SplineProgram,
    evaluate,
    fit_natural_cubic,
    sample,
    split_cycles,
    wind_phase_coefficients,
)

import oracles

knot_vectors = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False, allow_infinity=False), min_size=2, max_size=16
)


def at_knot_coordinate(sp, x):
    """Evaluate at knot coordinate ``x`` (segment index + fraction)."""
    i = min(int(np.floor(x)), len(sp.segments) - 1)
    return float(sp.segments[i].at(x - i))


def endpoint_second_derivative(seg, end):
    """One-sided second difference at u=0 or u=1 from per-cycle samples.

    The four-point stencil is exact for cubics, so only rounding remains.
    Result is in knot-coordinate units (value per knot spacing squared).
    """
    n = seg.duration_cycles
    h = 1.0 / n
    u = [0.0, h, 2 * h, 3 * h] if end == 0 else [1.0, 1 - h, 1 - 2 * h, 1 - 3 * h]
    f = [seg.at(x) for x in u]
    return (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2


@pytest.mark.parametrize(
    "total, parts, expected",
    [(10, 3, [4, 3, 3]), (9, 3, [3, 3, 3]), (3072, 3, [1024, 1024, 1024]), (5, 5, [1] * 5), (11, 4, [3, 3, 3, 2])],
)
def test_split_cycles(total, parts, expected):
    assert split_cycles(total, parts) == expected == oracles.even_split(total, parts)


def test_split_cycles_rejects_too_few():
    with pytest.raises(ValueError):
        split_cycles(2, 3)


def test_two_knots_linear():
    sp = fit_natural_cubic([0, 1], 1000)
    assert len(sp.segments) == 1
    assert sp.segments[0].coeffs == (0.0, 1.0, 0.0, 0.0)
    assert evaluate(sp, 0) == 0.0
    assert evaluate(sp, 999.999) == pytest.approx(1.0, abs=1e-5)


def test_worked_knots_reproduced():
    sp = fit_natural_cubic([0, 4, 1, 3], 3072)
    assert [s.duration_cycles for s in sp.segments] == [1024, 1024, 1024]
    assert evaluate(sp, 0) == pytest.approx(0, abs=1e-9)
    assert evaluate(sp, 1024) == pytest.approx(4, abs=1e-9)
    assert evaluate(sp, 2048) == pytest.approx(1, abs=1e-9)
    assert sp.segments[-1].at(1.0) == pytest.approx(3, abs=1e-9)


def test_constant_knots():
    sp = fit_natural_cubic([5, 5, 5], 600)
    for seg in sp.segments:
        assert seg.coeffs == (5.0, 0.0, 0.0, 0.0)
        assert seg.duration_cycles == 300


def test_fit_rejects_one_knot():
    with pytest.raises(ValueError):
        fit_natural_cubic([1.0], 10)


def test_evaluate_out_of_range():
    sp = fit_natural_cubic([0, 1], 10)
    for c in (-1, 10, 11):
        with pytest.raises(ValueError):
            evaluate(sp, c)


def test_sample_matches_evaluate():
    sp = fit_natural_cubic([0, 4, 1, 3, -2], 1001)
    s = sample(sp, 2)
    assert len(s) == 2002
    for i in (0, 1, 500, 1377, 2001):
        assert s[i] == pytest.approx(evaluate(sp, i / 2), abs=1e-12)


def test_against_scipy_natural_spline():
    rng = np.random.default_rng(7)
    for _ in range(50):
        k = int(rng.integers(3, 17))
        y = rng.uniform(-100, 100, k)
        sp = fit_natural_cubic(y, 100 * (k - 1))
        ref = CubicSpline(np.arange(k), y, bc_type="natural")
        x = rng.uniform(0, k - 1, 100)
        got = np.array([at_knot_coordinate(sp, v) for v in x])
        assert np.max(np.abs(got - ref(x))) < 1e-9


def test_wind_examples():
    sp = SplineProgram((CubicSegment(350, 1, 0, 0, 10), CubicSegment(370, 1, 0, 0, 10)))
    wound = wind_phase_coefficients(sp)
    assert [s.c0 for s in wound.segments] == [-10, 10]
    assert [s.c1 for s in wound.segments] == [1, 1]
    inside = SplineProgram((CubicSegment(-180, 2, 3, 4, 5), CubicSegment(179.5, 0, 0, 0, 5)))
    assert wind_phase_coefficients(inside) == inside


def test_wind_preserves_waveform():
    sp = fit_natural_cubic([0, 240, 480, 720], 3000)
    wound = wind_phase_coefficients(sp)
    assert all(-180 <= s.c0 < 180 for s in wound.segments)
    assert [s.coeffs[1:] for s in wound.segments] == [s.coeffs[1:] for s in sp.segments]
    a = np.sin(2 * np.pi * sample(sp) / 360)
    b = np.sin(2 * np.pi * sample(wound) / 360)
    assert np.max(np.abs(a - b)) < 1e-9


@settings(max_examples=200, deadline=None)
@given(knot_vectors)
def test_interpolates_knots(knots):
    sp = fit_natural_cubic(knots, 64 * (len(knots) - 1))
    scale = max(1.0, max(abs(v) for v in knots))
    for i, y in enumerate(knots[:-1]):
        assert abs(sp.segments[i].at(0.0) - y) <= 1e-9 * scale
    assert abs(sp.segments[-1].at(1.0) - knots[-1]) <= 1e-9 * scale


@settings(max_examples=200, deadline=None)
@given(knot_vectors)
def test_continuity_and_natural_boundary(knots):
    sp = fit_natural_cubic(knots, 1000 * (len(knots) - 1))
    scale = max(1.0, max(abs(v) for v in knots))
    for a, b in zip(sp.segments, sp.segments[1:]):
        assert abs(a.at(1.0) - b.at(0.0)) <= 1e-9 * scale
    assert abs(endpoint_second_derivative(sp.segments[0], 0)) < 1e-6
    assert abs(endpoint_second_derivative(sp.segments[-1], 1)) < 1e-6


@settings(max_examples=200, deadline=None)
@given(knot_vectors, st.integers(0, 2**31))
def test_matches_dense_oracle(knots, seed):
    sp = fit_natural_cubic(knots, 16 * (len(knots) - 1))
    x = np.random.default_rng(seed).uniform(0, len(knots) - 1, 20)
    got = np.array([at_knot_coordinate(sp, v) for v in x])
    assert np.max(np.abs(got - oracles.natural_spline_dense(knots, x))) < 1e-9


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=2), st.integers(1, 10_000))
def test_two_knots_exactly_linear(knots, cycles):
    (seg,) = fit_natural_cubic(knots, cycles).segments
    assert seg.c2 == 0.0 and seg.c3 == 0.0


@given(st.integers(1, 10**6), st.integers(1, 64))
def test_split_cycles_properties(total, parts):
    if total < parts:
        return
    pieces = split_cycles(total, parts)
    assert sum(pieces) == total
    assert max(pieces) - min(pieces) <= 1
    assert pieces == sorted(pieces, reverse=True)
