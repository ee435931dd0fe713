import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal

from mfdcca.errors import ConfigError, DataError
from mfdcca.profile import (
    MAWindow,
    as_series,
    build_profile,
    detrend_boxes,
    dma_residual_pair,
    dma_residuals,
    moving_average,
    polyfit_residuals,
    residual_offset,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def series(min_size=1, max_size=60):
    return arrays(np.float64, st.integers(min_size, max_size), elements=finite)


# -- build_profile -----------------------------------------------------------


@pytest.mark.parametrize(
    "raw, expected",
    [([0, 0, 0], [0, 0, 0]), ([1, 1, 1, 1], [1, 2, 3, 4]), ([1, -2, 3], [1, -1, 2])],
)
def test_build_profile_examples(raw, expected):
    assert_array_equal(build_profile(raw), expected)


def test_build_profile_rejects_bad_input():
    with pytest.raises(DataError, match="empty"):
        build_profile([])
    with pytest.raises(DataError, match="non-finite input at index 2"):
        build_profile([1.0, 2.0, np.nan])
    with pytest.raises(DataError, match="non-finite"):
        as_series([np.inf])


@given(series())
def test_profile_difference_round_trip(x):
    p = build_profile(x)
    back = np.diff(p, prepend=0.0)
    # integer-valued inputs are exact; reals up to cumulative rounding
    assert_allclose(back, x, rtol=0, atol=1e-9 * max(1.0, np.abs(p).max()))


@given(arrays(np.int64, st.integers(1, 60), elements=st.integers(-10**6, 10**6)))
def test_profile_difference_round_trip_exact_for_integers(x):
    x = x.astype(np.float64)
    assert_array_equal(np.diff(build_profile(x), prepend=0.0), x)


# -- moving averages ----------------------------------------------------------


def test_window_spans():
    for n in range(1, 12):
        for theta in (0.0, 0.25, 0.5, 0.7, 1.0):
            w = MAWindow(n, theta)
            assert w.past + w.future == n - 1
    assert (MAWindow(5, 0.0).past, MAWindow(5, 0.0).future) == (4, 0)
    assert (MAWindow(5, 0.5).past, MAWindow(5, 0.5).future) == (2, 2)
    assert (MAWindow(4, 0.5).past, MAWindow(4, 0.5).future) == (2, 1)
    assert (MAWindow(5, 1.0).past, MAWindow(5, 1.0).future) == (0, 4)


def test_window_validation():
    with pytest.raises(ConfigError):
        MAWindow(0)
    with pytest.raises(ConfigError):
        MAWindow(3, 1.5)


@pytest.mark.parametrize("theta", [0.0, 0.5, 1.0])
def test_moving_average_constant(theta):
    assert_allclose(moving_average([2.5] * 5, MAWindow(3, theta)), [2.5, 2.5, 2.5])


def test_moving_average_identity_window():
    p = np.array([3.0, -1.0, 4.0, 1.5])
    assert_array_equal(moving_average(p, MAWindow(1, 0.3)), p)


def test_moving_average_backward_example():
    # trend at t = 3, 4, 5 (one-based) of the backward window n = 3
    w = MAWindow(3, 0.0)
    ma = moving_average([1, 2, 3, 4, 5], w)
    assert_allclose(ma, [2, 3, 4])
    assert w.past == 2  # element 0 belongs to t = 1 + past = 3


def test_moving_average_scale_too_large():
    with pytest.raises(DataError, match="scale exceeds series"):
        moving_average([1.0, 2.0], MAWindow(3))


@given(series(3), st.integers(1, 3))
def test_moving_average_mirror_symmetry(p, n):
    back = moving_average(p, MAWindow(n, 0.0))
    fwd = moving_average(p[::-1], MAWindow(n, 1.0))[::-1]
    assert_allclose(back, fwd, rtol=1e-12, atol=1e-9)


def test_moving_average_shift_exact():
    # dyadic values keep every sum exact
    p = np.array([0.5, 1.25, -2.0, 4.0, 3.75, 1.0])
    c = 8.0
    w = MAWindow(4, 0.5)
    assert_array_equal(moving_average(p + c, w), moving_average(p, w) + c)


@settings(max_examples=50)
@given(series(4), finite, st.integers(1, 4))
def test_moving_average_shift(p, c, n):
    w = MAWindow(n, 0.5)
    assert_allclose(moving_average(p + c, w), moving_average(p, w) + c, rtol=1e-12, atol=1e-9)


# -- DMA residuals -------------------------------------------------------------


def test_residual_pair_zero_profile():
    z = np.zeros(10)
    pair = dma_residual_pair(z, z, 4, 0.5)
    assert_array_equal(pair.eps_x, 0)
    assert_array_equal(pair.eps_y, 0)


@pytest.mark.parametrize("s", [3, 5, 9])
def test_residual_pair_linear_profile_centered(s):
    p = 1.7 * np.arange(1, 31)
    pair = dma_residual_pair(p, p, s, 0.5)
    assert_allclose(pair.eps_x, 0, atol=1e-12)


def test_residual_pair_example():
    p = [1, 2, 4, 8, 16]
    pair = dma_residual_pair(p, p, 3, 0.0)
    assert_allclose(pair.eps_x, [4 - 7 / 3, 8 - 14 / 3, 16 - 28 / 3], rtol=1e-14)
    assert pair.origin_offset == 2


def test_residual_pair_matlab_alignment_mirrors_theta():
    # the reference code pairs window j with point j + floor((s-1) theta)
    p = np.array([1.0, 2, 4, 8, 16])
    pair = dma_residual_pair(p, p, 3, 0.0, alignment="matlab")
    assert_allclose(pair.eps_x, [1 - 7 / 3, 2 - 14 / 3, 4 - 28 / 3], rtol=1e-14)
    assert residual_offset(3, 1.0, "matlab") == residual_offset(3, 0.0, "formula")
    with pytest.raises(ConfigError):
        residual_offset(3, 0.0, "other")


@settings(max_examples=40)
@given(series(1, 40), st.data())
def test_residual_length(x, data):
    s = data.draw(st.integers(1, x.size))
    theta = data.draw(st.sampled_from([0.0, 0.5, 1.0]))
    p = np.cumsum(x)
    pair = dma_residual_pair(p, p, s, theta)
    assert pair.eps_x.size == x.size - s + 1


@settings(max_examples=40)
@given(series(2, 40), st.data())
def test_residuals_match_direct_definition(x, data):
    s = data.draw(st.integers(1, x.size))
    theta = data.draw(st.sampled_from([0.0, 0.3, 0.5, 1.0]))
    p = np.cumsum(x)
    off = MAWindow(s, theta).past
    direct = np.array([p[t + off] - p[t:t + s].mean() for t in range(x.size - s + 1)])
    scale = max(1.0, np.abs(p).max())
    assert_allclose(dma_residuals(x, s, theta), direct, rtol=0, atol=1e-9 * scale)


def test_residual_pair_errors():
    with pytest.raises(DataError, match="pair length mismatch"):
        dma_residual_pair([1.0, 2.0], [1.0], 1, 0.0)
    with pytest.raises(DataError, match="scale exceeds series"):
        dma_residual_pair([1.0, 2.0], [1.0, 2.0], 3, 0.0)


# -- polynomial residuals ------------------------------------------------------


def test_polyfit_linear_segment():
    t = np.arange(1, 21, dtype=float)
    ex, ey = polyfit_residuals(3 * t - 2, -0.5 * t + 7, order=1)
    assert_allclose(ex, 0, atol=1e-10)
    assert_allclose(ey, 0, atol=1e-10)


def test_polyfit_quadratic_segment():
    t = np.arange(1, 21, dtype=float)
    seg = 0.3 * t**2 - 2 * t + 1
    ex, _ = polyfit_residuals(seg, seg, order=2)
    assert_allclose(ex, 0, atol=1e-10)


def test_polyfit_example_against_lstsq():
    seg = np.array([1.0, 3.0, 2.0, 5.0])
    t = np.arange(1, 5, dtype=float)
    coef, *_ = np.linalg.lstsq(np.column_stack([t, np.ones(4)]), seg, rcond=None)
    expected = seg - (coef[0] * t + coef[1])
    # normal equations by hand: slope 1.1, intercept 2.75 - 1.1 * 2.5 = 0
    assert_allclose(coef, [1.1, 0.0], atol=1e-12)
    ex, _ = polyfit_residuals(seg, seg, order=1)
    assert_allclose(ex, expected, atol=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_polyfit_matches_monomial_lstsq(order):
    rng = np.random.default_rng(order)
    seg = np.cumsum(rng.standard_normal(64))
    t = np.arange(1, 65, dtype=float)
    design = np.vander(t, order + 1)
    coef, *_ = np.linalg.lstsq(design, seg, rcond=None)
    ex, _ = polyfit_residuals(seg, seg, order)
    assert_allclose(ex, seg - design @ coef, atol=1e-9)


@settings(max_examples=40)
@given(series(8, 40), finite, st.integers(1, 4))
def test_polyfit_invariant_to_constant_in_raw_series(x, c, order):
    p = np.cumsum(x)
    ramp = np.cumsum(x + c)
    e1, _ = polyfit_residuals(p, p, order)
    e2, _ = polyfit_residuals(ramp, ramp, order)
    scale = max(1.0, np.abs(p).max(), np.abs(ramp).max())
    assert_allclose(e1, e2, rtol=0, atol=1e-9 * scale)


def test_polyfit_errors():
    with pytest.raises(ConfigError, match="unsupported order"):
        polyfit_residuals(np.arange(10.0), np.arange(10.0), order=5)
    with pytest.raises(DataError, match="degenerate fit"):
        polyfit_residuals([1.0, 2.0], [1.0, 2.0], order=1)
    with pytest.raises(DataError, match="pair length mismatch"):
        polyfit_residuals([1.0, 2.0, 3.0], [1.0, 2.0], order=1)


def test_detrend_boxes_rowwise():
    rng = np.random.default_rng(3)
    boxes = rng.standard_normal((5, 12))
    res = detrend_boxes(boxes, 2)
    for row, r in zip(boxes, res):
        ex, _ = polyfit_residuals(row, row, 2)
        assert_allclose(r, ex, atol=1e-12)
