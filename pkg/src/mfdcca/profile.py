"""Profiles and detrended residuals for the DMA and DFA families."""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal

from .errors import ConfigError, DataError

ALIGNMENTS = ("formula", "matlab")


def as_series(values, name="series"):
    """Validate `values` as a non-empty, finite, one-dimensional float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"{name}: expected a one-dimensional sequence, got shape {arr.shape}")
    if arr.size == 0:
        raise DataError(f"{name}: empty series")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise DataError(f"{name}: non-finite input at index {bad}")
    return arr


def build_profile(series):
    """Running cumulative sum of `series` (same length as the input)."""
    return np.cumsum(as_series(series))


def _floor(v):
    # tolerate representation error, e.g. (s - 1) * 0.7 landing at 6.9999999
    return math.floor(round(v, 9))


def _ceil(v):
    return math.ceil(round(v, 9))


@dataclass(frozen=True)
class MAWindow:
    """Moving-average window of size `n` positioned by `theta`.

    ``theta = 0`` averages the current point and the ``n - 1`` points before
    it (backward), ``theta = 1`` the ``n - 1`` points after it (forward) and
    ``theta = 0.5`` is centered.
    """

    n: int
    theta: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"window size must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta!r}")

    @property
    def past(self):
        return _ceil((self.n - 1) * (1.0 - self.theta))

    @property
    def future(self):
        return _floor((self.n - 1) * self.theta)


def moving_average(profile, window):
    """Window means of `profile` at every admissible position.

    Element ``j`` is the mean of ``profile[j:j + n]``; it is the trend at the
    time index ``j + window.past``. Windows are never shrunk or padded at the
    ends, so the output has ``len(profile) - n + 1`` values.
    """
    profile = as_series(profile, "profile")
    if window.n > profile.size:
        raise DataError(f"scale exceeds series: n={window.n} > length {profile.size}")
    return sliding_window_view(profile, window.n).mean(axis=1)


def residual_offset(s, theta, alignment="formula"):
    """Index of the profile point paired with the first window mean.

    The ``"formula"`` alignment follows the moving-average definition (past
    span ``ceil((s-1)(1-theta))``). The ``"matlab"`` alignment reproduces the
    published reference code, which pairs window ``j`` with profile point
    ``j + floor((s-1) theta)``; this mirrors theta for 0 and 1.
    """
    if alignment == "formula":
        return MAWindow(s, theta).past
    if alignment == "matlab":
        return math.floor((s - 1) * theta)
    raise ConfigError(f"unknown alignment {alignment!r}; expected one of {ALIGNMENTS}")


def dma_residuals(series, s, theta, alignment="formula"):
    """DMA residuals ``profile[t + offset] - mean(profile[t:t + s])`` computed from raw increments.

    Working with increments avoids the cancellation of subtracting two large
    cumulative sums: the residual equals ``sum_j w_j x[t + j]`` with
    ``w_j = j/s`` up to the offset and ``-(s - j)/s`` after it.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if s > n:
        raise DataError(f"scale exceeds series: s={s} > length {n}")
    if s == 1:
        return np.zeros(n)
    offset = residual_offset(s, theta, alignment)
    j = np.arange(1, s, dtype=np.float64)
    w = np.where(j <= offset, j / s, -(s - j) / s)
    return signal.correlate(x[1:], w, mode="valid")


@dataclass(frozen=True)
class ResidualPair:
    eps_x: np.ndarray
    eps_y: np.ndarray
    origin_offset: int


def dma_residual_pair(px, py, s, theta, alignment="formula"):
    """Detrend two profiles with the same moving-average window.

    Returns residuals of length ``N - s + 1``; ``origin_offset`` is the
    profile index matched with the first residual.
    """
    px = as_series(px, "px")
    py = as_series(py, "py")
    if px.size != py.size:
        raise DataError(f"pair length mismatch: {px.size} != {py.size}")
    if s > px.size:
        raise DataError(f"scale exceeds series: s={s} > length {px.size}")
    dx = np.diff(px, prepend=0.0)
    dy = np.diff(py, prepend=0.0)
    return ResidualPair(
        dma_residuals(dx, s, theta, alignment),
        dma_residuals(dy, s, theta, alignment),
        residual_offset(s, theta, alignment),
    )


def _check_order(order, s):
    if order not in (1, 2, 3, 4):
        raise ConfigError(f"unsupported order {order!r}; supported orders are 1-4")
    if s <= order + 1:
        raise DataError(f"degenerate fit: segment length {s} <= order + 1 = {order + 1}")


def _trend_basis(s, order):
    # Orthonormal basis of span{t^order, ..., t^0}, t = 1..s. The columns are
    # scaled by s^k before the QR, which leaves the fitted space unchanged.
    t = np.arange(1, s + 1, dtype=np.float64) / s
    design = np.vander(t, order + 1)
    q, _ = np.linalg.qr(design)
    return q


def detrend_boxes(boxes, order):
    """Least-squares polynomial residuals of each row of `boxes` (shape ``(m, s)``)."""
    boxes = np.asarray(boxes, dtype=np.float64)
    s = boxes.shape[1]
    _check_order(order, s)
    # removing each row's first value is absorbed by the intercept
    centred = boxes - boxes[:, :1]
    basis = _trend_basis(s, order)
    return centred - (centred @ basis) @ basis.T


def polyfit_residuals(box_x, box_y, order=1):
    """Residuals of independent order-`order` polynomial fits to two profile segments."""
    bx = as_series(box_x, "box_x")
    by = as_series(box_y, "box_y")
    if bx.size != by.size:
        raise DataError(f"pair length mismatch: {bx.size} != {by.size}")
    _check_order(order, bx.size)
    res = detrend_boxes(np.vstack([bx, by]), order)
    return res[0], res[1]
