"""Two-dimensional MF-X-DMA and the difference matrices of cumulated fields.

Fields are indexed ``z[i1, i2]``; rows run along the first dimension.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DataError, DegenerateError
from .estimators import DEFAULT_Q, _fq


def as_field(values, ndim=2, name="field"):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DataError(f"{name}: expected a {ndim}-dimensional array, got shape {arr.shape}")
    if min(arr.shape) < 2:
        raise DataError(f"{name}: every dimension needs at least 2 points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name}: non-finite input")
    return arr


def cumulate(z):
    """Multiple cumulative sum ``Z(i1, .., id) = sum_{j <= i} z(j)`` over every axis."""
    out = np.asarray(z, dtype=np.float64)
    for axis in range(out.ndim):
        out = np.cumsum(out, axis=axis)
    return out


def _difference(Z):
    # inclusion-exclusion over all axes with Z = 0 on the zero-index boundary
    z = np.asarray(Z, dtype=np.float64)
    for axis in range(z.ndim):
        z = np.diff(z, axis=axis, prepend=0.0)
    return z


def difference_matrix_2d(Z):
    """``z(i1,i2) = Z(i1,i2) + Z(i1-1,i2-1) - Z(i1-1,i2) - Z(i1,i2-1)``."""
    return _difference(as_field(Z, 2, "Z"))


def difference_matrix_3d(Z):
    """Eight-term alternating difference; the inverse of :func:`cumulate` in three dimensions."""
    return _difference(as_field(Z, 3, "Z"))


def _spans(s, theta):
    past = math.ceil(round((s - 1) * (1.0 - theta), 9))
    future = math.floor(round((s - 1) * theta, 9))
    return past, future


@dataclass(frozen=True)
class HDConfig:
    s1: int
    s2: int = None
    theta1: float = 0.0
    theta2: float = None
    q: tuple = DEFAULT_Q

    def __post_init__(self):
        if self.s2 is None:
            object.__setattr__(self, "s2", self.s1)
        if self.theta2 is None:
            object.__setattr__(self, "theta2", self.theta1)
        for s in (self.s1, self.s2):
            if int(s) != s or s < 2:
                raise ConfigError(f"window sizes must be integers >= 2, got {s!r}")
        for t in (self.theta1, self.theta2):
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"theta must lie in [0, 1], got {t!r}")
        object.__setattr__(self, "q", tuple(float(v) for v in np.atleast_1d(self.q)))

    @property
    def scale(self):
        """Effective scale ``sqrt((s1^2 + s2^2) / 2)``."""
        return math.sqrt((self.s1**2 + self.s2**2) / 2.0)


def box_counts_2d(shape, config):
    """Boxes per dimension, ``floor((N_j - s_j (1 + theta_j)) / s_j)``."""
    return tuple(
        math.floor((n - s * (1.0 + t)) / s)
        for n, s, t in zip(shape, (config.s1, config.s2), (config.theta1, config.theta2))
    )


def _window_sums(z, s, weights, axis):
    win = sliding_window_view(z, s, axis=axis)
    return win @ weights


def residuals_2d(z, config):
    """Residual field ``Q - Z~`` on its admissible index range.

    Returns ``(eps, lo)``, where ``eps[a1, a2]`` is the residual at the
    one-based point ``(lo[0] + a1, lo[1] + a2)``.
    """
    s = (config.s1, config.s2)
    th = (config.theta1, config.theta2)
    for n, sj in zip(z.shape, s):
        if sj > n:
            raise DataError(f"window {sj} exceeds field size {n}")
    # Z~ at a window whose first point is m1: sum_l z(l) (s1 - u1)/s1 (s2 - u2)/s2, u = l - m1
    trend = z
    box = z
    for axis, sj in enumerate(s):
        ramp = (sj - np.arange(sj, dtype=np.float64)) / sj
        trend = _window_sums(trend, sj, ramp, axis)
        box = _window_sums(box, sj, np.ones(sj), axis)
    # admissible one-based i_j in [s_j, N_j - future_j]; trailing box starts at i_j - s_j (0-based),
    # the moving-average window at i_j - 1 - past_j (0-based)
    sl_box, sl_trend = [], []
    for n, sj, tj in zip(z.shape, s, th):
        past, future = _spans(sj, tj)
        count = n - future - sj + 1
        sl_box.append(slice(0, count))
        sl_trend.append(slice(sj - 1 - past, sj - 1 - past + count))
    eps = box[tuple(sl_box)] - trend[tuple(sl_trend)]
    return eps, s


def box_covariances_2d(ex, ey, lo, config, counts):
    s1, s2 = config.s1, config.s2
    n1, n2 = counts
    # box v covers one-based indices v s + 1 .. (v + 1) s, v = 1..N_s
    r0 = s1 + 1 - lo[0]
    c0 = s2 + 1 - lo[1]
    bx = ex[r0:r0 + n1 * s1, c0:c0 + n2 * s2].reshape(n1, s1, n2, s2)
    by = ey[r0:r0 + n1 * s1, c0:c0 + n2 * s2].reshape(n1, s1, n2, s2)
    return np.mean(bx * by, axis=(1, 3)).ravel()


@dataclass
class Fluctuation2D:
    q: np.ndarray
    scales: np.ndarray
    windows: list
    f_xy: np.ndarray
    f_xx: np.ndarray
    f_yy: np.ndarray

    def get(self, which="xy"):
        return {"xy": self.f_xy, "xx": self.f_xx, "yy": self.f_yy}[which]

    def rows(self):
        for j, s in enumerate(self.scales):
            for i, q in enumerate(self.q):
                yield q, s, self.f_xx[i, j], self.f_xy[i, j], self.f_yy[i, j]


def mfxdma_2d(zx, zy, config):
    """q-th order detrending cross-correlation functions of two fields at one window size.

    `zx` and `zy` are the difference matrices (the two-dimensional analogue of
    the raw series). Returns ``(f_xy, f_xx, f_yy)`` over ``config.q``.
    """
    zx = as_field(zx, 2, "zx")
    zy = as_field(zy, 2, "zy")
    if zx.shape != zy.shape:
        raise DataError(f"field shape mismatch: {zx.shape} != {zy.shape}")
    for n, s in zip(zx.shape, (config.s1, config.s2)):
        if s > n / 4:
            raise DataError(f"window {s} exceeds a quarter of the field size {n}")
    counts = box_counts_2d(zx.shape, config)
    if min(counts) < 1:
        raise DataError(f"window {config.s1}x{config.s2} leaves no box in a {zx.shape} field")
    same = zx is zy or np.array_equal(zx, zy)
    ex, lo = residuals_2d(zx, config)
    ey = ex if same else residuals_2d(zy, config)[0]
    scale = config.scale
    fxx = box_covariances_2d(ex, ex, lo, config, counts)
    out_xx = _fq(fxx, config.q, scale)
    if same:
        return out_xx, out_xx, out_xx
    fxy = box_covariances_2d(ex, ey, lo, config, counts)
    fyy = box_covariances_2d(ey, ey, lo, config, counts)
    return _fq(fxy, config.q, scale), out_xx, _fq(fyy, config.q, scale)


def run_mfxdma_2d(zx, zy, windows, theta=0.0, q=DEFAULT_Q):
    """Square-window sweep over `windows`, collected into a :class:`Fluctuation2D`."""
    cols = []
    configs = [HDConfig(int(s), theta1=theta, q=q) for s in windows]
    for cfg in configs:
        cols.append(mfxdma_2d(zx, zy, cfg))
    fxy, fxx, fyy = (np.column_stack(c) for c in zip(*cols))
    return Fluctuation2D(
        np.array(configs[0].q),
        np.array([c.scale for c in configs]),
        [(c.s1, c.s2) for c in configs],
        fxy,
        fxx,
        fyy,
    )


def degenerate_check(f):
    if not np.all(f > 0):
        raise DegenerateError("degenerate zero box")
