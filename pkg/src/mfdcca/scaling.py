"""Scaling exponents h(q), mass exponents tau(q) and the Legendre spectrum."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class FitRange:
    s_min: float
    s_max: float

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ConfigError(f"fit range needs s_min < s_max, got [{self.s_min}, {self.s_max}]")

    def mask(self, scales):
        scales = np.asarray(scales)
        return (scales >= self.s_min) & (scales <= self.s_max)


@dataclass
class ScalingFit:
    """Per-q OLS of log10 F on log10 s."""

    q: np.ndarray
    h: np.ndarray
    intercept: np.ndarray
    h_stderr: np.ndarray
    resid_std: np.ndarray
    scales: np.ndarray


def fit_scaling_exponents(f, scales, q, fit_range=None):
    """Slopes of ``log10 F(q, s)`` against ``log10 s`` over the scales inside `fit_range`.

    `f` has one row per q and one column per scale. ``h_stderr`` is the
    standard error of the slope; ``resid_std`` the residual standard error.
    """
    f = np.asarray(f, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    mask = np.ones(scales.size, bool) if fit_range is None else fit_range.mask(scales)
    n = int(mask.sum())
    if n < 3:
        raise DataError(f"fit range holds {n} scales; at least 3 are required")
    fs = f[:, mask]
    if not np.all(fs > 0) or not np.all(np.isfinite(fs)):
        raise DataError("non-positive or non-finite fluctuation inside the fit range")
    lx = np.log10(scales[mask])
    ly = np.log10(fs)
    xc = lx - lx.mean()
    sxx = np.sum(xc**2)
    slope = (ly - ly.mean(axis=1, keepdims=True)) @ xc / sxx
    intercept = ly.mean(axis=1) - slope * lx.mean()
    resid = ly - (intercept[:, None] + slope[:, None] * lx)
    resid_std = np.sqrt(np.sum(resid**2, axis=1) / (n - 2))
    return ScalingFit(q, slope, intercept, resid_std / np.sqrt(sxx), resid_std, scales[mask])


def mass_exponents(h, q, d_f=1):
    """``tau(q) = q h(q) - D_f``."""
    return np.asarray(q, dtype=np.float64) * np.asarray(h, dtype=np.float64) - d_f


def legendre_spectrum(tau, q):
    """Singularity strengths and spectrum from tau(q) on the grid `q`.

    ``alpha = d tau / d q`` by central differences (one-sided at the ends),
    ``f = q alpha - tau``.
    """
    tau = np.asarray(tau, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if q.size < 3:
        raise DataError("the Legendre transform needs at least 3 moment orders")
    alpha = np.gradient(tau, q, edge_order=1)
    return alpha, q * alpha - tau


@dataclass
class ScalingResult:
    q: np.ndarray
    h: np.ndarray
    h_stderr: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    d_f: int = 1
    intercept: np.ndarray = None
    resid_std: np.ndarray = None

    def rows(self):
        """Long-format rows ``(q, h, h_stderr, tau, alpha, f_alpha)``."""
        for i, q in enumerate(self.q):
            yield q, self.h[i], self.h_stderr[i], self.tau[i], self.alpha[i], self.f_alpha[i]


def scaling_result(fm, fit_range=None, which="xy", d_f=1):
    """Fit one table of a :class:`~mfdcca.estimators.FluctuationMatrix` and derive tau, alpha, f."""
    fit = fit_scaling_exponents(fm.get(which), fm.scales, fm.q, fit_range)
    return result_from_h(fit.q, fit.h, fit.h_stderr, d_f, fit.intercept, fit.resid_std)


def result_from_h(q, h, h_stderr=None, d_f=1, intercept=None, resid_std=None):
    q = np.asarray(q, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    tau = mass_exponents(h, q, d_f)
    if q.size >= 3:
        alpha, f = legendre_spectrum(tau, q)
    else:
        alpha = f = np.full(q.size, np.nan)
    stderr = np.zeros_like(h) if h_stderr is None else np.asarray(h_stderr)
    return ScalingResult(q, h, stderr, tau, alpha, f, d_f, intercept, resid_std)


@dataclass
class ExponentDelta:
    q: np.ndarray
    delta_h: np.ndarray
    delta_tau: np.ndarray


def exponent_delta(est, theory_h, theory_tau, theory_q=None):
    """Elementwise ``h - H`` and ``tau - T``.

    `theory_q`, when given, must equal the estimate's q grid.
    """
    theory_h = np.asarray(theory_h, dtype=np.float64)
    theory_tau = np.asarray(theory_tau, dtype=np.float64)
    if theory_q is not None and not np.array_equal(np.asarray(theory_q, float), est.q):
        raise DataError("q grids of estimate and theory differ")
    if theory_h.shape != est.h.shape or theory_tau.shape != est.tau.shape:
        raise DataError("q grids of estimate and theory differ")
    return ExponentDelta(est.q, est.h - theory_h, est.tau - theory_tau)


def half_sum_check(h_xx, h_yy, h_xy):
    """Largest deviation ``max_q |h_xy - (h_xx + h_yy) / 2|``."""
    h_xy, h_xx, h_yy = (np.asarray(v, dtype=np.float64) for v in (h_xy, h_xx, h_yy))
    if not h_xy.shape == h_xx.shape == h_yy.shape:
        raise DataError("q grids of the three exponent curves differ")
    return float(np.max(np.abs(h_xy - 0.5 * (h_xx + h_yy))))
