"""Seedable test processes with known scaling exponents.

* two-component ARFIMA processes (coupled and common-noise forms)
* binomial measures from the p-model
* fractional Gaussian noise by circulant embedding, and correlated pairs of it
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, DataError

ARFIMA_CUTOFF = 10_000


class SeriesPair(NamedTuple):
    x: np.ndarray
    y: np.ndarray


def _streams(seed, n):
    """`n` independent generators derived from one integer seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


# ---------------------------------------------------------------------------
# ARFIMA
# ---------------------------------------------------------------------------


def arfima_weights(d, m=ARFIMA_CUTOFF):
    """Weights ``a_n(d) = d Gamma(n - d) / (Gamma(1 - d) Gamma(n + 1))`` for n = 1..m.

    Built from ``a_1 = d`` with the ratio ``a_{n+1} / a_n = (n - d) / (n + 1)``,
    which stays finite where the gamma functions themselves overflow.
    """
    if not 0.0 < d < 0.5:
        raise ConfigError(f"memory parameter d must lie in (0, 0.5), got {d!r}")
    if int(m) != m or m < 1:
        raise ConfigError(f"cutoff must be a positive integer, got {m!r}")
    n = np.arange(1, m, dtype=np.float64)
    ratios = (n - d) / (n + 1.0)
    return d * np.concatenate([[1.0], np.cumprod(ratios)])


def arfima_weights_lgamma(d, m=ARFIMA_CUTOFF):
    """Same weights evaluated directly through log-gamma."""
    n = np.arange(1, m + 1, dtype=np.float64)
    return d * np.exp(gammaln(n - d) - gammaln(1.0 - d) - gammaln(n + 1.0))


@dataclass(frozen=True)
class ArfimaSpec:
    d1: float
    d2: float
    n: int
    w: float = 1.0
    common_noise: bool = False
    cutoff: int = ARFIMA_CUTOFF
    burn_in: int = None
    seed: int = 0

    def __post_init__(self):
        for name in ("d1", "d2"):
            d = getattr(self, name)
            if not 0.0 < d < 0.5:
                raise ConfigError(f"{name} must lie in (0, 0.5), got {d!r}")
        if not 0.5 <= self.w <= 1.0:
            raise ConfigError(f"coupling W must lie in [0.5, 1], got {self.w!r}")
        if self.n < 1 or self.cutoff < 1:
            raise ConfigError("length and cutoff must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn-in must be non-negative")

    @property
    def discard(self):
        return self.cutoff if self.burn_in is None else self.burn_in


def _arfima_recursion(a1, a2, w, ex, ey):
    total = ex.size
    m = a1.size
    r1 = a1[::-1].copy()
    r2 = a2[::-1].copy()
    x = np.zeros(total)
    y = np.zeros(total)
    for t in range(total):
        k = min(t, m)
        if k:
            hx = x[t - k:t] @ r1[m - k:]
            hy = y[t - k:t] @ r2[m - k:]
        else:
            hx = hy = 0.0
        x[t] = w * hx + (1.0 - w) * hy + ex[t]
        y[t] = (1.0 - w) * hx + w * hy + ey[t]
    return x, y


def gen_two_component_arfima(spec):
    """Coupled pair ``x = W X + (1-W) Y + e_x``, ``y = (1-W) X + W Y + e_y``.

    ``X(d1, t) = sum_n a_n(d1) x(t - n)`` and ``Y(d2, t)`` likewise over the
    past of y, truncated at ``spec.cutoff`` lags. The first ``spec.discard``
    samples are dropped.
    """
    if spec.common_noise:
        return gen_common_noise_arfima(spec)
    total = spec.n + spec.discard
    gx, gy = _streams(spec.seed, 2)
    ex = gx.standard_normal(total)
    ey = gy.standard_normal(total)
    x, y = _arfima_recursion(
        arfima_weights(spec.d1, spec.cutoff), arfima_weights(spec.d2, spec.cutoff), spec.w, ex, ey
    )
    return SeriesPair(x[spec.discard:], y[spec.discard:])


def gen_common_noise_arfima(spec):
    """``x = X(d1, t) + e(t)``, ``y = Y(d2, t) + e(t)`` with one shared innovation."""
    total = spec.n + spec.discard
    (g,) = _streams(spec.seed, 1)
    e = g.standard_normal(total)
    x, y = _arfima_recursion(
        arfima_weights(spec.d1, spec.cutoff), arfima_weights(spec.d2, spec.cutoff), 1.0, e, e
    )
    return SeriesPair(x[spec.discard:], y[spec.discard:])


# ---------------------------------------------------------------------------
# Binomial measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinomialSpec:
    p: float
    k: int

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ConfigError(f"p must lie in (0, 1), got {self.p!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")


def gen_binomial_measure(spec):
    """p-model cascade after ``spec.k`` dyadic splits (length ``2**k``, total mass 1)."""
    z = np.ones(1)
    for _ in range(spec.k):
        z = np.column_stack([spec.p * z, (1.0 - spec.p) * z]).ravel()
    return z


def gen_binomial_pair(p_x, p_y, k):
    return SeriesPair(
        gen_binomial_measure(BinomialSpec(p_x, k)), gen_binomial_measure(BinomialSpec(p_y, k))
    )


@dataclass
class TheoryCurves:
    q: np.ndarray
    h: np.ndarray
    tau: np.ndarray


def binomial_tau(p, q):
    q = np.asarray(q, dtype=np.float64)
    return -np.log2(p**q + (1.0 - p) ** q)


def binomial_h(p, q):
    """``(1 - log2(p^q + (1-p)^q)) / q`` with its limit ``-(log2 p + log2(1-p)) / 2`` at q = 0."""
    q = np.asarray(q, dtype=np.float64)
    limit = -(np.log2(p) + np.log2(1.0 - p)) / 2.0
    safe = np.where(q == 0, 1.0, q)
    return np.where(q == 0, limit, (binomial_tau(p, safe) + 1.0) / safe)


def binomial_theory(p, q, paired_with=None):
    """Theoretical h(q) and tau(q) of a binomial measure, or of a pair via their half-sums."""
    for v in (p, paired_with):
        if v is not None and not 0.0 < v < 1.0:
            raise ConfigError(f"p must lie in (0, 1), got {v!r}")
    q = np.asarray(q, dtype=np.float64)
    h = binomial_h(p, q)
    tau = binomial_tau(p, q)
    if paired_with is not None:
        h = 0.5 * (h + binomial_h(paired_with, q))
        tau = 0.5 * (tau + binomial_tau(paired_with, q))
    return TheoryCurves(q, h, tau)


def constant_theory(hurst, q):
    """Monofractal curves ``h(q) = H`` and ``tau(q) = q H - 1``."""
    q = np.asarray(q, dtype=np.float64)
    return TheoryCurves(q, np.full(q.size, float(hurst)), q * hurst - 1.0)


# ---------------------------------------------------------------------------
# Fractional Gaussian noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FbmSpec:
    """Fractional Gaussian noise parameters; `h_y` and `rho` describe the second component of a pair."""

    h: float
    n: int
    h_y: float = None
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for v in (self.h, self.h_y):
            if v is not None and not 0.0 < v < 1.0:
                raise ConfigError(f"Hurst index must lie in (0, 1), got {v!r}")
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [-1, 1], got {self.rho!r}")
        if self.n < 2:
            raise ConfigError(f"length must be at least 2, got {self.n}")


def fgn_autocovariance(h, lags):
    k = np.abs(np.asarray(lags, dtype=np.float64))
    return 0.5 * (np.abs(k + 1) ** (2 * h) - 2 * k ** (2 * h) + np.abs(k - 1) ** (2 * h))


def circulant_eigenvalues(h, n, tol=1e-9):
    """Eigenvalues of the size ``2(n-1)`` circulant embedding of the fGn covariance."""
    gamma = fgn_autocovariance(h, np.arange(n))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -tol:
        raise DataError(
            f"embedding not nonnegative-definite: eigenvalue {lam.min():.3g} for H={h}, n={n}"
        )
    return np.clip(lam, 0.0, None)


def _complex_normal(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def _synthesise(lam, noise, n):
    return np.fft.fft(np.sqrt(lam / lam.size) * noise).real[:n]


def gen_fgn_circulant(spec):
    """Exact fractional Gaussian noise of Hurst index ``spec.h`` (unit variance)."""
    lam = circulant_eigenvalues(spec.h, spec.n)
    (rng,) = _streams(spec.seed, 1)
    return _synthesise(lam, _complex_normal(rng, lam.size), spec.n)


def gen_correlated_fbm_pair(spec):
    """Two fGn series with contemporaneous correlation ``spec.rho``.

    For equal Hurst indices two independent fGn draws are mixed with weights
    ``(sqrt(1+rho) +- sqrt(1-rho)) / 2``; the result is an exact bivariate
    fractional Gaussian noise. For unequal indices each component is
    synthesised from its own spectrum, the two complex Gaussian drivers having
    correlation rho; the marginals are exact, the cross-covariance is an
    approximation.
    """
    h_y = spec.h if spec.h_y is None else spec.h_y
    rho = spec.rho
    g1, g2 = _streams(spec.seed, 2)
    if h_y == spec.h:
        lam = circulant_eigenvalues(spec.h, spec.n)
        a = _synthesise(lam, _complex_normal(g1, lam.size), spec.n)
        b = _synthesise(lam, _complex_normal(g2, lam.size), spec.n)
        u = np.sqrt(1.0 + rho) / 2.0
        v = np.sqrt(1.0 - rho) / 2.0
        return SeriesPair((u + v) * a + (u - v) * b, (u - v) * a + (u + v) * b)
    lam_x = circulant_eigenvalues(spec.h, spec.n)
    lam_y = circulant_eigenvalues(h_y, spec.n)
    zx = _complex_normal(g1, lam_x.size)
    zy = rho * zx + np.sqrt(1.0 - rho**2) * _complex_normal(g2, lam_y.size)
    return SeriesPair(_synthesise(lam_x, zx, spec.n), _synthesise(lam_y, zy, spec.n))
