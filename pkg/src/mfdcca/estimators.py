"""MF-X-DMA and MF-X-DFA fluctuation functions.

Both pipelines produce a :class:`FluctuationMatrix` holding ``F_xy(q, s)``
together with the auto-fluctuations ``F_xx`` and ``F_yy`` computed from the
same residuals.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError, DegenerateError
from .profile import ALIGNMENTS, as_series, detrend_boxes, dma_residuals

METHODS = ("dma", "dfa")
COVERAGES = ("forward", "both-ends")
COV_MODES = ("signed", "absolute")

DEFAULT_Q = tuple(np.round(np.arange(-4.0, 4.0 + 1e-9, 0.5), 10).tolist())


def default_scale_grid(n):
    """Scales ``round(10**(1.3 + 0.1 k))`` for k = 0, 1, ... not exceeding ``n / 4``."""
    if n < 80:
        raise DataError(f"series too short for default grid: length {n} < 80")
    scales = []
    k = 0
    while True:
        s = int(np.floor(10.0 ** (1.3 + 0.1 * k) + 0.5))
        if s > n / 4:
            break
        if not scales or s != scales[-1]:
            scales.append(s)
        k += 1
    return scales


@dataclass(frozen=True)
class EstimatorConfig:
    """Parameters of a single MF-X-DMA or MF-X-DFA run.

    ``scales=None`` selects :func:`default_scale_grid` for the series length.
    ``alignment`` only affects DMA; ``order`` only affects DFA.
    """

    method: str = "dma"
    theta: float = 0.0
    order: int = 1
    q: tuple = DEFAULT_Q
    scales: tuple = None
    coverage: str = "both-ends"
    cov_mode: str = "signed"
    alignment: str = "formula"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta!r}")
        if self.order not in (1, 2, 3, 4):
            raise ConfigError(f"unsupported order {self.order!r}; supported orders are 1-4")
        if self.coverage not in COVERAGES:
            raise ConfigError(f"unknown coverage {self.coverage!r}; expected one of {COVERAGES}")
        if self.cov_mode not in COV_MODES:
            raise ConfigError(f"unknown cov_mode {self.cov_mode!r}; expected one of {COV_MODES}")
        if self.alignment not in ALIGNMENTS:
            raise ConfigError(f"unknown alignment {self.alignment!r}; expected one of {ALIGNMENTS}")
        q = tuple(float(v) for v in np.atleast_1d(self.q))
        if not q or any(b <= a for a, b in zip(q, q[1:])):
            raise ConfigError("q grid must be non-empty, sorted and free of duplicates")
        object.__setattr__(self, "q", q)
        if self.scales is not None:
            scales = tuple(int(s) for s in np.atleast_1d(self.scales))
            if not scales or any(b <= a for a, b in zip(scales, scales[1:])):
                raise ConfigError("scale grid must be non-empty, sorted and free of duplicates")
            lowest = self.order + 2 if self.method == "dfa" else 4
            if scales[0] < max(4, lowest):
                raise ConfigError(f"smallest scale {scales[0]} is below the minimum {max(4, lowest)}")
            object.__setattr__(self, "scales", scales)

    @classmethod
    def matlab(cls, method="dma", **kwargs):
        """Settings reproducing the published MATLAB reference code."""
        kwargs.update(coverage="both-ends", cov_mode="absolute", alignment="matlab")
        return cls(method=method, **kwargs)

    def with_(self, **changes):
        return replace(self, **changes)

    def resolve_scales(self, n):
        return list(self.scales) if self.scales is not None else default_scale_grid(n)


@dataclass(frozen=True)
class BoxLayout:
    box_starts: np.ndarray
    box_size: int

    @property
    def box_count(self):
        return int(self.box_starts.size)

    def take(self, values):
        """Gather the boxes of `values` into an array of shape ``(box_count, box_size)``."""
        idx = self.box_starts[:, None] + np.arange(self.box_size)
        return np.asarray(values)[idx]


def partition_boxes(m, s, coverage="both-ends"):
    """Split ``m`` residuals into boxes of size ``s``.

    Forward-only coverage keeps ``m // s`` boxes from the left end. Both-ends
    coverage adds the same number of boxes aligned to the right end whenever
    ``s`` does not divide ``m``.
    """
    if coverage not in COVERAGES:
        raise ConfigError(f"unknown coverage {coverage!r}; expected one of {COVERAGES}")
    if s < 1:
        raise ConfigError(f"box size must be positive, got {s}")
    if m < s:
        raise DataError(f"scale exceeds residual length: s={s} > {m}")
    n = m // s
    starts = np.arange(n) * s
    rest = m - n * s
    if coverage == "both-ends" and rest:
        starts = np.concatenate([starts, starts + rest])
    return BoxLayout(starts, s)


def box_covariance(eps_x, eps_y, cov_mode="signed"):
    """Detrended covariance of one box.

    ``"absolute"`` multiplies absolute residuals, as the reference code does;
    the result is then never negative.
    """
    ex = np.asarray(eps_x, dtype=np.float64)
    ey = np.asarray(eps_y, dtype=np.float64)
    if ex.shape != ey.shape or ex.ndim != 1 or ex.size == 0:
        raise DataError(f"box length mismatch: {ex.shape} vs {ey.shape}")
    return float(_box_covariances(ex[None, :], ey[None, :], cov_mode)[0])


def _box_covariances(bx, by, cov_mode):
    if cov_mode == "signed":
        return np.mean(bx * by, axis=1)
    if cov_mode == "absolute":
        return np.mean(np.abs(bx) * np.abs(by), axis=1)
    raise ConfigError(f"unknown cov_mode {cov_mode!r}; expected one of {COV_MODES}")


def _fq(fv, q_grid, s=None):
    """q-th order averages of the box covariances `fv` for every q in `q_grid`."""
    a = np.abs(fv)
    out = np.empty(len(q_grid))
    has_zero = bool(np.any(a == 0.0))
    for i, q in enumerate(q_grid):
        if q <= 0 and has_zero:
            raise DegenerateError("degenerate zero box", q=q, s=s)
        if q == 0:
            out[i] = np.exp(0.5 * np.mean(np.log(a)))
        else:
            out[i] = np.exp(np.log(np.mean(a ** (q / 2.0))) / q)
    return out


def fluctuation_function(f_values, q):
    """``[mean |F_v|^(q/2)]^(1/q)``, or ``exp(mean(ln |F_v|) / 2)`` when ``q == 0``."""
    fv = np.asarray(f_values, dtype=np.float64).ravel()
    if fv.size == 0:
        raise DataError("no box covariances")
    return float(_fq(fv, [float(q)])[0])


@dataclass
class FluctuationMatrix:
    """``F(q, s)`` tables; rows follow `q`, columns follow `scales`."""

    q: np.ndarray
    scales: np.ndarray
    f_xy: np.ndarray
    f_xx: np.ndarray
    f_yy: np.ndarray
    box_counts: np.ndarray = field(default=None)
    config: EstimatorConfig = field(default=None)

    def get(self, which="xy"):
        try:
            return {"xy": self.f_xy, "xx": self.f_xx, "yy": self.f_yy}[which]
        except KeyError:
            raise ConfigError(f"unknown fluctuation table {which!r}") from None

    def rows(self):
        """Long-format rows ``(q, s, f_xx, f_xy, f_yy)``."""
        for j, s in enumerate(self.scales):
            for i, q in enumerate(self.q):
                yield q, int(s), self.f_xx[i, j], self.f_xy[i, j], self.f_yy[i, j]


def _validate_pair(x, y):
    x = as_series(x, "x")
    y = as_series(y, "y")
    if x.size != y.size:
        raise DataError(f"pair length mismatch: {x.size} != {y.size}")
    return x, y


def _fluctuations_at_scale(bx, by, config, s, same):
    fxy = _box_covariances(bx, by, config.cov_mode)
    fxx = _box_covariances(bx, bx, config.cov_mode)
    fyy = fxx if same else _box_covariances(by, by, config.cov_mode)
    q = config.q
    out_xx = _fq(fxx, q, s)
    out_xy = out_xx if same else _fq(fxy, q, s)
    out_yy = out_xx if same else _fq(fyy, q, s)
    return out_xx, out_xy, out_yy


def _assemble(config, scales, columns, counts):
    fxx, fxy, fyy = (np.column_stack(c) for c in zip(*columns))
    return FluctuationMatrix(
        q=np.array(config.q),
        scales=np.array(scales),
        f_xy=fxy,
        f_xx=fxx,
        f_yy=fyy,
        box_counts=np.array(counts),
        config=config,
    )


def run_mfxdma(x, y, config=None):
    """MF-X-DMA: moving-average detrending of both profiles at every scale."""
    config = config or EstimatorConfig(method="dma")
    if config.method != "dma":
        config = config.with_(method="dma")
    x, y = _validate_pair(x, y)
    same = x is y or np.array_equal(x, y)
    scales = config.resolve_scales(x.size)
    columns, counts = [], []
    for s in scales:
        if s > x.size:
            raise DataError(f"scale exceeds series: s={s} > length {x.size}")
        ex = dma_residuals(x, s, config.theta, config.alignment)
        ey = ex if same else dma_residuals(y, s, config.theta, config.alignment)
        layout = partition_boxes(ex.size, s, config.coverage)
        bx = layout.take(ex)
        by = bx if same else layout.take(ey)
        columns.append(_fluctuations_at_scale(bx, by, config, s, same))
        counts.append(layout.box_count)
    return _assemble(config, scales, columns, counts)


def run_mfxdfa(x, y, config=None):
    """MF-X-DFA: polynomial detrending of the global profiles box by box."""
    config = config or EstimatorConfig(method="dfa")
    if config.method != "dfa":
        config = config.with_(method="dfa")
    x, y = _validate_pair(x, y)
    same = x is y or np.array_equal(x, y)
    px = np.cumsum(x)
    py = px if same else np.cumsum(y)
    scales = config.resolve_scales(x.size)
    columns, counts = [], []
    for s in scales:
        layout = partition_boxes(px.size, s, config.coverage)
        bx = detrend_boxes(layout.take(px), config.order)
        by = bx if same else detrend_boxes(layout.take(py), config.order)
        columns.append(_fluctuations_at_scale(bx, by, config, s, same))
        counts.append(layout.box_count)
    return _assemble(config, scales, columns, counts)


def run(x, y, config):
    """Dispatch on ``config.method``."""
    if config.method == "dma":
        return run_mfxdma(x, y, config)
    return run_mfxdfa(x, y, config)
