"""Monte Carlo presets reproducing the validation experiments at desk scale.

Each preset pairs a generator with the four standard algorithms (backward,
centered and forward MF-X-DMA plus first-order MF-X-DFA) and a scale grid
and fit range per algorithm. Repetition ``r`` of a run with base seed ``b``
draws its noise from the seed sequence ``(b, r)``, so every parameter
setting of a sweep sees the same underlying random numbers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError
from .estimators import DEFAULT_Q, EstimatorConfig, default_scale_grid, run
from .generators import (
    ArfimaSpec,
    FbmSpec,
    binomial_theory,
    constant_theory,
    gen_binomial_pair,
    gen_correlated_fbm_pair,
    gen_two_component_arfima,
)
from .io import transform_series
from .scaling import FitRange, fit_scaling_exponents, mass_exponents

ALGORITHMS = {
    "dma-backward": dict(method="dma", theta=0.0),
    "dma-centered": dict(method="dma", theta=0.5),
    "dma-forward": dict(method="dma", theta=1.0),
    "dfa": dict(method="dfa", order=1),
}

PRESETS = ("bfbm-sweep", "arfima-coupled", "arfima-common", "binomial", "returns-volatility-template")


def geometric_grid(s_min, s_max, per_octave=4):
    """Integer scales ``round(2**(j / per_octave))`` inside ``[s_min, s_max]``."""
    lo = int(np.floor(np.log2(s_min) * per_octave))
    hi = int(np.ceil(np.log2(s_max) * per_octave))
    grid = sorted({int(round(2.0 ** (j / per_octave))) for j in range(lo, hi + 1)})
    return [s for s in grid if s_min <= s <= s_max]


@dataclass(frozen=True)
class Plan:
    """Scale grid and fit range of one algorithm within a preset."""

    scales: tuple
    fit: FitRange


@dataclass
class ExperimentSpec:
    preset: str
    reps: int = None
    seed: int = 0
    params: dict = field(default_factory=dict)
    algorithms: tuple = tuple(ALGORITHMS)
    q: tuple = DEFAULT_Q
    jobs: int = 1
    cov_mode: str = "signed"

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ConfigError(f"unknown algorithm(s) {sorted(unknown)}; expected {sorted(ALGORITHMS)}")
        if self.reps is not None and self.reps < 1:
            raise ConfigError("repetitions must be >= 1")


# -- preset definitions -----------------------------------------------------


def _bfbm_settings(p):
    hurst = p.get("hurst", 0.8)
    hurst_y = p.get("hurst_y", hurst)
    rhos = p.get("rho", (0.1, 0.5, 0.9))
    n = p.get("length", 2**16)
    settings = [dict(hurst=hurst, hurst_y=hurst_y, rho=float(r), length=n) for r in np.atleast_1d(rhos)]
    fit = FitRange(p.get("fit_min", 16), p.get("fit_max", 1024))
    plan = Plan(tuple(geometric_grid(fit.s_min, fit.s_max)), fit)
    return settings, {a: plan for a in ALGORITHMS}, 100


def _bfbm_draw(s, seed):
    spec = FbmSpec(s["hurst"], s["length"], h_y=s["hurst_y"], rho=s["rho"], seed=seed)
    return gen_correlated_fbm_pair(spec)


def _bfbm_theory(s, q):
    return constant_theory(0.5 * (s["hurst"] + s["hurst_y"]), q)


def _arfima_settings(p, common):
    d1 = p.get("d1", 0.1 if common else 0.4)
    d2 = p.get("d2", 0.4)
    ws = (1.0,) if common else np.atleast_1d(p.get("w", 0.8))
    n = p.get("length", 2**15)
    cutoff = p.get("cutoff", 10_000)
    settings = [dict(d1=d1, d2=d2, w=float(w), length=n, cutoff=cutoff) for w in ws]
    fit = FitRange(p.get("fit_min", 128), p.get("fit_max", n // 4))
    plan = Plan(tuple(geometric_grid(fit.s_min, fit.s_max)), fit)
    return settings, {a: plan for a in ALGORITHMS}, 20


def _arfima_draw(common, s, seed):
    spec = ArfimaSpec(
        s["d1"], s["d2"], s["length"], w=s["w"], common_noise=common, cutoff=s["cutoff"], seed=seed
    )
    return gen_two_component_arfima(spec)


def _arfima_theory(common):
    def theory(s, q):
        if common or s["d1"] == s["d2"] or s["w"] == 1.0:
            return constant_theory(0.5 + 0.5 * (s["d1"] + s["d2"]), q)
        return None

    return theory


def _binomial_settings(p):
    k = p.get("k", 16)
    settings = [dict(p_x=p.get("p_x", 0.3), p_y=p.get("p_y", 0.4), k=k)]
    top = 2 ** (k - 1)
    grid = tuple(2**j for j in range(2, k))
    dma = Plan(grid, FitRange(p.get("fit_min", 2**4), p.get("fit_max", 2**11)))
    dfa = Plan(grid, FitRange(p.get("dfa_fit_min", 2**8), p.get("dfa_fit_max", top)))
    plans = {a: (dfa if a == "dfa" else dma) for a in ALGORITHMS}
    return settings, plans, 1


def _binomial_draw(s, seed):
    return gen_binomial_pair(s["p_x"], s["p_y"], s["k"])


def _binomial_theory(s, q):
    return binomial_theory(s["p_x"], q, paired_with=s["p_y"])


def _returns_settings(p):
    pair = p.get("pair")
    if pair is None:
        raise ConfigError("the returns-volatility-template preset needs an input price file")
    settings = [dict(series="returns"), dict(series="volatility")]
    n = pair[0].size - 1
    grid = tuple(default_scale_grid(n))
    fit = FitRange(p.get("fit_min", grid[0]), p.get("fit_max", grid[-1]))
    return settings, {a: Plan(grid, fit) for a in ALGORITHMS}, 1


def _returns_draw(pair, s, seed):
    kind = "log-return" if s["series"] == "returns" else "abs-log-return"
    return tuple(transform_series(v, kind) for v in pair)


class Preset(NamedTuple):
    """Parameter settings, per-algorithm plans and the draw/theory callables of a preset."""

    settings: list
    plans: dict
    default_reps: int
    draw: Callable
    theory: Callable


def resolve_preset(name, params=None):
    """Expand preset `name` with parameter overrides `params`."""
    p = params or {}
    if name == "bfbm-sweep":
        return Preset(*_bfbm_settings(p), _bfbm_draw, _bfbm_theory)
    if name in ("arfima-coupled", "arfima-common"):
        common = name == "arfima-common"
        return Preset(*_arfima_settings(p, common), partial(_arfima_draw, common), _arfima_theory(common))
    if name == "binomial":
        return Preset(*_binomial_settings(p), _binomial_draw, _binomial_theory)
    if name == "returns-volatility-template":
        return Preset(*_returns_settings(p), partial(_returns_draw, p["pair"]), lambda s, q: None)
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")


def algorithm_name(method, theta=0.0):
    """Preset algorithm key of an estimator choice (``None`` for non-standard theta)."""
    if method == "dfa":
        return "dfa"
    return {0.0: "dma-backward", 0.5: "dma-centered", 1.0: "dma-forward"}.get(float(theta))


# -- execution ----------------------------------------------------------------


def _analyse(pair, plans, algorithms, q, cov_mode):
    out = {}
    for name in algorithms:
        plan = plans[name]
        cfg = EstimatorConfig(q=q, scales=plan.scales, cov_mode=cov_mode, **ALGORITHMS[name])
        fm = run(pair[0], pair[1], cfg)
        out[name] = tuple(
            fit_scaling_exponents(fm.get(w), fm.scales, fm.q, plan.fit).h for w in ("xy", "xx", "yy")
        )
    return out


def _task(args):
    draw, setting, seed, plans, algorithms, q, cov_mode = args
    return _analyse(draw(setting, seed), plans, algorithms, q, cov_mode)


def run_replicates(spec):
    """Run every (setting, repetition) of `spec`.

    Returns ``(settings, plans, results)`` with ``results[i][r][algorithm]``
    holding ``(h_xy, h_xx, h_yy)`` for setting ``i`` and repetition ``r``.
    """
    settings, plans, default_reps, draw, _ = resolve_preset(spec.preset, spec.params)
    reps = spec.reps or default_reps
    q = tuple(float(v) for v in spec.q)
    tasks = [
        (draw, s, (spec.seed, r), plans, tuple(spec.algorithms), q, spec.cov_mode)
        for s in settings
        for r in range(reps)
    ]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            flat = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * spec.jobs))))
    else:
        flat = [_task(t) for t in tasks]
    results = [flat[i * reps:(i + 1) * reps] for i in range(len(settings))]
    return settings, plans, results


def aggregate(spec, settings, results):
    """Long-format rows keyed by (algorithm, parameters, q)."""
    theory_fn = resolve_preset(spec.preset, spec.params).theory
    q = np.asarray(spec.q, dtype=np.float64)
    param_keys = [k for k in settings[0]]
    header = (
        ["preset", "algorithm"]
        + param_keys
        + ["q", "reps", "h_mean", "h_std", "h_xx_mean", "h_yy_mean", "half_sum_dev",
           "H_theory", "dh_mean", "tau_mean", "T_theory", "dtau_mean"]
    )
    rows = []
    for setting, reps in zip(settings, results):
        theory = theory_fn(setting, q)
        for name in spec.algorithms:
            hxy = np.array([r[name][0] for r in reps])
            hxx = np.array([r[name][1] for r in reps])
            hyy = np.array([r[name][2] for r in reps])
            mean = hxy.mean(axis=0)
            std = hxy.std(axis=0, ddof=1) if len(reps) > 1 else np.zeros(q.size)
            tau = mass_exponents(hxy, q).mean(axis=0)
            half = (hxy - 0.5 * (hxx + hyy)).mean(axis=0)
            for i, qi in enumerate(q):
                H = theory.h[i] if theory is not None else np.nan
                T = theory.tau[i] if theory is not None else np.nan
                rows.append(
                    [spec.preset, name]
                    + [setting[k] for k in param_keys]
                    + [qi, len(reps), mean[i], std[i], hxx.mean(axis=0)[i], hyy.mean(axis=0)[i],
                       half[i], H, mean[i] - H, tau[i], T, tau[i] - T]
                )
    return header, rows


def run_experiment(spec):
    """Run a preset and return its long-format table as ``(header, rows)``."""
    settings, _, results = run_replicates(spec)
    return aggregate(spec, settings, results)
