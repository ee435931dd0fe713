"""Command-line interface: ``mfdcca analyze | analyze2d | generate | experiment``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical degeneracy.
Every command writes its tables atomically and removes the files it wrote
when a later step fails.
"""

import math
import sys
from pathlib import Path

import click
import numpy as np

from . import experiments as ex
from .errors import ConfigError, DataError, DegenerateError, MfdccaError
from .estimators import COV_MODES, COVERAGES, EstimatorConfig, default_scale_grid, run
from .generators import BinomialSpec, gen_binomial_measure
from .highdim import as_field, difference_matrix_2d, run_mfxdma_2d
from .io import TRANSFORMS, load_field_csv, load_series_csv, write_csv, write_json
from .scaling import (
    FitRange,
    exponent_delta,
    fit_scaling_exponents,
    half_sum_check,
    result_from_h,
    scaling_result,
)

GENERATORS = {
    "binomial": "binomial",
    "bfbm": "bfbm-sweep",
    "arfima": "arfima-coupled",
    "arfima-common": "arfima-common",
}
EMITS = ("fluctuations", "exponents", "spectrum", "deltas", "summary")
DEFAULT_EMIT = "fluctuations,exponents,deltas,summary"

# ---------------------------------------------------------------------------
# option parsing helpers
# ---------------------------------------------------------------------------


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment; keys may use dashes or underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.BadParameter(f"line {lineno}: expected key = value", param_hint="--config")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _load_config(ctx, param, value):
    if value is None:
        return None
    cfg = read_config_file(value)
    known = {p.name for p in ctx.command.params}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise click.BadParameter(f"unknown key(s) {unknown}", param_hint="--config")
    ctx.default_map = {**(ctx.default_map or {}), **cfg}
    return value


config_option = click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="Plain-text key = value file mirroring the flags; flags win.",
)


def q_grid(q_min, q_max, q_step):
    if q_step <= 0:
        raise click.BadParameter("must be positive", param_hint="--q-step")
    if q_max < q_min:
        raise click.BadParameter("--q-max is below --q-min", param_hint="--q-max")
    count = int(math.floor((q_max - q_min) / q_step + 1e-9)) + 1
    return tuple(float(v) for v in np.round(q_min + q_step * np.arange(count), 10))


def parse_scales(text, n):
    """Scale grid from ``a,b,c`` (explicit), ``min:max`` (default grid filtered) or ``min:max:k``.

    The three-field form is the geometric grid with ``k`` scales per octave.
    """
    if text is None:
        return None
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) == 2:
                lo, hi = parts
                scales = [s for s in default_scale_grid(n) if lo <= s <= hi]
            elif len(parts) == 3:
                scales = ex.geometric_grid(parts[0], parts[1], int(parts[2]))
            else:
                raise ValueError
        else:
            scales = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot parse {text!r}", param_hint="--scales") from None
    if not scales:
        raise click.BadParameter(f"{text!r} selects no scales", param_hint="--scales")
    return tuple(scales)


def fit_range(fit_min, fit_max, scales, default=None):
    """Fit range from the flags, falling back to `default` or the full grid; must overlap the grid."""
    lo = fit_min if fit_min is not None else (default.s_min if default else min(scales))
    hi = fit_max if fit_max is not None else (default.s_max if default else max(scales))
    if lo < min(scales) or hi > max(scales):
        raise click.UsageError(f"fit range [{lo}, {hi}] is not inside the scale grid [{min(scales)}, {max(scales)}]")
    return FitRange(lo, hi)


def _csv_list(text, allowed, hint):
    items = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in items if t not in allowed]
    if bad or not items:
        raise click.BadParameter(f"{bad or text!r}; choose from {', '.join(allowed)}", param_hint=hint)
    return items


class Outputs:
    """Files written by the running command, removed again if it fails."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.written = []

    def csv(self, name, header, rows):
        self.written.append(write_csv(self.dir / name, header, rows))

    def json(self, name, payload):
        self.written.append(write_json(self.dir / name, payload))

    def discard(self):
        for path in self.written:
            Path(path).unlink(missing_ok=True)
        self.written = []


def _guarded(outputs, fn):
    try:
        return fn()
    except BaseException:
        outputs.discard()
        raise


# ---------------------------------------------------------------------------
# shared option groups
# ---------------------------------------------------------------------------


def estimator_options(f):
    opts = [
        click.option("--method", type=click.Choice(["dma", "dfa"]), default="dma", show_default=True),
        click.option("--theta", type=float, default=0.0, show_default=True, help="DMA window position."),
        click.option("--order", type=int, default=1, show_default=True, help="DFA polynomial order (1-4)."),
        click.option("--q-min", type=float, default=-4.0, show_default=True),
        click.option("--q-max", type=float, default=4.0, show_default=True),
        click.option("--q-step", type=float, default=0.5, show_default=True),
        click.option("--scales", default=None, help="a,b,c | min:max | min:max:per-octave"),
        click.option("--fit-min", type=float, default=None),
        click.option("--fit-max", type=float, default=None),
        click.option("--coverage", type=click.Choice(COVERAGES), default="both-ends", show_default=True),
        click.option("--cov-mode", type=click.Choice(COV_MODES), default="signed", show_default=True),
        click.option("--compat", type=click.Choice(["none", "matlab"]), default="none", show_default=True,
                     help="'matlab' reproduces the published reference code."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def generator_options(f):
    opts = [
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--length", type=int, default=None, help="Series length (fbm, arfima)."),
        click.option("--p-x", type=float, default=0.3, show_default=True),
        click.option("--p-y", type=float, default=0.4, show_default=True),
        click.option("--k", type=int, default=16, show_default=True, help="Binomial cascade depth."),
        click.option("--hurst", type=float, default=0.8, show_default=True),
        click.option("--hurst-y", type=float, default=None),
        click.option("--rho", type=float, default=0.5, show_default=True),
        click.option("--d1", type=float, default=None),
        click.option("--d2", type=float, default=0.4, show_default=True),
        click.option("--w", "w", type=float, default=0.8, show_default=True),
        click.option("--cutoff", type=int, default=10_000, show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _generator_params(kw, preset):
    p = {}
    if preset == "binomial":
        p.update(p_x=kw["p_x"], p_y=kw["p_y"], k=kw["k"])
    elif preset == "bfbm-sweep":
        p.update(hurst=kw["hurst"], rho=(kw["rho"],))
        if kw["hurst_y"] is not None:
            p["hurst_y"] = kw["hurst_y"]
    else:
        p.update(d2=kw["d2"], w=(kw["w"],), cutoff=kw["cutoff"])
        if kw["d1"] is not None:
            p["d1"] = kw["d1"]
    if kw["length"] is not None and preset != "binomial":
        p["length"] = kw["length"]
    return p


def _draw(generator, kw):
    preset = GENERATORS[generator]
    bundle = ex.resolve_preset(preset, _generator_params(kw, preset))
    setting = bundle.settings[0]
    return bundle, setting, bundle.draw(setting, kw["seed"])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """Multifractal detrended and detrending moving-average cross-correlation analysis."""


@cli.command()
@config_option
@click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None,
              help="CSV file with the two series.")
@click.option("--generator", type=click.Choice(sorted(GENERATORS)), default=None,
              help="Analyse a generated pair instead of a file.")
@click.option("--x-col", default="0", show_default=True, help="Column index or header name.")
@click.option("--y-col", default="1", show_default=True, help="Column index or header name.")
@click.option("--transform", type=click.Choice(TRANSFORMS), default="none", show_default=True)
@estimator_options
@generator_options
@click.option("--emit", default=DEFAULT_EMIT, show_default=True, help=f"Comma list from {', '.join(EMITS)}.")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
def analyze(input_path, generator, x_col, y_col, transform, emit, out, **kw):
    """Fluctuation functions and scaling exponents of one pair of series."""
    if (input_path is None) == (generator is None):
        raise click.UsageError("give exactly one of --input and --generator")
    if kw["method"] == "dfa" and kw["order"] not in (1, 2, 3, 4):
        raise click.BadParameter(f"unsupported order {kw['order']}; supported orders are 1-4", param_hint="--order")
    emits = _csv_list(emit, EMITS, "--emit")
    q = q_grid(kw["q_min"], kw["q_max"], kw["q_step"])

    theory = None
    plan = None
    if generator is not None:
        bundle, setting, pair = _draw(generator, kw)
        theory = bundle.theory(setting, q)
        name = ex.algorithm_name(kw["method"], kw["theta"])
        plan = bundle.plans.get(name or "dma-backward")
        source = {"generator": generator, "seed": kw["seed"], **setting}
    else:
        min_rows = None if kw["scales"] is not None and ":" not in kw["scales"] else 80
        pair = load_series_csv(input_path, x_col, y_col, transform, min_rows=min_rows)
        source = {"input": str(input_path), "x_col": x_col, "y_col": y_col, "transform": transform}

    n = pair[0].size
    scales = parse_scales(kw["scales"], n)
    default_fit = None
    if scales is None:
        scales = plan.scales if plan is not None else tuple(default_scale_grid(n))
        default_fit = plan.fit if plan is not None else None
    fr = fit_range(kw["fit_min"], kw["fit_max"], scales, default_fit)

    common = dict(q=q, scales=scales, theta=kw["theta"], order=kw["order"])
    if kw["compat"] == "matlab":
        cfg = EstimatorConfig.matlab(kw["method"], **common)
    else:
        cfg = EstimatorConfig(method=kw["method"], coverage=kw["coverage"], cov_mode=kw["cov_mode"], **common)

    outputs = Outputs(out)
    _guarded(outputs, lambda: _analyze_and_write(pair, cfg, fr, theory, emits, source, outputs))


def _analyze_and_write(pair, cfg, fr, theory, emits, source, outputs):
    fm = run(pair[0], pair[1], cfg)
    res = scaling_result(fm, fr, "xy")
    res_xx = scaling_result(fm, fr, "xx")
    res_yy = scaling_result(fm, fr, "yy")
    if "fluctuations" in emits:
        outputs.csv("fluctuations.csv", ["q", "s", "f_xx", "f_xy", "f_yy"], fm.rows())
    if "exponents" in emits:
        outputs.csv("exponents.csv", ["q", "h", "h_stderr", "tau", "alpha", "f_alpha"], res.rows())
    if "spectrum" in emits:
        outputs.csv("spectrum.csv", ["q", "alpha", "f_alpha"], zip(res.q, res.alpha, res.f_alpha))
    delta = None
    if theory is not None:
        delta = exponent_delta(res, theory.h, theory.tau, theory.q)
        if "deltas" in emits:
            outputs.csv(
                "deltas.csv",
                ["q", "h", "H_theory", "delta_h", "tau", "T_theory", "delta_tau"],
                zip(res.q, res.h, theory.h, delta.delta_h, res.tau, theory.tau, delta.delta_tau),
            )
    if "summary" in emits:
        outputs.json("summary.json", _summary(fm, cfg, fr, res, res_xx, res_yy, delta, source, pair[0].size))


def _summary(fm, cfg, fr, res, res_xx, res_yy, delta, source, n):
    per_q = []
    for i, q in enumerate(res.q):
        row = {
            "q": q,
            "h": res.h[i],
            "h_stderr": res.h_stderr[i],
            "intercept": res.intercept[i],
            "resid_std": res.resid_std[i],
            "h_xx": res_xx.h[i],
            "h_yy": res_yy.h[i],
        }
        if delta is not None:
            row["delta_h"] = delta.delta_h[i]
            row["delta_tau"] = delta.delta_tau[i]
        per_q.append(row)
    return {
        "source": source,
        "length": n,
        "config": {
            "method": cfg.method,
            "theta": cfg.theta,
            "order": cfg.order,
            "coverage": cfg.coverage,
            "cov_mode": cfg.cov_mode,
            "alignment": cfg.alignment,
            "q": list(cfg.q),
            "scales": [int(s) for s in fm.scales],
            "fit_range": [fr.s_min, fr.s_max],
        },
        "box_counts": fm.box_counts,
        "fit_scales": int(fr.mask(fm.scales).sum()),
        "half_sum_deviation": half_sum_check(res_xx.h, res_yy.h, res.h),
        "per_q": per_q,
    }


@cli.command()
@config_option
@click.argument("kind", type=click.Choice(sorted(GENERATORS)))
@generator_options
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output CSV file.")
def generate(kind, out, **kw):
    """Write a generated pair as a two-column CSV with header ``x,y``."""
    _, _, pair = _draw(kind, kw)
    write_csv(out, ["x", "y"], zip(pair[0], pair[1]))


@cli.command()
@config_option
@click.argument("preset", type=click.Choice(ex.PRESETS))
@click.option("--reps", type=int, default=None, help="Repetitions (preset default when omitted).")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed base; repetition r uses (seed, r).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("--algorithms", default=",".join(ex.ALGORITHMS), show_default=True)
@click.option("--q-min", type=float, default=-4.0, show_default=True)
@click.option("--q-max", type=float, default=4.0, show_default=True)
@click.option("--q-step", type=float, default=0.5, show_default=True)
@click.option("--cov-mode", type=click.Choice(COV_MODES), default="signed", show_default=True)
@click.option("--fit-min", type=float, default=None)
@click.option("--fit-max", type=float, default=None)
@click.option("--length", type=int, default=None)
@click.option("--hurst", type=float, default=None)
@click.option("--hurst-y", type=float, default=None)
@click.option("--rho", type=float, multiple=True, help="Repeatable; bfbm-sweep correlation values.")
@click.option("--d1", type=float, default=None)
@click.option("--d2", type=float, default=None)
@click.option("--w", "w", type=float, multiple=True, help="Repeatable; arfima-coupled coupling values.")
@click.option("--p-x", type=float, default=None)
@click.option("--p-y", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None,
              help="Price file for returns-volatility-template.")
@click.option("--x-col", default="0", show_default=True)
@click.option("--y-col", default="1", show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
def experiment(preset, reps, seed, jobs, algorithms, q_min, q_max, q_step, cov_mode, input_path, x_col, y_col,
               out, **kw):
    """Monte Carlo reproduction of a validation experiment; writes experiment.csv."""
    if jobs < 1:
        raise click.BadParameter("must be >= 1", param_hint="--jobs")
    if reps is not None and reps < 1:
        raise click.BadParameter("must be >= 1", param_hint="--reps")
    params = {k: (tuple(v) if isinstance(v, tuple) else v) for k, v in kw.items() if v not in (None, ())}
    if preset == "returns-volatility-template":
        if input_path is None:
            raise click.UsageError("returns-volatility-template needs --input with two price columns")
        params["pair"] = tuple(load_series_csv(input_path, x_col, y_col, "none", min_rows=None))
    elif input_path is not None:
        raise click.UsageError("--input only applies to returns-volatility-template")
    spec = ex.ExperimentSpec(
        preset, reps=reps, seed=seed, params=params,
        algorithms=tuple(_csv_list(algorithms, tuple(ex.ALGORITHMS), "--algorithms")),
        q=q_grid(q_min, q_max, q_step), jobs=jobs, cov_mode=cov_mode,
    )
    outputs = Outputs(out)

    def work():
        header, rows = ex.run_experiment(spec)
        outputs.csv("experiment.csv", header, rows)

    _guarded(outputs, work)


@cli.command()
@config_option
@click.option("--input-x", type=click.Path(dir_okay=False), default=None, help="CSV field for x.")
@click.option("--input-y", type=click.Path(dir_okay=False), default=None, help="CSV field for y (default: x).")
@click.option("--cumulated", is_flag=True, help="Inputs are cumulated surfaces; difference them first.")
@click.option("--generator", type=click.Choice(["white", "binomial"]), default=None)
@click.option("--size", type=int, default=256, show_default=True, help="Side of generated fields.")
@click.option("--p", "p", type=float, default=0.3, show_default=True, help="Binomial field weight.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--windows", default="4:64:2", show_default=True, help="a,b,c or min:max:per-octave.")
@click.option("--theta", type=float, default=0.0, show_default=True)
@click.option("--q-min", type=float, default=-4.0, show_default=True)
@click.option("--q-max", type=float, default=4.0, show_default=True)
@click.option("--q-step", type=float, default=0.5, show_default=True)
@click.option("--fit-min", type=float, default=None)
@click.option("--fit-max", type=float, default=None)
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
def analyze2d(input_x, input_y, cumulated, generator, size, p, seed, windows, theta, q_min, q_max, q_step,
              fit_min, fit_max, out):
    """Two-dimensional MF-X-DMA with square windows."""
    if (input_x is None) == (generator is None):
        raise click.UsageError("give exactly one of --input-x and --generator")
    if input_x is not None:
        zx = load_field_csv(input_x)
        zy = zx if input_y is None else load_field_csv(input_y)
        if cumulated:
            zx = difference_matrix_2d(zx)
            zy = zx if input_y is None else difference_matrix_2d(zy)
    elif generator == "white":
        rx, ry = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
        zx = rx.standard_normal((size, size))
        zy = ry.standard_normal((size, size))
    else:
        k = int(round(math.log2(size)))
        m = gen_binomial_measure(BinomialSpec(p, k))
        zx = zy = np.outer(m, m)
    as_field(zx, 2, "zx")
    try:
        if ":" in windows:
            lo, hi, per = windows.split(":")
            wins = ex.geometric_grid(float(lo), float(hi), int(per))
        else:
            wins = [int(v) for v in windows.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot parse {windows!r}", param_hint="--windows") from None
    q = q_grid(q_min, q_max, q_step)
    outputs = Outputs(out)

    def work():
        fl = run_mfxdma_2d(zx, zy, wins, theta=theta, q=q)
        scales = fl.scales
        lo = fit_min if fit_min is not None else scales.min()
        hi = fit_max if fit_max is not None else scales.max()
        fr = FitRange(lo, hi)
        fit = fit_scaling_exponents(fl.f_xy, scales, fl.q, fr)
        res = result_from_h(fit.q, fit.h, fit.h_stderr, d_f=2)
        outputs.csv("fluctuations.csv", ["q", "s", "f_xx", "f_xy", "f_yy"], fl.rows())
        outputs.csv("exponents.csv", ["q", "h", "h_stderr", "tau", "alpha", "f_alpha"], res.rows())

    _guarded(outputs, work)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None):
    """Run the CLI and map failures to exit codes 1 (usage), 2 (data) and 3 (degeneracy)."""
    try:
        cli.main(args=argv, prog_name="mfdcca", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ConfigError as exc:
        click.echo(f"Error: {exc}", err=True)
        return 1
    except DegenerateError as exc:
        click.echo(f"Error: {exc}", err=True)
        return 3
    except (DataError, MfdccaError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return 2
    return 0


def entry():
    sys.exit(main())
