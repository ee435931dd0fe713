import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import matlab_reference as ref
from mfdcca import cli
from mfdcca.errors import DataError
from mfdcca.generators import binomial_theory
from mfdcca.io import read_csv_dicts, write_csv


def invoke(*args):
    return cli.main([str(a) for a in args])


@pytest.fixture
def pair_file(tmp_path):
    path = tmp_path / "pair.csv"
    assert invoke("generate", "bfbm", "--length", 4096, "--seed", 3, "--out", path) == 0
    return path


def test_generate_header_and_length(pair_file):
    lines = pair_file.read_text().splitlines()
    assert lines[0] == "x,y" and len(lines) == 4097


def test_analyze_binomial_defaults(tmp_path):
    out = tmp_path / "out"
    assert invoke("analyze", "--generator", "binomial", "--out", out) == 0
    exps = {r["q"]: r for r in read_csv_dicts(out / "exponents.csv")}
    h2 = binomial_theory(0.3, [2.0], paired_with=0.4).h[0]
    assert abs(exps[2.0]["h"] - h2) <= 0.05
    deltas = read_csv_dicts(out / "deltas.csv")
    assert max(abs(r["delta_h"]) for r in deltas) <= 0.10
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["theta"] == 0.0 and summary["config"]["cov_mode"] == "signed"
    assert len(summary["per_q"]) == 17
    assert {"h_xx", "h_yy", "h_stderr", "resid_std"} <= set(summary["per_q"][0])


def test_fluctuation_table_columns(tmp_path, pair_file):
    out = tmp_path / "out"
    assert invoke("analyze", "--input", pair_file, "--x-col", "x", "--y-col", "y", "--out", out) == 0
    header = (out / "fluctuations.csv").read_text().splitlines()[0]
    assert header == "q,s,f_xx,f_xy,f_yy"
    assert (out / "exponents.csv").read_text().splitlines()[0] == "q,h,h_stderr,tau,alpha,f_alpha"
    assert not (out / "deltas.csv").exists()


def test_order_five_is_usage_error(tmp_path, capsys):
    assert invoke("analyze", "--generator", "binomial", "--method", "dfa", "--order", 5, "--out", tmp_path / "o") == 1
    assert "supported orders are 1-4" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_usage_errors(tmp_path, pair_file):
    assert invoke("analyze", "--out", tmp_path / "o") == 1
    assert invoke("analyze", "--input", pair_file, "--generator", "bfbm", "--out", tmp_path / "o") == 1
    assert invoke("analyze", "--input", pair_file, "--method", "svd", "--out", tmp_path / "o") == 1
    assert invoke("analyze", "--input", pair_file, "--fit-min", 2, "--out", tmp_path / "o") == 1
    assert invoke("analyze", "--input", pair_file, "--theta", 2, "--out", tmp_path / "o") == 1
    assert invoke("nosuchcommand") == 1


def test_blank_cell_is_data_error(tmp_path, capsys):
    lines = [f"{i},{i * i}" for i in range(100)]
    lines[16] = "1.5,"
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines))
    assert invoke("analyze", "--input", bad, "--out", tmp_path / "o") == 2
    assert "row 17" in capsys.readouterr().err


def test_zero_series_is_degenerate(tmp_path, capsys):
    path = tmp_path / "zeros.csv"
    path.write_text("\n".join(["0,0"] * 100))
    assert invoke("analyze", "--input", path, "--out", tmp_path / "o") == 3
    assert "degenerate" in capsys.readouterr().err
    assert not (tmp_path / "o").exists() or not any((tmp_path / "o").glob("*"))


def test_short_file_needs_explicit_scales(tmp_path):
    rng = np.random.default_rng(0)
    path = write_csv(tmp_path / "short.csv", ["x", "y"], rng.standard_normal((60, 2)))
    assert invoke("analyze", "--input", path, "--out", tmp_path / "a") == 2
    assert invoke("analyze", "--input", path, "--scales", "4,5,6,8", "--out", tmp_path / "b") == 0


def test_partial_files_removed(tmp_path, pair_file, monkeypatch):
    def fail(*a, **k):
        raise DataError("disk full")

    monkeypatch.setattr(cli, "write_json", fail)
    out = tmp_path / "out"
    assert invoke("analyze", "--input", pair_file, "--out", out) == 2
    assert list(out.glob("*")) == []


@pytest.mark.parametrize("command", ["analyze", "experiment"])
def test_reruns_byte_identical(tmp_path, command):
    if command == "analyze":
        args = ["analyze", "--generator", "arfima", "--length", 2048, "--cutoff", 500, "--seed", 9]
        names = ["fluctuations.csv", "exponents.csv", "summary.json"]
    else:
        args = ["experiment", "bfbm-sweep", "--reps", 2, "--length", 2048, "--rho", 0.5]
        names = ["experiment.csv"]
    assert invoke(*args, "--out", tmp_path / "a") == 0
    assert invoke(*args, "--out", tmp_path / "b") == 0
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_outputs_round_trip(tmp_path, pair_file):
    from mfdcca.estimators import EstimatorConfig, run
    from mfdcca.io import load_series_csv

    out = tmp_path / "out"
    assert invoke("analyze", "--input", pair_file, "--method", "dfa", "--out", out) == 0
    x, y = load_series_csv(pair_file, "x", "y")
    fm = run(x, y, EstimatorConfig(method="dfa"))
    rows = read_csv_dicts(out / "fluctuations.csv")
    assert_array_equal([r["f_xy"] for r in rows], [r[3] for r in fm.rows()])
    assert_array_equal([r["s"] for r in rows], [r[1] for r in fm.rows()])


def test_config_file_flags_win(tmp_path, pair_file):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# analysis defaults\nmethod = dfa\norder = 2\nq-min = -2\n")
    out = tmp_path / "out"
    assert invoke("analyze", "--config", cfg, "--input", pair_file, "--order", 3, "--out", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["method"] == "dfa"
    assert summary["config"]["order"] == 3
    assert summary["config"]["q"][0] == -2.0
    cfg.write_text("colour = blue\n")
    assert invoke("analyze", "--config", cfg, "--input", pair_file, "--out", out) == 1


def test_scales_forms(tmp_path, pair_file):
    out = tmp_path / "o"
    assert invoke("analyze", "--input", pair_file, "--scales", "20:200", "--out", out) == 0
    assert json.loads((out / "summary.json").read_text())["config"]["scales"] == [
        20, 25, 32, 40, 50, 63, 79, 100, 126, 158, 200
    ]
    assert invoke("analyze", "--input", pair_file, "--scales", "16:64:2", "--out", out) == 0
    assert json.loads((out / "summary.json").read_text())["config"]["scales"] == [16, 23, 32, 45, 64]
    assert invoke("analyze", "--input", pair_file, "--scales", "16:x", "--out", out) == 1
    # explicit scales replace a generator preset's fit range
    assert invoke("analyze", "--generator", "binomial", "--scales", "16:2048", "--out", out) == 0
    assert json.loads((out / "summary.json").read_text())["config"]["fit_range"] == [20, 1995]


def test_compat_matlab_matches_reference(tmp_path, pair_file):
    from mfdcca.estimators import DEFAULT_Q
    from mfdcca.io import load_series_csv

    x, y = load_series_csv(pair_file, "x", "y")
    for args, oracle in [
        (["--theta", 0.5], lambda: ref.mfxdma_1d(x, y, 0.5, list(DEFAULT_Q))),
        (["--method", "dfa"], lambda: ref.mfxdfa_1d(x, y, list(DEFAULT_Q), 1)),
    ]:
        out = tmp_path / "m"
        assert invoke("analyze", "--input", pair_file, "--compat", "matlab", *args, "--out", out) == 0
        fxx, fxy, fyy, s = oracle()
        rows = read_csv_dicts(out / "fluctuations.csv")
        got = {k: np.array([r[k] for r in rows]).reshape(len(s), -1).T for k in ("f_xx", "f_xy", "f_yy")}
        for k, expected in (("f_xx", fxx), ("f_xy", fxy), ("f_yy", fyy)):
            assert_allclose(got[k], expected, rtol=1e-10)


def test_transform_flag(tmp_path):
    rng = np.random.default_rng(5)
    prices = 100 * np.exp(np.cumsum(0.01 * rng.standard_normal((400, 2)), axis=0))
    path = write_csv(tmp_path / "prices.csv", ["a", "b"], prices)
    out = tmp_path / "o"
    assert invoke("analyze", "--input", path, "--transform", "abs-log-return", "--out", out) == 0
    assert json.loads((out / "summary.json").read_text())["length"] == 399


def test_experiment_binomial(tmp_path):
    out = tmp_path / "e"
    assert invoke("experiment", "binomial", "--out", out) == 0
    rows = read_csv_dicts(out / "experiment.csv")
    worst = {}
    for r in rows:
        worst[r["algorithm"]] = max(worst.get(r["algorithm"], 0.0), abs(r["dh_mean"]))
    assert worst["dma-centered"] == max(worst.values())
    assert {"preset", "algorithm", "p_x", "p_y", "k", "q", "h_mean", "h_std", "dh_mean", "dtau_mean"} <= set(rows[0])


def test_experiment_parallel_matches_serial(tmp_path):
    args = ["experiment", "arfima-common", "--reps", 3, "--length", 1024, "--algorithms", "dfa,dma-centered"]
    assert invoke(*args, "--fit-min", 16, "--fit-max", 256, "--out", tmp_path / "a") == 0
    assert invoke(*args, "--fit-min", 16, "--fit-max", 256, "--jobs", 2, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "experiment.csv").read_bytes() == (tmp_path / "b" / "experiment.csv").read_bytes()


def test_experiment_usage_errors(tmp_path):
    assert invoke("experiment", "binomial", "--reps", 0, "--out", tmp_path / "e") == 1
    assert invoke("experiment", "binomial", "--algorithms", "dfa,wavelet", "--out", tmp_path / "e") == 1
    assert invoke("experiment", "returns-volatility-template", "--out", tmp_path / "e") == 1


def test_experiment_returns_template(tmp_path):
    rng = np.random.default_rng(6)
    prices = 50 * np.exp(np.cumsum(0.01 * rng.standard_normal((1201, 2)), axis=0))
    path = write_csv(tmp_path / "prices.csv", ["dj", "nq"], prices)
    out = tmp_path / "e"
    assert invoke("experiment", "returns-volatility-template", "--input", path, "--out", out) == 0
    rows = read_csv_dicts(out / "experiment.csv")
    assert {r["series"] for r in rows} == {"returns", "volatility"}
    assert all(np.isnan(r["H_theory"]) and np.isnan(r["dh_mean"]) for r in rows)


def test_analyze2d(tmp_path):
    out = tmp_path / "f"
    assert invoke("analyze2d", "--generator", "binomial", "--size", 128, "--windows", "4,8,16,32", "--out", out) == 0
    rows = read_csv_dicts(out / "exponents.csv")
    q0 = [r for r in rows if r["q"] == 0.0][0]
    assert q0["tau"] == -2.0
    field = tmp_path / "z.csv"
    np.savetxt(field, np.random.default_rng(0).standard_normal((64, 64)), delimiter=",")
    assert invoke("analyze2d", "--input-x", field, "--windows", "4,6,8,11,16", "--out", tmp_path / "g") == 0
    assert invoke("analyze2d", "--out", tmp_path / "h") == 1
