import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sslearn.cli import main

HERE = Path(__file__).parent
CONSTANT = HERE / "fixtures" / "constant.csv"
GOLDEN = HERE / "golden"


def write_series(path, values):
    lines = ["t,value"] + [f"{t},{'' if np.isnan(v) else repr(float(v))}" for t, v in enumerate(values, 1)]
    path.write_text("\n".join(lines) + "\n")
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fit_on_the_constant_fixture(tmp_path, capsys):
    out = tmp_path / "fit.json"
    code, _, _ = run(["fit", "--input", CONSTANT, "--s", 12, "--output", out], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["mu1"] == pytest.approx(4.25, abs=1e-9)
    assert doc["nonzero_innovations"] == []


def test_matrix_dump_reproduces_the_golden_files(tmp_path, capsys):
    code, out, _ = run(["matrix-dump", "--T", 5, "--s", 2, "--output", "-"], capsys)
    assert code == 0
    assert out == (GOLDEN / "design_T5_s2.csv").read_text()
    code, out, _ = run(["matrix-dump", "--T", 5, "--s", 2, "--horizon", 2, "--output", "-"], capsys)
    assert code == 0
    assert out == (GOLDEN / "forecast_rows_T5_s2_H2.csv").read_text()


def test_simulate_twice_is_byte_identical(tmp_path, capsys):
    dirs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        argv = ["simulate", "--relevant", 3, "--candidates", 50, "--reps", 5, "--seed", 7,
                "--length", 60, "--criteria", "BIC", "--workers", 1, "--output-dir", d]
        code, _, _ = run(argv, capsys)
        assert code == 0
        dirs.append(d)
    for name in ("replications.csv", "summary.json"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
    rows = (dirs[0] / "replications.csv").read_text().splitlines()
    assert len(rows) == 1 + 5


def test_forecast_components_and_interpolate(tmp_path, capsys):
    t = np.arange(1, 41)
    y = 10 + 0.2 * t + np.sin(2 * np.pi * t / 4)
    y[[7, 22]] = np.nan
    src = write_series(tmp_path / "y.csv", y)
    fc = tmp_path / "fc.csv"
    assert run(["forecast", "--input", src, "--s", 4, "--horizon", 3, "--output", fc], capsys)[0] == 0
    lines = fc.read_text().splitlines()
    assert lines[0] == "t,yhat" and [ln.split(",")[0] for ln in lines[1:]] == ["41", "42", "43"]
    comp = tmp_path / "comp.csv"
    js = tmp_path / "comp.json"
    assert run(["components", "--input", src, "--s", 4, "--output", comp, "--json", js], capsys)[0] == 0
    header = comp.read_text().splitlines()[0]
    assert header == "t,y,mu,nu,gamma,outlier,exog,fitted,residual"
    assert json.loads(js.read_text())["T"] == 40
    filled = tmp_path / "filled.csv"
    assert run(["interpolate", "--input", src, "--s", 4, "--output", filled], capsys)[0] == 0
    rows = [ln.split(",") for ln in filled.read_text().splitlines()[1:]]
    assert rows[7][1] == "" and abs(float(rows[7][2]) - (10 + 0.2 * 8 + np.sin(2 * np.pi * 8 / 4))) < 0.2


def test_forecast_with_exogenous_files(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(33, 1))
    y = 5 + 2 * X[:30, 0] + 0.01 * rng.normal(size=30)
    src = write_series(tmp_path / "y.csv", y)
    (tmp_path / "x.csv").write_text("t,x1\n" + "".join(f"{t},{float(X[t - 1, 0])!r}\n" for t in range(1, 31)))
    (tmp_path / "fx.csv").write_text("t,x1\n" + "".join(f"{t},{float(X[t - 1, 0])!r}\n" for t in range(31, 34)))
    out = tmp_path / "fc.csv"
    code, _, err = run(["forecast", "--input", src, "--s", 1, "--horizon", 3, "--exogenous", tmp_path / "x.csv",
                        "--future-exogenous", tmp_path / "fx.csv", "--output", out], capsys)
    assert code == 0, err
    got = np.array([float(ln.split(",")[1]) for ln in out.read_text().splitlines()[1:]])
    np.testing.assert_allclose(got, 5 + 2 * X[30:, 0], atol=0.3)
    # one without the other is a usage error
    code, _, err = run(["forecast", "--input", src, "--horizon", 3, "--exogenous", tmp_path / "x.csv",
                        "--output", out], capsys)
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_malformed_csv_reports_file_and_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,value\n1,1.0\n2,abc\n3,2.0\n")
    code, _, err = run(["fit", "--input", bad, "--output", tmp_path / "o.json"], capsys)
    assert code == 2
    e = json.loads(err)
    assert e["error"] == "malformed_csv" and e["line"] == 3 and e["file"].endswith("bad.csv")
    gap = tmp_path / "gap.csv"
    gap.write_text("t,value\n1,1.0\n3,2.0\n")
    code, _, err = run(["fit", "--input", gap, "--output", tmp_path / "o.json"], capsys)
    assert code == 2 and json.loads(err)["line"] == 3


def test_flag_validation_happens_before_work(tmp_path, capsys):
    out = tmp_path / "o.json"
    for argv in (
        ["fit", "--input", CONSTANT, "--alpha", 2, "--output", out],
        ["fit", "--input", tmp_path / "missing.csv", "--output", out],
        ["forecast", "--input", CONSTANT, "--horizon", 0, "--output", out],
        ["simulate", "--relevant", 60, "--candidates", 50, "--output-dir", tmp_path],
    ):
        code, _, err = run(argv, capsys)
        assert code == 2
        assert "error" in json.loads(err)
    assert not out.exists()


def test_too_short_series_is_an_input_error(tmp_path, capsys):
    src = write_series(tmp_path / "short.csv", np.arange(5.0))
    code, _, err = run(["fit", "--input", src, "--s", 12, "--output", tmp_path / "o.json"], capsys)
    assert code == 2 and json.loads(err)["error"] == "invalid_input"


def test_evaluate_writes_both_outputs(tmp_path, capsys):
    from sslearn.evaluation import synthetic_panel, write_panel

    panel = {k: v for k, v in list(synthetic_panel(seed=3).items())[:2]}
    src = tmp_path / "panel.csv"
    write_panel(panel, src)
    d = tmp_path / "ev"
    code, _, err = run(["evaluate", "--input", src, "--models", "Naive2,SSL", "--workers", 1, "--output-dir", d], capsys)
    assert code == 0, err
    agg = json.loads((d / "aggregate.json").read_text())
    assert agg["Naive2"]["OWA"] == 1.0 and "SSL" in agg
    assert len((d / "per_series.csv").read_text().splitlines()) == 1 + 2 * 2


def test_general_fit_on_a_local_level(tmp_path, capsys):
    src = write_series(tmp_path / "y.csv", np.r_[np.full(8, 1.0), np.full(8, 3.0)])
    sysf = tmp_path / "sys.json"
    sysf.write_text(json.dumps({"Z": [1.0], "T": [[1.0]], "R": [[1.0]], "unpenalized_initial_states": [0]}))
    out = tmp_path / "g.json"
    assert run(["general-fit", "--system", sysf, "--input", src, "--output", out], capsys)[0] == 0
    doc = json.loads(out.read_text())
    assert doc["n"] == 16 and len(doc["fitted"]) == 16


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "sslearn.cli", "matrix-dump", "--T", "5", "--s", "2", "--output", "-"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == (GOLDEN / "design_T5_s2.csv").read_text()


def test_inputs_are_not_mutated(tmp_path, capsys):
    src = write_series(tmp_path / "y.csv", np.r_[np.arange(20.0), np.nan, np.arange(5.0)])
    before = src.read_bytes()
    run(["interpolate", "--input", src, "--s", 1, "--output", tmp_path / "f.csv"], capsys)
    assert src.read_bytes() == before
