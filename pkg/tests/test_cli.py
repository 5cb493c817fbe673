from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from jumpreg._rng import substream
from jumpreg.cli import main
from jumpreg.core import Dataset
from jumpreg.data_io import Report, emit_report, ingest_csv, step_trace
from jumpreg.errors import DuplicateX, EmptyFile, ParseError
from jumpreg.segmentation import SegConfig, dp_optimal


def write_csv(path, x, y, header=True):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(("x", "y"))
        for a, b in zip(x, y):
            w.writerow((repr(float(a)), repr(float(b))))
    return path


@pytest.fixture
def step_csv(tmp_path):
    rng = substream(123, 0)
    x = np.sort(rng.uniform(size=80))
    y = np.where(x > 0.4, 2.0, 0.0) + 0.3 * rng.normal(size=80)
    return write_csv(tmp_path / "data.csv", x, y)


def run_json(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and "--out" not in args else None)


def test_ingest_sorts_and_round_trips(tmp_path):
    x = np.array([0.3, 0.1, 0.2])
    y = np.array([3.0, 1.0, 2.0])
    data = ingest_csv(write_csv(tmp_path / "a.csv", x, y))
    np.testing.assert_array_equal(data.x, [0.1, 0.2, 0.3])
    np.testing.assert_array_equal(data.y, [1.0, 2.0, 3.0])
    raw = write_csv(tmp_path / "b.csv", x, y, header=False)
    again = ingest_csv(raw, header=False)
    np.testing.assert_array_equal(again.x, data.x)
    np.testing.assert_array_equal(again.y, data.y)


def test_ingest_errors(tmp_path):
    p = tmp_path / "dup.csv"
    p.write_text("x,y\n0.1,1\n0.2,2\n0.1,3\n")
    with pytest.raises(DuplicateX, match="0.1"):
        ingest_csv(p)
    p.write_text("x,y\n0.1,1\n0.2,abc\n")
    with pytest.raises(ParseError, match="line 3"):
        ingest_csv(p)
    p.write_text("x,y\n")
    with pytest.raises(EmptyFile):
        ingest_csv(p)
    p.write_text("x,y\n0.1,nan\n")
    with pytest.raises(ParseError):
        ingest_csv(p)
    p.write_bytes(b"\xef\xbb\xbfx,y\r\n0.1,1\r\n\r\n0.2,2\r\n")
    assert ingest_csv(p).n == 2


def test_trace_has_two_rows_per_window():
    x = np.linspace(0, 1, 20)
    fit = dp_optimal(Dataset(x, np.where(x > 0.5, 1.0, 0.0)), SegConfig(2))
    tr = step_trace(fit)
    assert len(tr) == 4
    assert tr[0][0] == 0.0 and tr[-1][0] == 1.0
    assert tr[1][0] == tr[2][0] == pytest.approx(fit.breakpoints[0])


def test_empty_models_list_and_nonfinite(tmp_path):
    rep = Report({"seed": 1}, fits=[], summary={"v": float("inf")})
    d = json.loads(emit_report(rep))
    assert d["models"] == [] and d["summary"]["v"] == "inf"
    assert d["diagnostics"] == {"warnings": []}


def test_fit_command(step_csv, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code, rep = run_json(["fit", "--input", str(step_csv), "--d", "2", "--trace", str(trace)], capsys)
    assert code == 0
    (f,) = rep["fits"]
    assert f["d"] == 2 and abs(f["breakpoints"][0] - 0.4) < 0.05
    rows = trace.read_text().splitlines()
    assert rows[0] == "x,fitted" and len(rows) == 5


def test_json_round_trip_precision(step_csv, tmp_path):
    out = tmp_path / "r.json"
    assert main(["fit", "--input", str(step_csv), "--d", "3", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    fit = dp_optimal(ingest_csv(step_csv), SegConfig(3))
    np.testing.assert_allclose(rep["fits"][0]["levels"], fit.levels, rtol=1e-12)
    assert rep["fits"][0]["rss"] == pytest.approx(fit.rss, rel=1e-12)


def strip_volatile(text):
    d = json.loads(text)
    d["meta"].pop("timestamp")
    return json.dumps(d, sort_keys=True)


@pytest.mark.parametrize(
    "args",
    [
        ["select", "--d-max", "3", "--reps", "100", "--seed", "5"],
        ["ci", "--d", "2", "--reps", "2000", "--seed", "9"],
        ["bayes"],
    ],
)
def test_reruns_are_identical(step_csv, tmp_path, args):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    full = [args[0], "--input", str(step_csv), *args[1:]]
    assert main([*full, "--out", str(a)]) == 0
    assert main([*full, "--out", str(b)]) == 0
    assert strip_volatile(a.read_text()) == strip_volatile(b.read_text())


def test_select_csv_output(step_csv, capsys):
    code = main(["select", "--input", str(step_csv), "--d-max", "3", "--criterion", "bjic", "--seed", "1", "--output", "csv"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0].startswith("model_label,family")
    assert len(out) == 1 + 3 + 4
    assert sum(line.endswith(",1") for line in out[1:]) == 1


def test_ci_contains_estimate(step_csv, capsys):
    code, rep = run_json(["ci", "--input", str(step_csv), "--d", "2", "--reps", "2000", "--seed", "3"], capsys)
    assert code == 0
    (lo, hi), b = rep["fits"][0]["ci"][0], rep["fits"][0]["breakpoints"][0]
    assert lo <= b <= hi


def test_bayes_summary(step_csv, capsys):
    code, rep = run_json(["bayes", "--input", str(step_csv)], capsys)
    assert code == 0
    lo, hi = rep["summary"]["credible_interval"]
    assert lo <= rep["summary"]["posterior_mean"] <= hi


def test_exit_codes(step_csv, tmp_path, capsys):
    assert main(["fit", "--input", str(tmp_path / "missing.csv"), "--d", "2"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n1,3\n")
    assert main(["fit", "--input", str(bad), "--d", "2"]) == 2
    assert main(["select", "--input", str(step_csv), "--d-max", "3"]) == 2  # missing seed
    assert main(["fit", "--input", str(step_csv), "--d", "60"]) == 3
    flat = write_csv(tmp_path / "flat.csv", np.linspace(0, 1, 10), np.ones(10))
    assert main(["ci", "--input", str(flat), "--d", "2", "--reps", "100", "--seed", "1"]) == 4
    err = capsys.readouterr().err
    assert err.count("error:") == 5


def test_simulate_smoke(capsys):
    code, rep = run_json(["simulate", "--scenario", "table1", "--replicates", "10", "--seed", "2", "--n-max", "60"], capsys)
    assert code == 0
    assert rep["summary"]["init_never_better"] is True
    assert "wall_seconds" in rep["meta"]["timestamp"]
