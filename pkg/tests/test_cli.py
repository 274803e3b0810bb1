import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from tsusy.cli import (CSV_COLUMNS, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, NeutrinoPreset,
                       main, run_scenario)
from tsusy.config import load_run_config
from tsusy.oscillation import ClosedFormMode

TWO_LEVEL = """scenario = two_level
profile = constant(3)
k = 4
theta = pi/4
ic_mode = UnitPair
t_span = 0, 1
samples = 2001
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def test_simulate_two_level_peak(workdir, capsys):
    (workdir / "c.cfg").write_text(TWO_LEVEL)
    assert main(["simulate", "c.cfg", "-o", "out.csv"]) == EXIT_OK
    header, rows = read_csv(workdir / "out.csv")
    assert tuple(header) == CSV_COLUMNS
    P = np.array([r[-1] for r in rows])
    assert P[0] == 0
    out = run_scenario(load_run_config(workdir / "c.cfg"))
    peak, t_peak = out.result.peak
    assert peak == pytest.approx(0.36, abs=1e-6)
    assert t_peak == pytest.approx(math.pi / 10, abs=1e-6)
    assert "peak P" in capsys.readouterr().out


def test_massless_probability_vanishes(workdir):
    (workdir / "m.cfg").write_text("profile = constant(0)\nk = 3\nt_span = 0, 4\n")
    assert main(["simulate", "m.cfg", "-o", "m.csv"]) == EXIT_OK
    _, rows = read_csv(workdir / "m.csv")
    assert max(abs(r[-1]) for r in rows) <= 1e-10


def test_csv_round_trip_bit_exact(workdir):
    (workdir / "c.cfg").write_text(TWO_LEVEL)
    out = run_scenario(load_run_config(workdir / "c.cfg"))
    main(["simulate", "c.cfg", "-o", "rt.csv"])
    _, rows = read_csv(workdir / "rt.csv")
    back = np.array(rows)
    for j, name in enumerate(CSV_COLUMNS):
        assert np.array_equal(back[:, j], np.asarray(out.columns[name], dtype=float)), name


def test_json_bundle(workdir):
    (workdir / "c.cfg").write_text(TWO_LEVEL)
    assert main(["simulate", "c.cfg", "--format", "json", "-o", "o.json"]) == EXIT_OK
    bundle = json.loads((workdir / "o.json").read_text())
    assert bundle["metadata"]["scenario"] == "two_level"
    assert bundle["diagnostics"]["norm_defect"] < 1e-8
    assert set(bundle["series"]) == set(CSV_COLUMNS)


def test_svg_output(workdir):
    (workdir / "c.cfg").write_text(TWO_LEVEL)
    assert main(["simulate", "c.cfg", "-o", "a.csv", "--svg", "p1.svg"]) == EXIT_OK
    assert main(["simulate", "c.cfg", "-o", "b.csv", "--svg", "p2.svg"]) == EXIT_OK
    text = (workdir / "p1.svg").read_text()
    assert 'width="800pt"' in text and 'height="500pt"' in text
    assert text == (workdir / "p2.svg").read_text()


def test_neutrino_preset():
    preset = NeutrinoPreset()
    assert preset.lam == pytest.approx(1e-10)
    out = run_scenario(preset.config())
    peak, t_peak = out.result.peak
    assert peak == pytest.approx(2.5e-15, rel=1e-12)
    assert preset.lam * t_peak == pytest.approx(math.pi / 2, rel=1e-9)
    full = run_scenario(preset.config(ClosedFormMode.UR_FULL))
    assert full.result.peak[0] == pytest.approx(peak, rel=1e-6)


def test_neutrino_command(workdir, capsys):
    assert main(["neutrino", "--sin2-2theta", "0.5", "-o", "nu.csv"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "1.25e-15" in out and "km" in out
    assert main(["neutrino", "--sin2-2theta", "2"]) == EXIT_CONFIG


def test_convert_command(capsys):
    assert main(["convert", "1", "eV^-1", "s"]) == EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(6.582119569e-16)
    assert main(["convert", "1", "eV", "s"]) == EXIT_CONFIG


def test_config_error_writes_nothing(workdir):
    (workdir / "bad.cfg").write_text("k = 1\n")
    assert main(["simulate", "bad.cfg", "-o", "x.csv"]) == EXIT_CONFIG
    assert not (workdir / "x.csv").exists()
    assert list(workdir.iterdir()) == [workdir / "bad.cfg"]


def test_numerical_failure_exit(workdir):
    (workdir / "nu.cfg").write_text("profile = sinusoidal(0.1, 1e-10)\nk = 1e6\n")
    assert main(["simulate", "nu.cfg", "-o", "x.csv"]) == EXIT_NUMERICAL
    assert not (workdir / "x.csv").exists()


def test_io_failure_exit(workdir):
    (workdir / "c.cfg").write_text(TWO_LEVEL)
    assert main(["simulate", "c.cfg", "-o", str(workdir / "missing" / "x.csv")]) == EXIT_IO


SWEEP = """profile = sinusoidal(1, 0.5)
k = 2
samples = 401
sweep.theta = pi/8, pi/4
sweep.m0 = 0.5, 1, 2
"""


def test_sweep_rows_and_determinism(workdir):
    (workdir / "s.cfg").write_text(SWEEP)
    assert main(["sweep", "s.cfg", "-o", "s1.csv"]) == EXIT_OK
    assert main(["sweep", "s.cfg", "-o", "s8.csv", "--parallelism", "8"]) == EXIT_OK
    assert (workdir / "s1.csv").read_bytes() == (workdir / "s8.csv").read_bytes()
    with open(workdir / "s1.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6 and all(r["status"] == "ok" for r in rows)
    assert [(r["m0"], r["theta"]) for r in rows][:2] == [("0.5", "pi/8"), ("0.5", "pi/4")]


def test_sweep_invalid_row(workdir):
    (workdir / "s.cfg").write_text("k = 2\nsamples = 201\nt_span = 0, 1\n"
                                   "sweep.profile = constant(1); sinusoidal(1, -1); constant(2)\n")
    assert main(["sweep", "s.cfg", "-o", "s.csv", "--format", "json"]) == EXIT_OK
    rows = json.loads((workdir / "s.csv").read_text())["rows"]
    assert [r["status"] for r in rows] == ["ok", "config_error", "ok"]


def test_sweep_all_rows_fail(workdir):
    (workdir / "s.cfg").write_text("k = 2\nt_span = 0, 1\nsweep.profile = sinusoidal(1, -1); constant(x)\n")
    assert main(["sweep", "s.cfg", "-o", "s.csv"]) == EXIT_NUMERICAL


def test_verify_algebra_command(workdir, capsys):
    (workdir / "a.cfg").write_text("profile = sinusoidal(1, 1)\nn_points = 200\n")
    assert main(["verify-algebra", "a.cfg"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    entry = report["profiles"][0]
    assert entry["normalized_max"] < 1e-12 and entry["defect_order"] >= 0.95


def test_verify_ansatz_command(workdir, capsys):
    (workdir / "s.cfg").write_text("k1 = 1\nk2 = 1\ncounts = 16\n")
    assert main(["verify-ansatz", "s.cfg", "-o", "r.json"]) == EXIT_OK
    report = json.loads((workdir / "r.json").read_text())
    assert report["residual_plus"] == pytest.approx(2.0)


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "tsusy.cli", "convert", "3", "eV", "eV"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and float(proc.stdout) == 3.0
