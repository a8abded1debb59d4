from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from bowtie.cli import main


def test_condition_a_holds_at_right_angle(capsys):
    assert main(["check-condition-a", "--alpha", "1.5708", "--p", "0.5"]) == 0
    assert "holds" in capsys.readouterr().out


def test_condition_a_fails_for_wide_aperture_low_emitter(capsys):
    assert main(["check-condition-a", "--alpha", "0.9pi", "--p", "0.1"]) == 1
    assert "fails" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["check-condition-a", "--alpha", "1.0"],
    ["check-condition-a", "--alpha", "4.0", "--p", "0.5"],
    ["check-condition-a", "--alpha", "twelve", "--p", "0.5"],
    ["solve", "--alpha", "1.0", "--out", "x"],
    ["sweep", "--case", "1", "--epsilons", "0.01", "0.1", "--out", "x"],
    ["fit", "/nonexistent/file.dat"],
    ["report", "/nonexistent"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_validate_quick():
    assert main(["validate", "--quick"]) == 0


def test_fit_two_column_file(tmp_path, capsys):
    x = np.logspace(-5, -3, 9)
    np.savetxt(tmp_path / "p.dat", np.c_[x, 2 * x ** (-1 / 3)], header="r value")
    assert main(["fit", str(tmp_path / "p.dat")]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["slope"] == pytest.approx(-1 / 3, abs=1e-12)
    noisy = x ** -1 * np.exp(np.random.default_rng(2).normal(0, 0.5, x.size))
    np.savetxt(tmp_path / "n.dat", np.c_[x, noisy])
    assert main(["fit", str(tmp_path / "n.dat")]) == 1


def test_solve_writes_outputs(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["solve", "--alpha", "pi/2", "--epsilon", "0.1", "--problem", "capacity", "--out", str(out)]) == 0
    data = json.loads((out / "solve.json").read_text())
    assert set(data["constants"]) == {"1", "2"} or set(data["constants"]) == {1, 2}
    assert (out / "density.csv").exists() and (out / "mesh.csv").exists()


def test_report_exit_code_follows_pass_flag(tmp_path, capsys):
    rep = {"config": {"case": "case1"}, "pass": False,
           "checks": [{"name": "a", "value": 1.0, "threshold": 2.0, "pass": False}]}
    (tmp_path / "report.json").write_text(json.dumps(rep))
    assert main(["report", str(tmp_path)]) == 1
    rep["pass"] = True
    rep["checks"][0]["pass"] = True
    (tmp_path / "report.json").write_text(json.dumps(rep))
    assert main(["report", str(tmp_path / "report.json")]) == 0
    assert "PASS a" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bowtie", "check-condition-a", "--alpha", "pi/2", "--p", "0.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
