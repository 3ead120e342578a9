import csv
import json
import subprocess
import sys

import pytest

from eitdeflect.cli import main
from eitdeflect.scenarios import CSV_HEADER


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_scenario_optical_csv(tmp_path):
    out = tmp_path / "theta.csv"
    assert main(["scenario", "optical", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1 and tuple(rows[0]) == CSV_HEADER
    assert float(rows[0]["theta_traced_rad"]) == pytest.approx(0.0052129, rel=1e-4)


def test_scenario_with_crosscheck(tmp_path, capsys):
    out = tmp_path / "mag.json"
    assert main(["scenario", "magnetic", "--format", "json", "--out", str(out), "--crosscheck", "--K", "32"]) == 0
    assert json.loads(out.read_text())[0]["vg_mps"] == pytest.approx(2990.6, rel=1e-4)
    cc = json.loads((tmp_path / "mag.crosscheck.json").read_text())
    assert len(cc) == 32
    diag = [json.loads(line) for line in capsys.readouterr().err.splitlines()]
    assert diag[-1]["event"] == "crosscheck" and diag[-1]["sup_deviation_over_L"] < 1e-4


def test_sweep_and_trace(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"sweep_param": "delta", "sweep_start": 0.01, "sweep_stop": 0.1, "sweep_num": 3})
    assert main(["sweep", "--config", cfg, "--workers", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and lines[0].startswith("sweep_param,")

    out = tmp_path / "ray.csv"
    assert main(["trace", "--config", cfg, "--step", "5e-4", "--track-absorption", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["s", "x", "y", "z", "dx", "dy", "dz", "absorbance"]
    assert float(rows[-1][3]) == pytest.approx(0.05)


def test_chi_table(capsys):
    assert main(["chi", "--delta-range", "-0.1", "0.1", "3", "--format", "json"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert len(table) == 3
    assert table[1]["chi_re"] == 0.0 and table[1]["n"] == 1.0
    assert table[2]["chi_im"] / table[2]["chi_re"] == pytest.approx(0.008, rel=1e-12)


@pytest.mark.parametrize(
    "doc,argv,code",
    [
        ({"bogus_key": 1}, ["scenario", "optical"], 2),
        ({"sweep_param": "colour", "sweep_start": 0, "sweep_stop": 1, "sweep_num": 2}, ["sweep"], 2),
        ({}, ["sweep"], 2),
        ({"x_i_over_sigma": 3.0}, ["trace"], 2),
        ({"rabi_over_Gamma": 1e5}, ["scenario", "magnetic"], 3),
        ({"x_i_over_sigma": 1.5}, ["crosscheck", "--K", "16"], 3),
    ],
)
def test_exit_codes(tmp_path, capsys, doc, argv, code):
    cfg = write_cfg(tmp_path, doc)
    assert main([*argv, "--config", cfg]) == code
    err = [json.loads(line) for line in capsys.readouterr().err.splitlines()]
    assert err[-1]["event"] == "error"


def test_io_failure_exit_code(tmp_path):
    assert main(["scenario", "optical", "--out", str(tmp_path / "missing" / "x.csv")]) == 2


def test_guard_warning_goes_to_stderr(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"x_i_over_sigma": 1.2})
    assert main(["scenario", "optical", "--config", cfg]) == 0
    cap = capsys.readouterr()
    events = [json.loads(line) for line in cap.err.splitlines()]
    assert any(e["event"] == "warning" and "lateral" in e["message"] for e in events)
    assert "theta_traced_rad" in cap.out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "eitdeflect", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("chi", "trace", "scenario", "sweep", "crosscheck"):
        assert cmd in res.stdout
