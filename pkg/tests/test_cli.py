import csv
import json

import pytest

from wavemap.cli import main
from wavemap.conediag import REPORT_COLUMNS


def _write(tmp_path, **over):
    cfg = {"pulse": {"delta": 0.1, "profile_amp": 0.0},
           "grid": {"n": 128, "cfl": 0.4, "min_points": 0.0},
           "lattice": {"K": 16, "theta_count": 16, "du": 0.1}}
    for k, v in over.items():
        if isinstance(v, dict):
            cfg.setdefault(k, {}).update(v)
        else:
            cfg[k] = v
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_unstable_cfl_exits_2(tmp_path, capsys):
    code = main(["evolve", "--config", str(_write(tmp_path, grid={"cfl": 0.9})), "--out", str(tmp_path)])
    assert code == 2
    assert "cfl" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    code = main(["sweep", "--config", str(_write(tmp_path, colour="blue"))])
    assert code == 2
    assert "colour" in capsys.readouterr().err


def test_evolve_trivial_pulse_writes_outputs(tmp_path):
    out = tmp_path / "run"
    cfg = _write(tmp_path, diagnostics=["energy", "snapshots"], save_stride=200)
    assert main(["evolve", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out / "energy_report.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(REPORT_COLUMNS) + ["aggregate"]
    assert all(float(r["aggregate"]) < 1e-10 for r in rows)
    with open(out / "residuals.csv") as fh:
        res = {r["quantity"]: float(r["value"]) for r in csv.DictReader(fh)}
    assert res["max_constraint_repair"] < 1e-14
    summary = json.loads((out / "summary.json").read_text())
    assert summary["run"]["summary"]["completed"]
    snaps = sorted(out.glob("*.wmap"))
    assert len(snaps) >= 2

    diag_out = tmp_path / "diag"
    assert main(["diag", "--snapshots", str(out), "--out", str(diag_out)]) == 0
    with open(diag_out / "diagnostics.csv") as fh:
        d = list(csv.DictReader(fh))
    assert len(d) == len(snaps)
    assert all(float(r["norm_error"]) < 1e-12 for r in d)


def test_diag_without_snapshots_exits_2(tmp_path):
    assert main(["diag", "--snapshots", str(tmp_path), "--out", str(tmp_path)]) == 2


@pytest.mark.slow
def test_verify_passes(tmp_path):
    assert main(["verify", "--out", str(tmp_path), "--seed", "1"]) == 0
    checks = list(csv.DictReader(open(tmp_path / "residuals.csv")))
    assert all(c["passed"] == "True" for c in checks)
    assert len(list(csv.DictReader(open(tmp_path / "sobolev.csv")))) == 6
