import json

import numpy as np
import pytest

from wavemap import experiment
from wavemap.config import RunConfig
from wavemap.experiment import TRACKED, aggregate_checks, cached_run, data_side, fit_sweep

DELTAS = [0.1, 0.05, 0.025, 0.0125]


def synthetic_run(d, lb_slope=1.0, agg=10.0, ratio=1.2):
    return {
        "delta": d,
        "summary": {"completed": True},
        "data": {"L_phi_Linf": d ** -0.5, "slash_phi_Linf": 3 * d ** 0.5, "LL_phi_L2": d ** -1,
                 "energy1": 2.0, "energy2": 5 / d},
        "report": {"E1": 0.7},
        "aggregate": agg,
        "series_max_ratio": ratio,
        "lb_phi": [d ** lb_slope, 2 * d ** lb_slope],
        "L_phi_Linf": d ** -0.5,
        "Lb_phi_Linf": 1.0,
    }


def test_fit_sweep_on_exact_power_laws():
    fits = fit_sweep([synthetic_run(d) for d in DELTAS], RunConfig())
    assert set(fits) == set(TRACKED)
    assert all(f["passed"] for f in fits.values() if "passed" in f)
    assert fits["LL_phi_L2_Cu0"]["slope"] == pytest.approx(-1.0)
    assert "passed" not in fits["aggregate"]


def test_fit_sweep_flags_wrong_lemma_slope():
    fits = fit_sweep([synthetic_run(d, lb_slope=0.5) for d in DELTAS], RunConfig())
    assert fits["Lb_phi_L2_Cu"]["passed"] is False
    assert fits["Lb_phi_L2_Cu"]["target"] == [0.85, 1.15]


def test_fit_sweep_skips_failed_runs():
    runs = [synthetic_run(d) for d in DELTAS + [0.006]]
    runs[-1]["summary"]["completed"] = False
    fits = fit_sweep(runs, RunConfig())
    assert len(fits["E1"]["deltas"]) == 4


def test_aggregate_checks():
    runs = [synthetic_run(d, agg=a, ratio=r) for d, a, r in zip(DELTAS, [10, 12, 15, 19], [1.1, 1.3, 1.9, 2.0])]
    res = aggregate_checks(runs, RunConfig())
    assert res["aggregate_spread"] == pytest.approx(1.9)
    assert res["aggregate_spread_passed"] and res["series_passed"]
    runs[0]["series_max_ratio"] = 2.1
    assert not aggregate_checks(runs, RunConfig())["series_passed"]


def test_data_side_matches_closed_form_scaling():
    rc = RunConfig()
    a, b = (data_side(rc.pulse_for(d), rc.grid_for(d)) for d in (0.1, 0.05))
    assert a["LL_phi_L2"] / b["LL_phi_L2"] == pytest.approx(0.5, rel=0.05)
    assert a["initial_aggregate"] > 0


def test_cached_run_reuses_matching_config(tmp_path, monkeypatch):
    calls = []
    monkeypatch.setattr(experiment, "run_pulse", lambda rc, d, threads=None: calls.append(d) or {"delta": d})
    rc = RunConfig()
    assert cached_run(rc, 0.1, tmp_path) == {"delta": 0.1}
    assert cached_run(rc, 0.1, tmp_path) == {"delta": 0.1}
    assert calls == [0.1]
    rc.grid.cfl = 0.3
    cached_run(rc, 0.1, tmp_path)
    assert calls == [0.1, 0.1]
    assert json.loads((tmp_path / "run_delta_0.1.json").read_text())["config"]["grid"]["cfl"] == 0.3
