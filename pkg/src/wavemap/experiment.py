"""Pulse runs reduced to the numbers the sweep fits and the acceptance suite check.

``run_pulse`` evolves one delta with a cone lattice attached and returns a
plain dict (JSON-ready); ``run_sweep`` collects those across delta and fits
log-log slopes.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from .config import RunConfig
from .conediag import (ConeLattice, energy_identity_residual, energy_report_at, energy_series,
                       extract_cone, initial_energy_report, lattice_sup, lb_phi_on_outgoing_cone)
from .evolve import default_band, evolve
from .fitting import fit_scaling
from .pulse import PulseConfig, cauchy_energy, initial_cone_norms, synthesize_cauchy_data

SERIES_EVERY = 5
log = logging.getLogger(__name__)


def data_side(cfg: PulseConfig, grid) -> dict:
    """Closed-form norms of the data on C_{u0} and the Cauchy energies on the initial slice."""
    norms = initial_cone_norms(cfg, transverse=False)
    data = synthesize_cauchy_data(grid, cfg, materialize=False, min_points=0.0)
    return {
        "L_phi_Linf": norms["L_slash0"]["Linf"],
        "slash_phi_Linf": norms["slash1"]["Linf"],
        "LL_phi_L2": norms["LL_slash0"]["L2"],
        "energy1": cauchy_energy(data, 1),
        "energy2": cauchy_energy(data, 2),
        "initial_report": initial_energy_report(norms, cfg).row(cfg.delta),
        "initial_aggregate": initial_energy_report(norms, cfg).aggregate,
    }


def run_pulse(rc: RunConfig, delta: float, *, n: int | None = None, threads: int | None = None,
              lattice: bool = True, flux_ub: float | None = None, state_out: list | None = None) -> dict:
    """Evolve the pulse for one delta and measure the cone diagnostics at u = lattice.u_probe."""
    pc = rc.pulse_for(delta)
    grid = rc.grid_for(delta)
    if n is not None:
        grid = type(grid)(n=n, L_box=grid.L_box, cfl=grid.cfl, stencil_order=grid.stencil_order,
                          boundary=grid.boundary)
    lat = None
    if lattice:
        ls = rc.lattice
        lat = ConeLattice.for_pulse(pc, K=ls.K, theta_count=ls.theta_count, u_end=rc.t_final, du=ls.du)
        grid = type(grid)(n=grid.n, L_box=grid.L_box, dt=lat.time_step(grid.h, grid.cfl),
                          stencil_order=grid.stencil_order, boundary=grid.boundary)
    data = synthesize_cauchy_data(grid, pc, min_points=rc.grid.min_points)
    band = default_band(delta, grid.h) if rc.grid.band else None
    t_final = lat.t_final if lat is not None else rc.t_final
    hist = evolve(data, grid, t_final, rc.save_stride, band=band, recorder=lat, threads=threads,
                  keep_final=state_out is not None, sample_width=rc.grid.sample_width)
    if state_out is not None:
        state_out.extend(hist.states or [hist.final])
    out = {"delta": delta, "n": grid.n, "h": grid.h, "dt": hist.dt, "stencil_order": grid.stencil_order,
           "summary": hist.summary()}
    out["data"] = data_side(pc, grid)
    if lat is None or hist.failed:
        return out
    u = rc.lattice.u_probe
    cu = extract_cone(lat, "outgoing", u)
    rep = energy_report_at(lat, u, delta, delta)
    series = energy_series(lat, delta, delta, every=SERIES_EVERY)
    agg = np.array([s.aggregate for s in series])
    fub = delta / 2 if flux_ub is None else flux_ub
    a0 = out["data"]["initial_aggregate"]
    out.update({
        "u_probe": float(cu.level),
        "report": rep.row(delta),
        "aggregate": rep.aggregate,
        "series": [s.row(delta) | {"aggregate": s.aggregate} for s in series],
        "series_max_ratio": float(agg.max() / a0) if a0 > 0 else float("nan"),
        "lb_phi": [lb_phi_on_outgoing_cone(cu, 0), lb_phi_on_outgoing_cone(cu, 1)],
        "L_phi_Linf": lattice_sup(lat, "L"),
        "Lb_phi_Linf": lattice_sup(lat, "Lb"),
        "flux_residual": {X: energy_identity_residual(lat, X, "phi", u, fub) for X in ("L", "Lb")},
    })
    return out


# quantity name -> (extractor, target slope, tolerance key); None target = report only
TRACKED = {
    "L_phi_Linf_Cu0": (lambda r: r["data"]["L_phi_Linf"], -0.5, "data_slope"),
    "slash_phi_Linf_Cu0": (lambda r: r["data"]["slash_phi_Linf"], 0.5, "data_slope"),
    "LL_phi_L2_Cu0": (lambda r: r["data"]["LL_phi_L2"], -1.0, "data_slope"),
    "energy2": (lambda r: r["data"]["energy2"], -1.0, "energy2_slope"),
    "energy1": (lambda r: r["data"]["energy1"], 0.0, "interior_slope"),
    "E1": (lambda r: r["report"]["E1"], 0.0, "interior_slope"),
    "aggregate": (lambda r: r["aggregate"], None, None),
    "Lb_phi_L2_Cu": (lambda r: r["lb_phi"][0], 1.0, None),
    "Lb_Omega_phi_L2_Cu": (lambda r: r["lb_phi"][1], 1.0, None),
    "L_phi_Linf": (lambda r: r["L_phi_Linf"], None, None),
    "Lb_phi_Linf": (lambda r: r["Lb_phi_Linf"], None, None),
}


def fit_sweep(runs: list[dict], rc: RunConfig) -> dict:
    """ScalingFit dicts over the completed runs, with pass/fail where a target exists."""
    ok = [r for r in runs if r["summary"]["completed"] and "report" in r]
    fits = {}
    for name, (get, target, tol_key) in TRACKED.items():
        fit = fit_scaling(name, [r["delta"] for r in ok], [get(r) for r in ok])
        d = fit.to_dict()
        if target is not None:
            if tol_key is None:
                lo, hi = rc.tolerances.lb_slope
                d["passed"] = bool(lo <= fit.slope <= hi)
                d["target"] = [lo, hi]
            else:
                tol = getattr(rc.tolerances, tol_key)
                d["passed"] = fit.within(target, tol)
                d["target"] = [target - tol, target + tol]
        fits[name] = d
    return fits


def aggregate_checks(runs: list[dict], rc: RunConfig) -> dict:
    """Uniform-bound checks on the E/Eb/F/Fb aggregate."""
    ok = [r for r in runs if "aggregate" in r]
    vals = np.array([r["aggregate"] for r in ok])
    ratios = [r["series_max_ratio"] for r in ok]
    f = rc.tolerances.aggregate_factor
    spread = float(vals.max() / vals.min()) if vals.size else float("nan")
    return {
        "aggregate_spread": spread,
        "aggregate_spread_passed": bool(spread < f),
        "series_max_ratio": ratios,
        "series_passed": bool(ratios and max(ratios) <= f),
    }


def member_path(cache_dir, delta: float) -> Path:
    return Path(cache_dir) / f"run_delta_{delta:g}.json"


def cached_run(rc: RunConfig, delta: float, cache_dir, threads: int | None = None, force: bool = False) -> dict:
    """run_pulse, reusing ``cache_dir/run_delta_<delta>.json`` when it was written with the same config."""
    path = member_path(cache_dir, delta)
    cfg = rc.to_dict()
    if path.exists() and not force:
        cached = json.loads(path.read_text())
        if cached.get("config") == cfg:
            return cached["run"]
        log.info("cached %s has a different config, recomputing", path.name)
    run = run_pulse(rc, delta, threads=threads)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"config": cfg, "run": run}, indent=1, default=float))
    return run


def run_sweep(rc: RunConfig, threads: int | None = None, progress=None) -> dict:
    runs = []
    for delta in rc.sweep:
        r = run_pulse(rc, delta, threads=threads)
        runs.append(r)
        if progress:
            progress(r)
    return {"runs": runs, "fits": fit_sweep(runs, rc), "aggregate": aggregate_checks(runs, rc)}
