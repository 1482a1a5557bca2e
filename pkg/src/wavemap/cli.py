"""Command line: ``wavemap {evolve,sweep,verify,diag}``.

Exit codes: 0 success, 1 blow-up or failed check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .conediag import REPORT_COLUMNS
from .errors import BlowUpError, ConfigError
from .evolve import FieldState
from .grid import GridSpec

log = logging.getLogger("wavemap")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def _residual_rows(run: dict) -> list[dict]:
    s = run["summary"]
    rows = [{"delta": run["delta"], "quantity": "max_constraint_repair", "value": s["max_repair"]},
            {"delta": run["delta"], "quantity": "energy_drift", "value": s["energy_drift"]},
            {"delta": run["delta"], "quantity": "max_gradient", "value": s["max_grad"]},
            {"delta": run["delta"], "quantity": "boundary_amplitude", "value": s["boundary_amplitude"]}]
    for X, v in run.get("flux_residual", {}).items():
        rows.append({"delta": run["delta"], "quantity": f"energy_identity_{X}", "value": v})
    return rows


def _report_rows(run: dict) -> list[dict]:
    rows = [run["data"]["initial_report"] | {"aggregate": run["data"]["initial_aggregate"]}]
    return rows + run.get("series", [])


def _config(args) -> RunConfig:
    rc = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        rc.seed = args.seed
    if args.out:
        rc.output_dir = args.out
    return rc


def cmd_evolve(args) -> int:
    from .experiment import run_pulse
    from .snapshot import write_snapshot

    rc = _config(args).validate()
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    states = [] if "snapshots" in rc.diagnostics else None
    run = run_pulse(rc, rc.pulse.delta, threads=args.threads, state_out=states)
    _write_csv(out / "energy_report.csv", REPORT_COLUMNS + ("aggregate",), _report_rows(run))
    _write_csv(out / "residuals.csv", ("delta", "quantity", "value"), _residual_rows(run))
    for i, st in enumerate(states or []):
        if st is not None:
            write_snapshot(out / f"snapshot_{i:04d}.wmap", st, rc.grid.L_box, rc.to_dict())
    run.pop("series", None)
    _write_json(out / "summary.json", {"config": rc.to_dict(), "run": run})
    s = run["summary"]
    log.info("delta=%g n=%d completed=%s max_repair=%.2e", run["delta"], run["n"], s["completed"],
             s["max_repair"])
    if not s["completed"]:
        log.error("run failed: %s at t=%s", s["failure"], s["t_fail"])
        return EXIT_FAIL
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiment import run_sweep

    rc = _config(args).validate(sweep=True)
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = run_sweep(rc, threads=args.threads,
                    progress=lambda r: log.info("delta=%g done in %.1fs", r["delta"], r["summary"]["elapsed_s"]))
    rows = [row for r in res["runs"] for row in _report_rows(r)]
    _write_csv(out / "energy_report.csv", REPORT_COLUMNS + ("aggregate",), rows)
    _write_csv(out / "residuals.csv", ("delta", "quantity", "value"),
               [row for r in res["runs"] for row in _residual_rows(r)])
    for r in res["runs"]:
        r.pop("series", None)
    _write_json(out / "summary.json", {"config": rc.to_dict(), **res})
    failed = [r["delta"] for r in res["runs"] if not r["summary"]["completed"]]
    fits_failed = [k for k, f in res["fits"].items() if f.get("passed") is False]
    for k, f in res["fits"].items():
        log.info("%-22s slope %+.3f  r2 %.3f  %s", k, f["slope"], f["r_squared"],
                 {True: "PASS", False: "FAIL", None: ""}[f.get("passed")])
    if failed or fits_failed or not res["aggregate"]["series_passed"]:
        log.error("failed runs %s, failed fits %s", failed, fits_failed)
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_verify

    rc = _config(args)
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = run_verify(rc.seed, sobolev="sobolev" in rc.diagnostics or not args.config)
    _write_csv(out / "residuals.csv", ("name", "max_residual", "tol", "passed", "samples"), res["checks"])
    _write_csv(out / "sobolev.csv", ("which", "c_sob", "max_refined", "max_rel_change", "passed"),
               res["sobolev"])
    _write_json(out / "summary.json", res)
    for c in res["checks"]:
        if not c["passed"]:
            log.error("%s: %.3e (tol %.1e)", c["name"], c["max_residual"], c["tol"])
    return EXIT_OK if res["passed"] else EXIT_FAIL


def snapshot_diagnostics(state: FieldState, L_box: float, stencil_order: int = 2) -> dict:
    """Constraint errors, Cauchy energy and max gradient of a stored slice."""
    from .evolve import Solver

    n = state.phi.shape[0]
    grid = GridSpec(n=n, L_box=L_box, stencil_order=stencil_order)
    sol = Solver(grid)
    sol.load_state(state)
    gmax, energy, finite, _ = sol.refresh_acc()
    norm_err, tangent_err = state.constraint_error()
    return {"t": state.t, "n": n, "norm_error": norm_err, "tangent_error": tangent_err,
            "energy": energy, "max_grad": gmax, "finite": bool(finite)}


def cmd_diag(args) -> int:
    from .snapshot import read_snapshot

    rc = _config(args)
    src = Path(args.snapshots or rc.output_dir)
    paths = sorted(src.glob("*.wmap")) if src.is_dir() else [src]
    if not paths:
        raise ConfigError(f"no *.wmap snapshots under {src}")
    rows = []
    for p in paths:
        state, L_box, side = read_snapshot(p)
        order = (side or {}).get("config", {}).get("grid", {}).get("stencil_order", 2)
        rows.append({"file": p.name, **snapshot_diagnostics(state, L_box, order)})
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = ("file", "t", "n", "norm_error", "tangent_error", "energy", "max_grad", "finite")
    _write_csv(out / "diagnostics.csv", cols, rows)
    ok = all(r["finite"] and r["norm_error"] < 1e-10 for r in rows)
    e = np.array([r["energy"] for r in rows])
    _write_json(out / "summary.json", {"snapshots": rows, "passed": ok,
                                       "energy_drift": float(np.ptp(e) / e[0]) if e[0] > 0 else 0.0})
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavemap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, text in (("evolve", cmd_evolve, "single pulse run"),
                           ("sweep", cmd_sweep, "delta sweep with slope fits"),
                           ("verify", cmd_verify, "identity and Sobolev batteries"),
                           ("diag", cmd_diag, "diagnostics on stored snapshots")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        if name == "diag":
            sp.add_argument("--snapshots", help="snapshot file or directory (default: output dir)")
        sp.set_defaults(func=fn)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
