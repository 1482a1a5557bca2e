"""Delta sweep with one cached JSON per member, so an interrupted sweep resumes.

    python scripts/delta_sweep.py [--config configs/sweep.json] [--only 0.1 0.05]
"""

import argparse
import json
import logging
from pathlib import Path

from wavemap.config import load_config
from wavemap.experiment import aggregate_checks, cached_run, fit_sweep

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "sweep.json")
    ap.add_argument("--only", type=float, nargs="*")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--force", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    rc = load_config(args.config).validate(sweep=True)
    out = ROOT / rc.output_dir
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for delta in rc.sweep:
        if args.only and delta not in args.only:
            continue
        run = cached_run(rc, delta, out, args.threads, args.force)
        s = run["summary"]
        logging.info("delta=%g n=%d %.0fs aggregate=%.2f series ratio=%.2f flux L=%.3g", delta, run["n"],
                     s["elapsed_s"], run.get("aggregate", float("nan")), run.get("series_max_ratio", float("nan")),
                     run.get("flux_residual", {}).get("L", float("nan")))
        runs.append(run)
    if len(runs) >= 4:
        fits = fit_sweep(runs, rc)
        summary = {"fits": fits, "aggregate": aggregate_checks(runs, rc)}
        (out / "fits.json").write_text(json.dumps(summary, indent=1, default=float))
        for name, f in fits.items():
            print(f"{name:22s} slope {f['slope']:+.3f}  r2 {f['r_squared']:.3f}  "
                  f"{'' if 'passed' not in f else ('PASS' if f['passed'] else 'FAIL')}")
        print(json.dumps(summary["aggregate"], indent=1))


if __name__ == "__main__":
    main()
