"""Reference run (order 2, n = 512, delta = 0.1) through the command line entry point.

    python scripts/reference_run.py [--config configs/reference.json]
"""

import argparse
import sys
from pathlib import Path

from wavemap.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "reference.json"))
    ap.add_argument("--out", default=str(ROOT / "results" / "reference"))
    args = ap.parse_args()
    sys.exit(main(["evolve", "--config", args.config, "--out", args.out]))
