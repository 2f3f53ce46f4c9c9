"""Run one or more experiment configs and write their JSON/text reports.

    python scripts/run_experiment.py                 # every config in configs/
    python scripts/run_experiment.py rho-limit branch-law --record-dir runs
"""

import argparse
import sys
from pathlib import Path

from hlgrowth.cli import main as cli_main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("names", nargs="*", help="config names (default: all)")
    p.add_argument("--reports", default="reports", help="report directory")
    p.add_argument("--record-dir", help="write run records here")
    args = p.parse_args(argv)
    names = args.names or sorted(c.stem for c in CONFIGS.glob("*.json"))
    worst = 0
    for name in names:
        cmd = ["analyze", str(CONFIGS / f"{name}.json"),
               "--out", str(Path(args.reports) / f"{name}.json")]
        if args.record_dir:
            cmd += ["--record-dir", args.record_dir]
        worst = max(worst, cli_main(cmd))
    return worst


if __name__ == "__main__":
    sys.exit(main())
