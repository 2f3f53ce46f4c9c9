"""Pilot runs behind the pilot-calibrated tolerances in configs/.

Runs each config on its pilot seeds and prints the checked statistics next to
the frozen thresholds. The thresholds are not rewritten: the output documents
the margin each one has.
"""

import argparse
from pathlib import Path

from hlgrowth.harness import ExperimentConfig, run_experiment

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
PILOTED = ["capacity-convergence", "disk-convergence", "starred-uniformity", "flow-diffusivity",
           "flow-time-change", "branch-law"]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("names", nargs="*", default=PILOTED)
    args = p.parse_args(argv)
    for name in args.names:
        cfg = ExperimentConfig.from_file(CONFIGS / f"{name}.json")
        cfg.output = None
        report = run_experiment(cfg)
        print(report.summary())
        for tname, t in cfg.tolerances.items():
            if t.get("note"):
                print(f"    {tname}: {t['note']}")


if __name__ == "__main__":
    main()
