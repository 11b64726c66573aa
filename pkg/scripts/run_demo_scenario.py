#!/usr/bin/env python3
"""Run the bundled demo scenario in-process and print the report.

Usage: python scripts/run_demo_scenario.py [--seed N] [--report PATH]
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pipechain.harness.runner import run_scenario
from pipechain.harness.scenario import load_scenario


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--report", type=Path, default=None)
    args = parser.parse_args()

    scenario_path = Path(__file__).resolve().parent.parent / "scenarios" / "demo.scenario"
    scenario = load_scenario(scenario_path)
    work = Path(tempfile.mkdtemp(prefix="pipechain-demo-"))
    print(f"running {scenario.name!r} (sim, work dir {work})")
    _report, exit_code = run_scenario(
        scenario, work, sim=True, seed=args.seed, report_path=args.report
    )
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
