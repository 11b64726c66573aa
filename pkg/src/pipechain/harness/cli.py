"""`pipechain-harness`: run a pipeline scenario end to end."""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

import click

from .runner import run_scenario
from .scenario import ScenarioError, load_scenario


@click.group()
def main() -> None:
    pass


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--sim", is_flag=True, help="Run the whole cluster in-process.")
@click.option("--seed", default=None, type=int, help="Override the scenario seed.")
@click.option("--report", "report_path", default=None, type=click.Path())
@click.option(
    "--work-dir",
    default=None,
    type=click.Path(),
    help="Node data directory root for --sim (default: a temp dir).",
)
def run(scenario_path, sim, seed, report_path, work_dir):
    try:
        scenario = load_scenario(scenario_path)
    except ScenarioError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(2)
    if work_dir is None:
        work_dir = tempfile.mkdtemp(prefix="pipechain-harness-")
    _report, exit_code = run_scenario(
        scenario,
        Path(work_dir),
        sim=sim,
        seed=seed,
        report_path=Path(report_path) if report_path else None,
        echo=click.echo,
    )
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
