"""Command line front end: run scenarios, validate them, crunch savings.

Subcommands::

    pid-sim run <scenario.scn> [...] [--seed N] [--step] [--report DIR]
                                [--log FILE] [--jobs N]
    pid-sim validate <scenario.scn>
    pid-sim metrics --students N --pages N --weeks N
    pid-sim metrics --campus N --fraction P/Q --pages-each N
    pid-sim metrics --pages-total N

Exit code is 0 unless something went wrong internally or the input was
invalid; undelivered roster members do not fail the process.  When neither
--seed nor the scenario provides a seed, the PID_SIM_SEED environment
variable is used, then 0.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import __version__
from .errors import ScenarioError, SimError
from .metrics import (
    CourseUsage,
    PaperConversion,
    SavingsSummary,
    campus_pages,
    pages_per_course,
    pages_to_reams,
    pages_to_trees,
    savings_report,
)
from .pidctl import DeliveryReport, StepConfig, StepReport, run_proactive, run_stepped
from .scenario import Scenario, load_scenario, shipped_fixture_path
from .simnet import SimWorld

ENV_SEED = "PID_SIM_SEED"


@dataclass
class RunArtifacts:
    """Everything one scenario run produces."""

    lines: list[str]  # stdout body, banner excluded
    world: SimWorld
    report: StepReport | DeliveryReport
    savings: SavingsSummary | None = None
    exit_code: int = 0

    def log_text(self) -> str:
        return self.world.render_log()

    def report_text(self) -> str:
        return "".join(line + "\n" for line in self.lines)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pid-sim",
        description="Deterministic proactive-delivery simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one or more scenario files")
    run_p.add_argument("scenarios", nargs="+",
                       help="scenario file path, or the name of a shipped fixture")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    run_p.add_argument("--step", action="store_true",
                       help="interactive stepped mode: wait for enter between phases")
    run_p.add_argument("--report", metavar="DIR", default=None,
                       help="write log/report/savings files into DIR")
    run_p.add_argument("--log", metavar="FILE", default=None,
                       help="write the event log to FILE")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="run multiple scenarios in parallel processes")

    val_p = sub.add_parser("validate", help="parse and validate a scenario file")
    val_p.add_argument("scenario")

    met_p = sub.add_parser("metrics", help="page/ream/tree savings arithmetic")
    met_p.add_argument("--students", type=int)
    met_p.add_argument("--pages", type=int,
                       help="pages per student per week")
    met_p.add_argument("--weeks", type=int)
    met_p.add_argument("--campus", type=int, metavar="INSTRUCTORS")
    met_p.add_argument("--fraction", default="1/4",
                       help="heavy-teaching fraction, e.g. 1/4")
    met_p.add_argument("--pages-each", type=int,
                       help="pages per heavy instructor per semester")
    met_p.add_argument("--pages-total", type=int,
                       help="convert a raw page count to reams and trees")
    return parser


def _resolve_scenario_path(arg: str) -> str:
    if os.path.exists(arg):
        return arg
    try:
        return shipped_fixture_path(arg)
    except ScenarioError:
        raise ScenarioError(f"no such scenario file or shipped fixture: {arg}") from None


def _pick_seed(flag_seed: int | None, scenario: Scenario) -> int:
    if flag_seed is not None:
        return flag_seed
    if scenario.seed is not None:
        return scenario.seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ScenarioError(f"{ENV_SEED} is not an integer: {env!r}") from None
    return 0


def execute_scenario(path: str, seed_flag: int | None = None,
                     interactive: bool = False) -> RunArtifacts:
    """Run one scenario file and collect its artifacts."""
    scenario = load_scenario(path)
    seed = _pick_seed(seed_flag, scenario)
    world = scenario.build_world(seed)
    lines: list[str] = [f"scenario={os.path.basename(path)} mode={scenario.mode} seed={seed}"]

    if scenario.mode == "stepped":
        config = StepConfig(local=scenario.local,
                            file_name=scenario.file_name,
                            payload=scenario.file_payload,
                            file_path=_step_config_path(scenario),
                            target=scenario.step_target,
                            interactive=interactive,
                            print_fn=print if interactive else None)
        report = run_stepped(world, config)
        if interactive:
            return RunArtifacts([], world, report)  # lines already printed live
        lines.extend(report.lines)
        return RunArtifacts(lines, world, report)

    if interactive:
        raise ScenarioError("--step requires a stepped-mode scenario")
    name, payload = scenario.resolve_payload()
    report = run_proactive(world, scenario.roster, (name, payload),
                           params=scenario.radio,
                           inquiry_interval=scenario.inquiry_interval,
                           local=scenario.local)
    lines.extend(report.render_lines())
    savings = None
    if scenario.usage is not None:
        savings = savings_report(report, scenario.usage)
        lines.extend(savings.render_lines())
    return RunArtifacts(lines, world, report, savings)


def _step_config_path(scenario: Scenario) -> str | None:
    # Path resolution is left to the stepped controller so a bad path is
    # reported cleanly at step 8 instead of failing the load.
    if scenario.file_path is None:
        return None
    if os.path.isabs(scenario.file_path):
        return scenario.file_path
    return os.path.join(scenario.base_dir, scenario.file_path)


def _run_one(path: str, seed_flag: int | None, report_dir: str | None,
             log_file: str | None, subdir: bool) -> str:
    artifacts = execute_scenario(path, seed_flag)
    out = artifacts.report_text()
    if log_file:
        with open(log_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(artifacts.log_text())
    if report_dir:
        target = report_dir
        if subdir:
            stem = os.path.splitext(os.path.basename(path))[0]
            target = os.path.join(report_dir, stem)
        os.makedirs(target, exist_ok=True)
        with open(os.path.join(target, "log.txt"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(artifacts.log_text())
        with open(os.path.join(target, "report.txt"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(out)
    return out


def _cmd_run(args: argparse.Namespace) -> int:
    paths = [_resolve_scenario_path(s) for s in args.scenarios]
    if args.step:
        if len(paths) != 1:
            raise ScenarioError("--step runs exactly one scenario")
        execute_scenario(paths[0], args.seed, interactive=True)
        return 0
    subdir = len(paths) > 1
    if args.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_run_one, p, args.seed, args.report,
                                   None if subdir else args.log, subdir)
                       for p in paths]
            outputs = [f.result() for f in futures]
    else:
        outputs = [_run_one(p, args.seed, args.report,
                            args.log if len(paths) == 1 else None, subdir)
                   for p in paths]
    for out in outputs:
        sys.stdout.write(out)
    return 0

def _cmd_validate(args: argparse.Namespace) -> int:
    path = _resolve_scenario_path(args.scenario)
    scenario = load_scenario(path)
    print(f"ok: {path} ({scenario.mode}, {len(scenario.devices)} devices)")
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    conv = PaperConversion()
    if args.pages_total is not None:
        pages = args.pages_total
        print(f"pages={pages}")
        print(f"reams={pages_to_reams(pages, conv)}")
        print(f"trees={pages_to_trees(pages, conv)}")
        return 0
    if args.campus is not None:
        if args.pages_each is None:
            raise ScenarioError("--campus needs --pages-each")
        fraction = Fraction(args.fraction)
        pages = campus_pages(args.campus, fraction, args.pages_each)
        print(f"assumptions instructors={args.campus} "
              f"heavy_fraction={fraction} pages_each={args.pages_each}")
        print(f"pages={pages}")
        print(f"reams={pages_to_reams(pages, conv)}")
        print(f"trees={pages_to_trees(pages, conv)}")
        return 0
    if args.students is None or args.pages is None or args.weeks is None:
        raise ScenarioError(
            "metrics needs --students/--pages/--weeks, --campus/--pages-each, "
            "or --pages-total")
    usage = CourseUsage(args.students, args.pages, args.weeks)
    pages = pages_per_course(usage)
    print(f"assumptions students={usage.students} "
          f"pages_per_student_week={usage.pages_per_student_week} "
          f"weeks={usage.weeks}")
    print(f"pages_per_week={usage.students * usage.pages_per_student_week}")
    print(f"pages={pages}")
    print(f"reams={pages_to_reams(pages, conv)}")
    print(f"trees={pages_to_trees(pages, conv)}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    print(f"pid-sim {__version__}")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_metrics(args)
    except (SimError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
