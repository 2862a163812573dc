import argparse
import logging
import sys
from typing import List, Optional

from .artifacts import ArtifactError
from .config import load_config
from .runner import ExperimentRunner, RunOutcome, load_outcome

STATUS_EMOJI = {"PASS": "✅", "FAIL": "❌", "REPORT-ONLY": "📝"}


def print_with_emoji(message: str, emoji: str):
    print(f"{emoji} {message}")


def setup_logging(level: str, log_file: str, log_format: str) -> None:
    """Configure the root logger once, writing to the log file and the console."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=log_format,
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler()
        ]
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thick-lab",
        description="Thick control sets, spectral inequalities and heat null-control experiments."
    )
    parser.add_argument("--config", default=None, help="Lab configuration file (default: config.yaml)")
    parser.add_argument("--debug", action="store_true", help="Log at DEBUG level")
    subparsers = parser.add_subparsers(dest="command", required=True)

    validate = subparsers.add_parser("validate", help="Check experiment configs without running them")
    validate.add_argument("configs", nargs="+", help="Experiment config files (JSON or YAML)")

    run = subparsers.add_parser("run", help="Run experiment configs and write their artifacts")
    run.add_argument("configs", nargs="+", help="Experiment config files (JSON or YAML)")
    run.add_argument("--jobs", type=int, default=None, help="Experiments to run concurrently")

    report = subparsers.add_parser("report", help="Re-print the checks of finished result directories")
    report.add_argument("directories", nargs="+", help="Result directories holding summary.json")
    return parser


def print_outcome(outcome: RunOutcome) -> None:
    """Summary lines for one experiment: diagnostics, warnings, flags and checks."""
    for diagnostic in outcome.config_errors:
        print_with_emoji(f"{outcome.name}: {diagnostic}", "❌")
    for warning in outcome.warnings:
        print_with_emoji(f"{outcome.name}: {warning}", "⚠️")
    for flag in outcome.flags:
        print_with_emoji(f"{outcome.name}: {flag}", "⚠️")
    if outcome.error:
        print_with_emoji(f"{outcome.name}: {outcome.error}", "❌")
    for check in outcome.checks:
        print_with_emoji(f"{outcome.name} {check.name}: {check.status} {check.detail}",
                         STATUS_EMOJI.get(check.status, "📝"))


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns 0 with no FAIL, 1 on FAIL or numerical flag, 2 on invalid config."""
    args = build_parser().parse_args(argv)

    try:
        config = load_config(args.config)
    except (ValueError, OSError) as e:
        print_with_emoji(f"Invalid lab configuration: {e}", "❌")
        return 2
    level = "DEBUG" if args.debug or config.debug else config.logging.level
    setup_logging(level, config.logging.file, config.logging.format)

    runner = ExperimentRunner(config)
    if args.command == "validate":
        outcomes = [runner.validate(path) for path in args.configs]
        for outcome in outcomes:
            if not outcome.config_errors:
                print_with_emoji(f"{outcome.name}: valid {outcome.kind} experiment", "✅")
            print_outcome(outcome)
    elif args.command == "run":
        jobs = args.jobs if args.jobs is not None else config.jobs
        logging.info(f"Running {len(args.configs)} experiment(s) with {jobs} job(s)")
        outcomes = runner.run_many(args.configs, jobs)
        for outcome in outcomes:
            print_outcome(outcome)
            if outcome.directory is not None:
                print_with_emoji(f"{outcome.name}: artifacts in {outcome.directory}", "📁")
    else:
        outcomes = []
        for directory in args.directories:
            try:
                outcome = load_outcome(directory)
            except ArtifactError as e:
                print_with_emoji(f"Cannot read results: {e}", "❌")
                return 2
            print_outcome(outcome)
            outcomes.append(outcome)

    return max((o.exit_code for o in outcomes), default=0)


if __name__ == "__main__":
    sys.exit(main())
