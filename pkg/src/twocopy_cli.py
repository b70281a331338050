"""Command-line front end: run experiments, certify maps, dump sampled outcomes

Reports go to standard output as JSON, logs to standard error.
"""
import argparse
import asyncio
import json
import sys
import time
from typing import Any, Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

from src.config import get_settings
from src.errors import TwoCopyError, UsageError
from src.experiment import ExperimentConfig, parse_state_source, run_experiment
from src.measurement.bell_measurement import exact_distribution, sample_outcomes, sample_outcomes_parallel
from src.quantum.channels import positivity_class
from src.reports.report_io import dump_report, load_choi_file, write_outcomes

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


class CliParser(argparse.ArgumentParser):
    """argparse parser that raises instead of printing usage and exiting"""

    def error(self, message: str):
        raise UsageError(message)


def parse_shots(value: str):
    if value == "exact":
        return value
    try:
        shots = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shots must be a positive integer or 'exact', got '{value}'")
    if shots < 1:
        raise argparse.ArgumentTypeError(f"shots must be a positive integer or 'exact', got '{value}'")
    return shots


def build_parser() -> CliParser:
    parser = CliParser(prog="twocopy", description="Two-copy Bell-measurement tomography toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run one experiment described by a JSON config")
    run.add_argument("config", help="Path to the config JSON, or '-' for standard input")
    run.add_argument("--task", help="Override the config's task")
    run.add_argument("--shots", type=parse_shots, help="Override shots (positive integer or 'exact')")
    run.add_argument("--seed", type=int, help="Override the sampling seed")

    certify = subparsers.add_parser("certify-map", help="Classify a Choi matrix as CP and/or ccP")
    certify.add_argument("choi", help="Path to a Choi matrix JSON document")
    certify.add_argument("--tol", type=float, default=None, help="Eigenvalue tolerance (default: settings psd_tol)")

    sample = subparsers.add_parser("sample", help="Sample Bell outcomes on two copies of a state")
    sample.add_argument("state", help="random:n=2,rank=1,seed=7 | bloch:0,0,1 | named:ghz:3 | <state.json>")
    sample.add_argument("--shots", type=int, required=True, help="Number of shots")
    sample.add_argument("--seed", type=int, required=True, help="Sampling seed")
    sample.add_argument("--out", required=True, help="Output path (.csv, or .parquet)")
    sample.add_argument("--chunk-shots", type=int, default=None, help="Sample concurrently in chunks of this size")
    return parser


def load_config(source: str, overrides: Dict[str, Any]) -> ExperimentConfig:
    """Read the config JSON and apply command-line overrides before validation"""
    try:
        if source == "-":
            document = json.load(sys.stdin)
        else:
            with open(source, "r", encoding="utf-8") as fh:
                document = json.load(fh)
    except json.JSONDecodeError as e:
        raise UsageError(f"Config is not valid JSON: {e}")
    except OSError as e:
        raise UsageError(f"Cannot read config '{source}': {e}")
    if not isinstance(document, dict):
        raise UsageError("Config must be a JSON object")
    document.update({key: value for key, value in overrides.items() if value is not None})
    return ExperimentConfig.model_validate(document)


def run_command(args: argparse.Namespace) -> Dict[str, Any]:
    config = load_config(args.config, {"task": args.task, "shots": args.shots, "seed": args.seed})
    return run_experiment(config)


def certify_command(args: argparse.Namespace) -> Dict[str, Any]:
    start = time.perf_counter()
    choi = load_choi_file(args.choi)
    report = positivity_class(choi, args.tol)
    logger.info(f"Map on {choi.n} qubit(s) classified as {report.classification.value}")
    return {
        "schema_version": get_settings().report_schema_version,
        "config": {"choi": args.choi, "tol": args.tol},
        "results": {"n": choi.n, **report.to_dict()},
        "duration_s": time.perf_counter() - start,
    }


def sample_command(args: argparse.Namespace) -> Dict[str, Any]:
    start = time.perf_counter()
    if args.shots < 1:
        raise UsageError(f"--shots must be >= 1, got {args.shots}")
    source = parse_state_source(args.state)
    rho = source.build()
    dist = exact_distribution(rho, rho)
    if args.chunk_shots:
        outcomes = asyncio.run(sample_outcomes_parallel(dist, args.shots, args.seed, args.chunk_shots))
    else:
        outcomes = sample_outcomes(dist, args.shots, args.seed)
    path = write_outcomes(outcomes, args.out)
    return {
        "schema_version": get_settings().report_schema_version,
        "config": {
            "state": source.model_dump(mode="json"),
            "shots": args.shots,
            "seed": args.seed,
            "chunk_shots": args.chunk_shots,
        },
        "results": {"n": rho.n, "rows": len(outcomes), "out": str(path)},
        "duration_s": time.perf_counter() - start,
    }


COMMANDS = {
    "run": run_command,
    "certify-map": certify_command,
    "sample": sample_command,
}


def emit_error(error: Exception):
    payload = {"error": type(error).__name__, "message": str(error)}
    print(json.dumps(payload), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    logger.remove()
    logger.add(sys.stderr, level=settings.log_level)
    try:
        args = build_parser().parse_args(argv)
        report = COMMANDS[args.command](args)
    except (UsageError, ValidationError) as e:
        logger.error(f"Invalid usage or configuration: {e}")
        emit_error(e)
        return EXIT_USAGE_ERROR
    except (TwoCopyError, OSError) as e:
        logger.error(f"Command failed: {e}")
        emit_error(e)
        return EXIT_DOMAIN_ERROR
    print(dump_report(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
