"""
QSS Collusion Lab - Command Line
Batch runner and worked-equation checks

Usage:
    python simulate.py --scenario honest --k 32 --k1 8 --trials 1000 --seed 7
    python simulate.py --scenario collusion-improved --k 64 --k1 8 --m 16 --out report.json --csv summary.csv
    python simulate.py --verify-equations
"""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from qss import __version__
from qss.config import get_settings
from qss.exceptions import InvalidArgumentError, SimulationError
from qss.schemas.config import ProtocolConfig, Scenario, ScenarioSpec
from qss.services.batch import batch_runner
from qss.services.equations import equation_checks

settings = get_settings()
logger = logging.getLogger("qss")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTERNAL = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1, not argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simulate.py", description=f"{settings.app_name} {__version__}")
    parser.add_argument("--scenario", choices=[s.value for s in Scenario], help="Scenario to run")
    parser.add_argument("--k", type=int, default=32, help="Bell pairs per run")
    parser.add_argument("--k1", type=int, default=8, help="Final check positions")
    parser.add_argument("--m", type=int, default=0, help="Pre-check photons (improved protocol)")
    parser.add_argument("--trials", type=int, default=settings.default_trials, help="Number of trials")
    parser.add_argument("--seed", type=int, default=settings.default_seed, help="Master seed")
    parser.add_argument("--out", help="JSON report path")
    parser.add_argument("--csv", help="CSV summary path")
    parser.add_argument("--verify-equations", action="store_true", help="Run the worked-equation checks")
    parser.add_argument(
        "--zach-returns-genuine",
        action="store_true",
        help="In the improved protocol Zach surrenders the genuine t photons",
    )
    parser.add_argument("--workers", type=int, default=settings.workers, help="Parallel worker processes")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def spec_from_args(args: argparse.Namespace) -> ScenarioSpec:
    """Validated batch request; raises InvalidArgumentError or ValidationError."""
    if args.scenario is None:
        raise InvalidArgumentError("--scenario is required unless --verify-equations is given")
    scenario = Scenario(args.scenario)
    config = ProtocolConfig(
        k=args.k,
        k1=args.k1,
        m=args.m,
        variant=ScenarioSpec.variant_for(scenario, args.m),
        seed=args.seed,
    )
    return ScenarioSpec(
        scenario=scenario,
        config=config,
        trials=args.trials,
        out=args.out,
        csv=args.csv,
        zach_returns_genuine=args.zach_returns_genuine,
        workers=args.workers,
    )


def parse_args(argv: Optional[List[str]] = None) -> ScenarioSpec:
    return spec_from_args(build_parser().parse_args(argv))


def _validation_messages(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        message = item["msg"].removeprefix("Value error, ")
        location = ".".join(str(part) for part in item["loc"])
        messages.append(f"{location}: {message}" if location else message)
    return "; ".join(messages)


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=settings.log_format, force=True)


def verify_equations() -> bool:
    """Print one status line per check; True iff every check passed."""
    results = equation_checks.run_all()
    for result in results:
        tag = "[OK]" if result.passed else "[FAILED]"
        print(f"{tag} {result.name}: {result.detail}")
    return all(result.passed for result in results)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    if args.verify_equations:
        try:
            passed = verify_equations()
        except Exception as e:
            logger.exception(f"Equation checks crashed: {e}")
            return EXIT_INTERNAL
        if not passed:
            return EXIT_INTERNAL
        if args.scenario is None:
            return EXIT_OK

    try:
        spec = spec_from_args(args)
    except ValidationError as e:
        print(f"[ERROR] {_validation_messages(e)}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        report = batch_runner.run_batch(spec)
    except SimulationError as e:
        logger.error(f"Simulation failed: {e}")
        return EXIT_INTERNAL
    except Exception as e:
        # Anything else is a simulator bug, never a usage error
        logger.exception(f"Unexpected failure during the batch: {e}")
        return EXIT_INTERNAL

    try:
        batch_runner.write_reports(report, spec.out, spec.csv)
    except OSError as e:
        print(f"[ERROR] Cannot write report: {e}", file=sys.stderr)
        return EXIT_USAGE

    aggregates = report.aggregates
    print(
        f"[OK] {spec.scenario.value}: {spec.trials} trials, "
        f"detection_rate={aggregates.detection_rate:.{settings.float_decimals}f}, "
        f"mean_mismatch={aggregates.mean_mismatch:.{settings.float_decimals}f}"
    )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
