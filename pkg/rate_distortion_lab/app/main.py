"""
Command-line entry point: `rdlab {solve,sweep,demo,verify}`.

Exit codes: 0 success, 2 unreadable input, 3 solver failure,
4 failed verification.
"""
import argparse
import json
import sys
from typing import List, Optional, Tuple

from pydantic import ValidationError

from rate_distortion_lab import __version__
from rate_distortion_lab.app.commands import (
    EXIT_PARSE,
    EXIT_SOLVER,
    cmd_demo,
    cmd_solve,
    cmd_sweep,
    cmd_verify,
)
from rate_distortion_lab.app.config import SolverSettings
from rate_distortion_lab.domain.errors import ProblemFileError, RateDistortionError
from rate_distortion_lab.domain.models import DemoName, DemoParams, SolverConfig
from rate_distortion_lab.monitoring.logger import configure_logging, get_logger
from rate_distortion_lab.monitoring.metrics import get_metrics

logger = get_logger("app.main")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, help="BA stopping tolerance (default RDLAB_TOLERANCE)")
    common.add_argument("--max-iter", type=int, help="BA iterations per fixed-slope solve")
    common.add_argument("--lambda-max", type=float, help="upper end of the initial slope bracket")
    common.add_argument("--workers", type=int, help="thread pool size for sweeps and demos")
    common.add_argument("--bits", action="store_true", help="add a rate_bits column")
    common.add_argument("--output", help="write the table to this file instead of stdout")
    common.add_argument("--verbose", action="store_true", help="log solver progress to stderr")
    common.add_argument("--metrics", action="store_true", help="dump solver metrics as JSON to stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="rdlab", description="Rate-distortion solver and optimizer-sensitivity lab.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="solve R(D) at one distortion")
    solve.add_argument("problem", help="problem file")
    solve.add_argument("D", type=float, help="target distortion")
    solve.add_argument("--channel", action="store_true", help="print the optimal test channel")
    solve.add_argument("--prefer-analytic", action="store_true", help="use the closed form on erasure measures")

    sweep = sub.add_parser("sweep", parents=[common], help="solve R(D) over a grid")
    sweep.add_argument("problem", help="problem file")
    sweep.add_argument("grid", help="'start:stop:count' or a comma-separated list")
    sweep.add_argument("--prefer-analytic", action="store_true", help="use the closed form on erasure measures")

    demo = sub.add_parser("demo", parents=[common], help="run a branch-separation reduction")
    demo.add_argument("name", choices=[name.value for name in DemoName])
    demo.add_argument("table", help="enumeration table file ('i n' per line)")
    demo.add_argument("--n", type=int, default=0, help="number looked up in the table")
    demo.add_argument("--m-max", type=int, default=12, help="last step m")
    demo.add_argument("--K", type=int, default=2)
    demo.add_argument("--d", type=float, default=0.2, help="base erasure distortion")
    demo.add_argument("--c", type=float, default=0.3, help="erasure-mass threshold")
    demo.add_argument("--D", type=float, default=0.15, help="target distortion of the erasure demo")
    demo.add_argument("--d01", type=float, default=1.0)
    demo.add_argument("--d10", type=float, default=1.0)
    demo.add_argument("--L-scale", type=float, default=1.0)
    demo.add_argument("--measure", help="problem file for the general demo; its source line seeds the balancing")
    demo.add_argument("--constant-dmax", action="store_true", help="perturb without moving D_max")

    verify = sub.add_parser("verify", parents=[common], help="run the diagnostic checks on a problem")
    verify.add_argument("problem", help="problem file")
    return parser


def build_config(args: argparse.Namespace) -> SolverConfig:
    """SolverConfig from the environment with command-line overrides."""
    bracket = None
    cap = None
    if args.lambda_max is not None:
        bracket = (SolverSettings.LAMBDA_MIN, args.lambda_max)
        cap = max(SolverSettings.LAMBDA_CAP, args.lambda_max)
    return SolverConfig.from_settings(
        tolerance=args.tolerance,
        max_iterations=args.max_iter,
        lambda_bracket=bracket,
        lambda_cap=cap,
        workers=args.workers,
    )


def _arguments(args: argparse.Namespace) -> Tuple[SolverConfig, Optional[DemoParams]]:
    """Validated solver configuration and demo parameters; bad values are usage errors."""
    try:
        cfg = build_config(args)
        if args.command != "demo":
            return cfg, None
        params = DemoParams(
            K=args.K, d=args.d, c=args.c, D=args.D,
            d01=args.d01, d10=args.d10, L_scale=args.L_scale, constant_dmax=args.constant_dmax,
        )
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        raise ValueError(f"invalid argument {location}: {error['msg']}") from None
    return cfg, params


def _dispatch(args: argparse.Namespace) -> int:
    cfg, params = _arguments(args)
    if args.command == "solve":
        return cmd_solve(
            args.problem, args.D, cfg,
            channel=args.channel, bits=args.bits, prefer_analytic=args.prefer_analytic, output=args.output,
        )
    if args.command == "sweep":
        return cmd_sweep(
            args.problem, args.grid, cfg,
            bits=args.bits, prefer_analytic=args.prefer_analytic, output=args.output,
        )
    if args.command == "demo":
        return cmd_demo(
            args.name, params, args.table, args.n, args.m_max, cfg,
            measure_path=args.measure, output=args.output,
        )
    return cmd_verify(args.problem, cfg, output=args.output)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("INFO" if args.verbose else SolverSettings.LOG_LEVEL)

    try:
        SolverSettings.validate()
        code = _dispatch(args)
    except ProblemFileError as e:
        print(f"rdlab: error: {e}", file=sys.stderr)
        code = EXIT_PARSE
    except (RateDistortionError, ValidationError) as e:
        # arguments and input files are validated before this point
        logger.error("solver failure", extra={"extra": {"command": args.command, "error": str(e)}})
        print(f"rdlab: solver failure: {e}", file=sys.stderr)
        code = EXIT_SOLVER
    except ValueError as e:
        print(f"rdlab: error: {e}", file=sys.stderr)
        code = EXIT_PARSE

    if args.metrics:
        print(json.dumps(get_metrics().get_all_metrics(), indent=2, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
