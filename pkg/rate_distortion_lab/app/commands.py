"""
Command implementations behind the `rdlab` subcommands.

Every command writes comma-separated rows (header first) to `out` or to
the --output file and returns the process exit code. Exceptions from the
services propagate to `main`, which maps them to exit codes.
"""
import csv
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, TextIO, Union

import numpy as np

from rate_distortion_lab.app.problem_files import load_problem, load_table
from rate_distortion_lab.app.schemas import ResultRow, format_number
from rate_distortion_lab.domain.errors import InfeasibleDualError, ProblemFileError
from rate_distortion_lab.domain.models import (
    DemoName,
    DemoParams,
    DistortionMeasure,
    RDPoint,
    SolverConfig,
    SourceDistribution,
    SweepEntry,
)
from rate_distortion_lab.monitoring.logger import get_logger
from rate_distortion_lab.services import analytic_erasure, ba_solver, distortion, optimizer_lab

logger = get_logger("cli")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

KKT_TOLERANCE = 1e-6
SANDWICH_TOLERANCE = 1e-5
MONOTONE_SLACK = 1e-9
CONVEXITY_SLACK = 1e-6
VERIFY_GRID_POINTS = 9

PathLike = Union[str, Path]


@contextmanager
def _sink(output: Optional[PathLike], out: Optional[TextIO]) -> Iterator[TextIO]:
    if output is not None:
        with open(output, "w", newline="") as handle:
            yield handle
    else:
        yield out or sys.stdout


def _writer(stream: TextIO):
    return csv.writer(stream, lineterminator="\n")


def _solve_point(
    p: SourceDistribution, d: DistortionMeasure, D: float, cfg: SolverConfig, prefer_analytic: bool
) -> RDPoint:
    if prefer_analytic:
        point = analytic_erasure.analytic_point(p, d, D)
        if point is not None:
            return point
    return ba_solver.solve_rd(p, d, D, cfg)


# ============= solve =============

def cmd_solve(
    problem_path: PathLike,
    D: float,
    cfg: SolverConfig,
    channel: bool = False,
    bits: bool = False,
    prefer_analytic: bool = False,
    output: Optional[PathLike] = None,
    out: Optional[TextIO] = None,
) -> int:
    """Solve one point; with `channel` the test channel follows as K rows."""
    _, p, d = load_problem(problem_path)
    point = _solve_point(p, d, D, cfg, prefer_analytic)
    row = ResultRow.from_point(D, point)

    with _sink(output, out) as stream:
        writer = _writer(stream)
        writer.writerow(ResultRow.header(bits))
        writer.writerow(row.fields(bits))
        if channel:
            for channel_row in point.channel.rows:
                writer.writerow([format_number(v) for v in channel_row])
    return EXIT_OK


# ============= sweep =============

def parse_grid(spec: str) -> List[float]:
    """
    "start:stop:count" (evenly spaced, both ends included) or "a,b,c".

    Raises:
        ProblemFileError: malformed or descending grid
    """
    spec = spec.strip()
    try:
        if ":" in spec:
            start, stop, count = spec.split(":")
            if not count.strip().isdigit():
                raise ProblemFileError(f"grid count must be a natural number, got {count!r}")
            grid = [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        elif spec:
            grid = [float(v) for v in spec.split(",")]
        else:
            grid = []
    except ValueError as e:
        if isinstance(e, ProblemFileError):
            raise
        raise ProblemFileError(f"cannot parse grid {spec!r}") from None
    if any(not math.isfinite(v) for v in grid):
        raise ProblemFileError(f"grid {spec!r} has non-finite values")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ProblemFileError(f"grid {spec!r} must be ascending")
    return grid


def _sweep_entries(
    p: SourceDistribution, d: DistortionMeasure, grid: Sequence[float], cfg: SolverConfig, prefer_analytic: bool
) -> List[SweepEntry]:
    analytic = [analytic_erasure.analytic_point(p, d, D) if prefer_analytic else None for D in grid]
    pending = [D for D, point in zip(grid, analytic) if point is None]
    solved = iter(ba_solver.sweep(p, d, pending, cfg))
    return [
        SweepEntry(target=D, point=point) if point is not None else next(solved)
        for D, point in zip(grid, analytic)
    ]


def cmd_sweep(
    problem_path: PathLike,
    grid_spec: str,
    cfg: SolverConfig,
    bits: bool = False,
    prefer_analytic: bool = False,
    output: Optional[PathLike] = None,
    out: Optional[TextIO] = None,
) -> int:
    """Solve every grid point; failed points are reported in the status column."""
    _, p, d = load_problem(problem_path)
    grid = parse_grid(grid_spec)
    entries = _sweep_entries(p, d, grid, cfg, prefer_analytic)

    with _sink(output, out) as stream:
        writer = _writer(stream)
        writer.writerow(ResultRow.header(bits))
        for entry in entries:
            if entry.ok:
                row = ResultRow.from_point(entry.target, entry.point)
            else:
                row = ResultRow.failed(entry.target, entry.error or "unknown error")
            writer.writerow(row.fields(bits))
    return EXIT_OK


# ============= demo =============

DEMO_HEADER = [
    "m", "x", "rate_1", "rate_2", "D_1", "D_2",
    "tv_branch", "statistic", "threshold", "verdict", "solver_1", "solver_2",
]


def cmd_demo(
    name: str,
    params: DemoParams,
    table_path: PathLike,
    n: int,
    m_max: int,
    cfg: SolverConfig,
    measure_path: Optional[PathLike] = None,
    output: Optional[PathLike] = None,
    out: Optional[TextIO] = None,
) -> int:
    """Branch test for m = 1..m_max followed by a summary comment line."""
    demo = DemoName(name)
    table = load_table(table_path)
    if measure_path is not None:
        _, seed, measure = load_problem(measure_path)
        params = params.model_copy(update={"measure": measure, "seed": seed})
    report = optimizer_lab.run_reduction(demo, params, table, n, m_max, cfg)

    with _sink(output, out) as stream:
        writer = _writer(stream)
        writer.writerow(DEMO_HEADER)
        for row in report.rows:
            pair = row.pair
            writer.writerow([
                str(row.m),
                format_number(pair.x_value),
                format_number(pair.branch_1.rate_nats),
                format_number(pair.branch_2.rate_nats),
                format_number(pair.branch_1.distortion),
                format_number(pair.branch_2.distortion),
                format_number(pair.tv_branch),
                format_number(pair.statistic),
                format_number(pair.threshold),
                pair.verdict.value,
                pair.solver_1,
                pair.solver_2,
            ])
        if report.first_separated is None:
            stream.write(f"# verdict never separated for m <= {m_max}\n")
        else:
            stream.write(f"# verdict separated at m={report.first_separated}\n")
    return EXIT_OK


# ============= verify =============

@dataclass
class VerificationReport:
    """Outcome of every diagnostic run by cmd_verify."""

    checks: List[List[str]] = field(default_factory=list)

    def add(self, check: str, passed: Optional[bool], detail: str) -> None:
        status = "info" if passed is None else ("pass" if passed else "fail")
        self.checks.append([check, status, detail])

    @property
    def ok(self) -> bool:
        return all(status != "fail" for _, status, _ in self.checks)


def _monotone(rates: Sequence[float]) -> bool:
    return all(b <= a + MONOTONE_SLACK for a, b in zip(rates, rates[1:]))


def _convex(rates: Sequence[float]) -> bool:
    return all(a - 2.0 * b + c >= -CONVEXITY_SLACK for a, b, c in zip(rates, rates[1:], rates[2:]))


def verify_problem(p: SourceDistribution, d: DistortionMeasure, cfg: SolverConfig) -> VerificationReport:
    """Run the diagnostic pipeline on one problem."""
    report = VerificationReport()

    if distortion.is_normal(d):
        report.add("normal", True, "every row has a zero entry")
    else:
        normalized = distortion.normalize(d, p)
        report.add(
            "normal",
            None,
            f"not normal; distortion shift {format_number(normalized.distortion_shift)}; "
            "continuing on the normalized measure",
        )
        d = normalized.normal_measure

    trivial = distortion.r_trivial_columns(d)
    if trivial:
        report.add("r_trivial", None, f"zero columns {trivial}: R(D) = 0 for every D >= 0")
    else:
        report.add("r_trivial", True, "no all-zero column")

    dmax, column = distortion.d_max(p, d)
    report.add("d_max", True, f"d_max {format_number(dmax)} at column {column}")
    if trivial:
        return report

    dmin = distortion.min_distortion(p, d)
    grid = [float(v) for v in np.linspace(dmin, dmax, VERIFY_GRID_POINTS)]
    entries = ba_solver.sweep(p, d, grid, cfg)
    failed = [entry for entry in entries if not entry.ok]
    report.add(
        "sweep",
        not failed,
        f"{len(entries) - len(failed)}/{len(entries)} points solved"
        + (f"; first failure at D={format_number(failed[0].target)}: {failed[0].error}" if failed else ""),
    )
    points = [entry.point for entry in entries if entry.point is not None]

    worst_kkt = 0.0
    worst_gap = 0.0
    infeasible = []
    for point in points:
        if math.isinf(point.lam):
            continue
        residuals = ba_solver.lagrangian_residuals(p, d, point)
        worst_kkt = max(worst_kkt, residuals.max_violation, residuals.support_residual)
        try:
            bound = ba_solver.dual_rate_bound(p, d, point.lam, residuals.mu, point.distortion, tolerance=KKT_TOLERANCE)
        except InfeasibleDualError as e:
            infeasible.append(f"D={format_number(point.distortion)}: {e}")
            continue
        if bound > point.rate_nats + SANDWICH_TOLERANCE:
            infeasible.append(f"D={format_number(point.distortion)}: bound {format_number(bound)} above rate")
        worst_gap = max(worst_gap, point.rate_nats - bound)
    report.add("kkt", worst_kkt <= KKT_TOLERANCE, f"largest residual {format_number(worst_kkt)}")
    report.add(
        "dual_sandwich",
        not infeasible and worst_gap <= SANDWICH_TOLERANCE,
        infeasible[0] if infeasible else f"largest rate minus dual bound {format_number(worst_gap)}",
    )

    rates = [point.rate_nats for point in points]
    report.add("monotone", _monotone(rates), "rate non-increasing in D")
    report.add("convex", _convex(rates) if len(points) == len(entries) else None, "rate convex in D")
    return report


def cmd_verify(
    problem_path: PathLike,
    cfg: SolverConfig,
    output: Optional[PathLike] = None,
    out: Optional[TextIO] = None,
) -> int:
    """Print check,status,detail rows; EXIT_VERIFY when any check fails."""
    _, p, d = load_problem(problem_path)
    report = verify_problem(p, d, cfg)

    with _sink(output, out) as stream:
        writer = _writer(stream)
        writer.writerow(["check", "status", "detail"])
        writer.writerows(report.checks)

    if not report.ok:
        logger.warning("verification failed", extra={"extra": {"problem": str(problem_path)}})
        return EXIT_VERIFY
    return EXIT_OK
