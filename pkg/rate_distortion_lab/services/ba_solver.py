"""
Blahut-Arimoto solver for R(D) on finite alphabets.

Three entry points:
- ba_fixed_slope: the parametric point minimizing I + lambda * E[d]
- solve_rd: the point at a target distortion, by bisection on lambda
- sweep: solve_rd over a grid, optionally on a thread pool

Only the value and the dual (KKT) residuals are certified. Optimizers of a
rate-distortion problem need not be unique, so the channel itself is never
used as a stopping criterion.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import xlogy

from rate_distortion_lab.domain.errors import (
    BracketError,
    DimensionMismatchError,
    InfeasibleDistortionError,
    InfeasibleDualError,
    InvalidParameterError,
    RateDistortionError,
    SolverInvariantError,
)
from rate_distortion_lab.domain.models.distortion import DistortionMeasure
from rate_distortion_lab.domain.models.probability import (
    OutputMarginal,
    SourceDistribution,
    TestChannel,
)
from rate_distortion_lab.domain.models.solver import KKTResiduals, RDPoint, SolverConfig, SweepEntry
from rate_distortion_lab.monitoring.logger import get_logger
from rate_distortion_lab.monitoring.metrics import MetricsTimer, get_metrics
from rate_distortion_lab.services.distortion import argmin_column, column_averages
from rate_distortion_lab.services.prob_core import entropy_of, mutual_information_of

logger = get_logger("ba_solver")

CORNER_TOLERANCE = 1e-12
ROW_SUM_TOLERANCE = 1e-12
WARM_START_WEIGHT = 0.9
LAMBDA_RESOLUTION = 1e-12
MAX_BISECTION_STEPS = 200
# bisection steps run on a capped budget; only the returned point must converge
BISECTION_ITERATIONS = 2000
# a straddle this narrow in lambda and this wide in distortion is a jump of D(lambda)
JUMP_RESOLUTION = 1e-6
JUMP_SPREAD = 1e-4
TIMESHARE_RATE_TOLERANCE = 1e-6


def _distortion_tolerance(cfg: SolverConfig) -> float:
    """How close solve_rd must land to the target distortion."""
    return max(100.0 * cfg.tolerance, 1e-12)


@dataclass
class _State:
    """Solver state on the support-reduced problem."""

    lam: float
    channel: np.ndarray
    q: np.ndarray
    distortion: float
    rate: float
    iterations: int = 0
    converged: bool = True
    gap: float = 0.0
    timeshared: bool = False


class _Problem:
    """A (P_X, d) pair with zero-mass source letters removed."""

    def __init__(self, p: SourceDistribution, d: DistortionMeasure):
        if p.size != d.source_size:
            raise DimensionMismatchError(
                f"source has {p.size} letters but measure has {d.source_size} rows"
            )
        self.source = p
        self.p = p.as_array()
        self.d = d.as_array()
        self.support = self.p > 0
        self.ps = self.p[self.support]
        self.ds = self.d[self.support]
        self.repro_size = d.repro_size

        averages = column_averages(self.p, self.d)
        self.dmax_column = argmin_column(averages)
        self.dmax = float(averages[self.dmax_column])
        self.dmin = float(self.p @ self.d.min(axis=1))

    @property
    def uniform(self) -> np.ndarray:
        return np.full(self.repro_size, 1.0 / self.repro_size)

    def warm_start(self, q: np.ndarray) -> np.ndarray:
        return WARM_START_WEIGHT * q + (1.0 - WARM_START_WEIGHT) * self.uniform

    def corner_state(self) -> _State:
        """Rate-zero point: every letter reproduced by the d_max column."""
        channel = np.zeros((len(self.ps), self.repro_size))
        channel[:, self.dmax_column] = 1.0
        return _State(
            lam=0.0,
            channel=channel,
            q=self.ps @ channel,
            distortion=self.dmax,
            rate=0.0,
        )

    def to_point(self, state: _State) -> RDPoint:
        # rows of zero-mass letters are free; emit them uniform
        full = np.full((len(self.p), self.repro_size), 1.0 / self.repro_size)
        full[self.support] = state.channel
        return RDPoint(
            distortion=float(np.sum(self.p[:, None] * full * self.d)),
            rate_nats=mutual_information_of(self.p, full),
            lam=state.lam,
            channel=TestChannel.from_array(full),
            output=OutputMarginal(probs=tuple(float(v) for v in self.p @ full)),
            source=self.source,
            iterations=state.iterations,
            converged=state.converged,
            gap=max(state.gap, 0.0),
            solver_tag="ba",
            timeshared=state.timeshared,
        )


# ============= Alternating minimization =============

def _kernel(d: np.ndarray, lam: float) -> np.ndarray:
    """
    exp(-lam * d) with each row scaled by exp(lam * min_l d(k, l)).

    Row scaling cancels in the channel update and keeps the row minimum at 1
    for any slope. lam = inf gives the 0/1 mask of row-minimal columns.
    """
    shifted = d - d.min(axis=1, keepdims=True)
    if math.isinf(lam):
        return (shifted == 0.0).astype(float)
    return np.exp(-lam * shifted)


def _iterate(p: np.ndarray, d: np.ndarray, lam: float, q0: np.ndarray, cfg: SolverConfig) -> _State:
    kernel = _kernel(d, lam)
    q = q0.copy()
    previous_rate = math.inf
    previous_objective = math.inf
    channel = np.empty_like(kernel)
    rate, distortion, gap = 0.0, 0.0, math.inf
    converged = False
    iteration = 0

    for iteration in range(1, cfg.max_iterations + 1):
        normalizer = kernel @ q
        channel = q[None, :] * kernel / normalizer[:, None]
        ratio = kernel.T @ (p / normalizer)
        gap = float(np.max(np.log(ratio[ratio > 0])) - np.sum(xlogy(q, ratio)))
        q = p @ channel
        rate = mutual_information_of(p, channel)
        distortion = float(np.sum(p[:, None] * channel * d))

        if cfg.debug_checks:
            objective = rate if math.isinf(lam) else rate + lam * distortion
            _check_iteration(channel, objective, previous_objective, iteration)
            previous_objective = objective

        if abs(rate - previous_rate) < cfg.tolerance and gap < cfg.tolerance:
            converged = True
            break
        previous_rate = rate

    return _State(
        lam=lam,
        channel=channel,
        q=q,
        distortion=distortion,
        rate=rate,
        iterations=iteration,
        converged=converged,
        gap=gap,
    )


def _check_iteration(channel: np.ndarray, objective: float, previous: float, iteration: int) -> None:
    row_error = float(np.max(np.abs(channel.sum(axis=1) - 1.0)))
    if row_error > ROW_SUM_TOLERANCE:
        raise SolverInvariantError(f"iteration {iteration}: channel rows off by {row_error:.3e}")
    if objective > previous + 1e-11 * (1.0 + abs(previous)):
        raise SolverInvariantError(
            f"iteration {iteration}: objective increased from {previous!r} to {objective!r}"
        )


def _run(problem: _Problem, lam: float, q0: np.ndarray, cfg: SolverConfig, budgeted: bool = False) -> _State:
    metrics = get_metrics()
    with MetricsTimer(metrics, "ba_solve_seconds"):
        state = _iterate(problem.ps, problem.ds, lam, q0, cfg)
    metrics.increment_counter("ba_solves_total")
    metrics.increment_counter("ba_iterations_total", state.iterations)

    details = {
        "lambda": lam,
        "iterations": state.iterations,
        "converged": state.converged,
        "gap": state.gap,
    }
    if not state.converged and budgeted:
        metrics.increment_counter("bisection_capped_total")
        logger.debug("bisection step stopped at its budget", extra={"extra": details})
    elif not state.converged:
        metrics.increment_counter("ba_nonconverged_total")
        logger.warning("BA iteration limit reached", extra={"extra": details})
    else:
        logger.debug("BA solve finished", extra={"extra": details})
    return state


# ============= Public operations =============

def ba_fixed_slope(
    p: SourceDistribution,
    d: DistortionMeasure,
    lam: float,
    cfg: Optional[SolverConfig] = None,
    initial_marginal: Optional[Sequence[float]] = None,
) -> RDPoint:
    """
    Parametric point minimizing I(X;Y) + lam * E[d(X,Y)].

    lam = 0 returns the rate-zero corner on the d_max column; lam = inf
    restricts every row to its minimum-distortion columns.

    Args:
        p: Source distribution
        d: Distortion measure
        lam: Slope, nonnegative
        cfg: Solver configuration (defaults when omitted)
        initial_marginal: Strictly positive starting output marginal

    Raises:
        InvalidParameterError: negative or NaN slope, bad initial marginal
    """
    cfg = cfg or SolverConfig()
    if math.isnan(lam) or lam < 0:
        raise InvalidParameterError(f"slope must be nonnegative, got {lam}")
    problem = _Problem(p, d)
    if lam == 0:
        return problem.to_point(problem.corner_state())

    q0 = problem.uniform
    if initial_marginal is not None:
        q0 = np.asarray(initial_marginal, dtype=float)
        if q0.shape != (problem.repro_size,) or np.any(q0 <= 0):
            raise InvalidParameterError("initial marginal must be strictly positive with one entry per column")
        q0 = q0 / q0.sum()
    return problem.to_point(_run(problem, lam, q0, cfg))


def solve_rd(
    p: SourceDistribution,
    d: DistortionMeasure,
    D: float,
    cfg: Optional[SolverConfig] = None,
) -> RDPoint:
    """
    R(D) and an optimizing channel at target distortion D.

    Raises:
        InvalidParameterError: D negative or not finite
        InfeasibleDistortionError: D below the smallest achievable distortion
        BracketError: no slope up to the cap reaches D
    """
    cfg = cfg or SolverConfig()
    if not math.isfinite(D) or D < 0:
        raise InvalidParameterError(f"target distortion must be finite and >= 0, got {D}")
    problem = _Problem(p, d)
    with MetricsTimer(get_metrics(), "solve_rd_seconds"):
        return problem.to_point(_solve_target(problem, D, cfg))


def _solve_target(problem: _Problem, D: float, cfg: SolverConfig) -> _State:
    if D >= problem.dmax - CORNER_TOLERANCE:
        return problem.corner_state()
    if D < problem.dmin - CORNER_TOLERANCE:
        raise InfeasibleDistortionError(
            f"target {D} is below the smallest achievable distortion {problem.dmin}"
        )
    tolerance = _distortion_tolerance(cfg)
    if D <= problem.dmin + tolerance:
        return _run(problem, math.inf, problem.uniform, cfg)

    metrics = get_metrics()
    low, high = cfg.lambda_bracket
    lo = problem.corner_state() if low == 0 else _run(problem, low, problem.uniform, cfg)
    if abs(lo.distortion - D) <= tolerance:
        return lo
    if lo.distortion < D:
        raise BracketError(
            f"lambda={low} already gives distortion {lo.distortion} < {D}",
            achieved_range=(lo.distortion, lo.distortion),
        )

    hi = _run(problem, high, problem.warm_start(lo.q), cfg)
    while hi.distortion > D + tolerance:
        if high >= cfg.lambda_cap:
            raise BracketError(
                f"distortion {D} not reached for lambda up to {cfg.lambda_cap}; "
                f"achieved range [{hi.distortion}, {lo.distortion}]",
                achieved_range=(hi.distortion, lo.distortion),
            )
        lo = hi
        high = min(2.0 * high, cfg.lambda_cap)
        logger.info("expanding lambda bracket", extra={"extra": {"lambda_max": high, "target": D}})
        hi = _run(problem, high, problem.warm_start(lo.q), cfg)
    if abs(hi.distortion - D) <= tolerance:
        return hi

    # invariant: lo.distortion > D > hi.distortion
    step_cfg = cfg.model_copy(update={"max_iterations": min(cfg.max_iterations, BISECTION_ITERATIONS)})
    for _ in range(MAX_BISECTION_STEPS):
        if hi.lam - lo.lam <= LAMBDA_RESOLUTION * max(1.0, hi.lam):
            break
        if _is_jump(problem, lo, hi):
            logger.info(
                "distortion jumps across the target",
                extra={"extra": {"lambda_low": lo.lam, "lambda_high": hi.lam, "target": D}},
            )
            break
        mid = 0.5 * (lo.lam + hi.lam)
        nearest = lo if lo.distortion - D <= D - hi.distortion else hi
        step = _run(problem, mid, problem.warm_start(nearest.q), step_cfg, budgeted=True)
        metrics.increment_counter("bisection_steps_total")
        if step.converged and abs(step.distortion - D) <= tolerance:
            return step
        if step.distortion > D:
            lo = step
        else:
            hi = step
    polished_lo, polished_hi = _polish(problem, lo, step_cfg), _polish(problem, hi, step_cfg)
    if polished_lo.distortion > D:
        lo = polished_lo
    if polished_hi.distortion < D:
        hi = polished_hi
    return _timeshare(problem, lo, hi, D)


def _is_jump(problem: _Problem, lo: _State, hi: _State) -> bool:
    narrow = hi.lam - lo.lam <= JUMP_RESOLUTION * max(1.0, hi.lam)
    return narrow and lo.distortion - hi.distortion > JUMP_SPREAD * problem.dmax


def _polish(problem: _Problem, end: _State, cfg: SolverConfig) -> _State:
    """One more iteration budget for a bracket end, resumed from its own marginal."""
    if end.converged or end.lam == 0.0:
        return end
    resumed = _run(problem, end.lam, end.q, cfg, budgeted=True)
    resumed.iterations += end.iterations
    return resumed


def _timeshare(problem: _Problem, lo: _State, hi: _State, D: float) -> _State:
    """
    Convex combination of the bracket-end channels meeting D exactly.

    Reached when D(lambda) jumps across the target, i.e. R(D) has a linear
    segment there and both ends are optimal at the common slope.

    The mixture's rate exceeds R(D) by at most the larger end gap plus the
    slope width times the distortion spread. That excess is reported as the
    gap; the point counts as converged when it is below
    TIMESHARE_RATE_TOLERANCE.
    """
    weight = (D - hi.distortion) / (lo.distortion - hi.distortion)
    channel = weight * lo.channel + (1.0 - weight) * hi.channel
    excess = max(lo.gap, hi.gap, 0.0) + (hi.lam - lo.lam) * (lo.distortion - hi.distortion)
    get_metrics().increment_counter("timeshare_fallbacks_total")
    logger.info(
        "time-sharing bracket ends",
        extra={
            "extra": {
                "lambda_low": lo.lam,
                "lambda_high": hi.lam,
                "weight": weight,
                "target": D,
                "rate_excess_bound": excess,
            }
        },
    )
    return _State(
        lam=0.5 * (lo.lam + hi.lam),
        channel=channel,
        q=problem.ps @ channel,
        distortion=float(np.sum(problem.ps[:, None] * channel * problem.ds)),
        rate=mutual_information_of(problem.ps, channel),
        iterations=lo.iterations + hi.iterations,
        converged=excess <= TIMESHARE_RATE_TOLERANCE,
        gap=excess,
        timeshared=True,
    )


def sweep(
    p: SourceDistribution,
    d: DistortionMeasure,
    grid: Sequence[float],
    cfg: Optional[SolverConfig] = None,
) -> List[SweepEntry]:
    """
    solve_rd at every grid value, in grid order.

    A failing point is recorded in its SweepEntry and the sweep continues.
    """
    cfg = cfg or SolverConfig()
    grid = [float(D) for D in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("sweep grid must be sorted ascending")

    def solve_one(D: float) -> SweepEntry:
        try:
            return SweepEntry(target=D, point=solve_rd(p, d, D, cfg))
        except RateDistortionError as e:
            get_metrics().increment_counter("sweep_failures_total")
            logger.warning("sweep point failed", extra={"extra": {"target": D, "error": str(e)}})
            return SweepEntry(target=D, error=str(e))

    if cfg.workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(solve_one, grid))
    return [solve_one(D) for D in grid]


# ============= Optimality diagnostics =============

def lagrangian_residuals(
    p: SourceDistribution,
    d: DistortionMeasure,
    point: RDPoint,
    support_threshold: float = 1e-6,
) -> KKTResiduals:
    """
    Dual variables and per-column slack of a solved point.

    mu_k = p(k) / sum_l q(l) exp(-lam d(k,l)) and
    slack(l) = 1 - sum_k mu_k exp(-lam d(k,l)). At an optimum every slack is
    nonnegative and vanishes on the support of the output marginal.
    """
    problem = _Problem(p, d)
    lam = point.lam
    q = point.output.as_array()
    if q.shape != (problem.repro_size,):
        raise DimensionMismatchError("point does not belong to this measure")

    kernel = _kernel(problem.d, lam)
    offsets = problem.d.min(axis=1)
    normalizer = kernel @ q
    live = problem.p > 0
    scaled = np.zeros_like(problem.p)
    scaled[live] = problem.p[live] / normalizer[live]
    slack = 1.0 - kernel.T @ scaled

    # mu in log form; lam * offset is taken as 0 when the offset is 0
    shift = np.where(offsets == 0.0, 0.0, lam * offsets)
    log_mu = np.full_like(problem.p, -np.inf)
    log_mu[live] = np.log(problem.p[live]) - np.log(normalizer[live]) + shift[live]
    with np.errstate(over="ignore"):
        mu = np.exp(log_mu)

    on_support = q > support_threshold
    support_residual = float(np.max(np.abs(slack[on_support]))) if np.any(on_support) else 0.0
    max_violation = max(float(np.max(-slack)), 0.0)

    mean_offset = float(problem.p @ offsets)
    dual = -float(np.sum(xlogy(problem.p, normalizer)))
    if not math.isinf(lam):
        dual += lam * (mean_offset - point.distortion)
    return KKTResiduals(
        mu=mu,
        slack=slack,
        max_violation=max_violation,
        support_residual=support_residual,
        dual_bound=dual,
    )


def dual_rate_bound(
    p: SourceDistribution,
    d: DistortionMeasure,
    lam: float,
    mu: Sequence[float],
    D: float,
    tolerance: float = 1e-9,
) -> float:
    """
    Lower bound H(p) + sum_k p(k) ln mu_k - lam * D on R(D).

    Valid for every lam >= 0 and mu feasible in the sense
    sum_k mu_k exp(-lam d(k,l)) <= 1 for all l.

    Raises:
        InfeasibleDualError: some column constraint exceeds 1 + tolerance
    """
    if not math.isfinite(lam) or lam < 0:
        raise InvalidParameterError(f"dual bound needs a finite slope >= 0, got {lam}")
    mu_arr = np.asarray(mu, dtype=float)
    if mu_arr.shape != (p.size,):
        raise DimensionMismatchError(f"expected {p.size} dual values, got {mu_arr.shape}")
    if np.any(mu_arr < 0):
        raise InfeasibleDualError("dual values must be nonnegative")
    load = np.exp(-lam * d.as_array()).T @ mu_arr
    worst = int(np.argmax(load))
    if load[worst] > 1.0 + tolerance:
        raise InfeasibleDualError(
            f"column {worst}: sum_k mu_k exp(-lambda d(k,l)) = {load[worst]!r} > 1"
        )
    probs = p.as_array()
    with np.errstate(divide="ignore"):
        return entropy_of(probs) + float(np.sum(xlogy(probs, mu_arr))) - lam * D


def hamming_rate(D: float, K: int) -> float:
    """Closed-form R(D) in nats for a uniform source under Hamming distortion."""
    if K < 2:
        raise InvalidParameterError(f"K must be >= 2, got {K}")
    if D < 0:
        raise InvalidParameterError(f"D must be >= 0, got {D}")
    if D >= (K - 1) / K:
        return 0.0
    binary = float(-xlogy(D, D) - xlogy(1.0 - D, 1.0 - D))
    return math.log(K) - binary - D * math.log(K - 1)

