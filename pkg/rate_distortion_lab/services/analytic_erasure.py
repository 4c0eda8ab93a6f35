"""
Closed-form first segment of R(D) for the generalized erasure measure.

Below the onset distortion the erasure letters are unused and the curve is
the K-ary Hamming one, with slope lambda(D) = ln(K-1) + ln((1-D)/D). At the
onset the slope freezes at lambda*, the positive root of

    f(lambda) = 1 + (K-1) e^{-lambda} - K e^{-d lambda},

and from there up to D = d the curve is linear: mass s = (D - h) / (d - h)
moves into the cheaper erasure letter, h being the onset distortion. All
dual values stay equal to mu0 = 1 / (1 + (K-1) e^{-lambda}) and the channel
is rebuilt from P_Y(l) mu0 e^{-lambda d(k,l)} / P_X(k).
"""
from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.optimize import brentq

from rate_distortion_lab.domain.errors import (
    BracketError,
    InvalidParameterError,
    RegimeViolationError,
    SolverInvariantError,
)
from rate_distortion_lab.domain.models.erasure import (
    ErasureProblem,
    ErasureSolution,
    LambdaStar,
    MonotonicityReport,
    Segment,
)
from rate_distortion_lab.domain.models.distortion import DistortionMeasure
from rate_distortion_lab.domain.models.probability import OutputMarginal, SourceDistribution, TestChannel
from rate_distortion_lab.domain.models.solver import RDPoint, SolverConfig, SolverTag
from rate_distortion_lab.monitoring.logger import get_logger
from rate_distortion_lab.services import ba_solver
from rate_distortion_lab.services.distortion import generalized_erasure
from rate_distortion_lab.services.prob_core import entropy_of, mutual_information_of

logger = get_logger("analytic_erasure")

VALIDITY_TOLERANCE = 1e-12
ROW_SUM_TOLERANCE = 1e-10
MONOTONE_SLACK = 1e-9
RATE_CROSS_CHECK_TOLERANCE = 1e-8


# ============= Scalar building blocks =============

def hamming_segment_lambda(D: float, K: int) -> float:
    if not 0.0 < D < 1.0:
        raise InvalidParameterError(f"Hamming slope needs D in (0, 1), got {D}")
    return math.log(K - 1) + math.log((1.0 - D) / D)


def mu0(lam: float, K: int) -> float:
    if lam < 0:
        raise InvalidParameterError(f"slope must be nonnegative, got {lam}")
    return 1.0 / (1.0 + (K - 1) * math.exp(-lam))


def f_lambda(lam: float, d1: float, K: int) -> float:
    return 1.0 + (K - 1) * math.exp(-lam) - K * math.exp(-d1 * lam)


def lambda_star(d1: float, K: int) -> LambdaStar:
    """
    Positive root of f_lambda.

    f vanishes at 0, falls to its minimum at
    lambda_min = ln((K-1) / (K d1)) / (1 - d1) and then rises towards 1, so
    [lambda_min, ln(K) / d1] brackets exactly one sign change. The zero of f''
    (ln((K-1) / (K d1^2)) / (1 - d1)) lies past the minimum but may also lie
    past the root, so it is only reported.

    Raises:
        InvalidParameterError: unless K >= 2 and 0 < d1 < (K-1)/K
        BracketError: the bracket shows no sign change
    """
    if K < 2:
        raise InvalidParameterError(f"K must be >= 2, got {K}")
    if not 0.0 < d1 < (K - 1) / K:
        raise InvalidParameterError(f"lambda* needs 0 < d1 < (K-1)/K = {(K - 1) / K}, got {d1}")

    low = math.log((K - 1) / (K * d1)) / (1.0 - d1)
    high = math.log(K) / d1
    f_low, f_high = f_lambda(low, d1, K), f_lambda(high, d1, K)
    if not (f_low < 0.0 < f_high):
        raise BracketError(
            f"no sign change of f on [{low}, {high}]: f = ({f_low}, {f_high})",
            achieved_range=(f_low, f_high),
        )
    root = brentq(f_lambda, low, high, args=(d1, K), xtol=1e-15, maxiter=200)
    return LambdaStar(
        value=root,
        bracket=(low, high),
        inflection_point=math.log((K - 1) / (K * d1 * d1)) / (1.0 - d1),
        residual=f_lambda(root, d1, K),
    )


def onset_distortion(lam: float, K: int) -> float:
    """Distortion of the Hamming-segment point with slope lam."""
    return (K - 1) * math.exp(-lam) * mu0(lam, K)


def erasure_onset_dmin(d1: float, K: int, c: float) -> float:
    """Smallest D whose erasure mass reaches c; the mass is linear in D."""
    if not 0.0 <= c <= 1.0:
        raise InvalidParameterError(f"erasure mass {c} is not reachable before D = d1")
    onset = onset_distortion(lambda_star(d1, K).value, K)
    return onset + c * (d1 - onset)


# ============= Segment solutions =============

def _letter_masses(p: np.ndarray, lam: float, d1: float, erasure_mass: float) -> np.ndarray:
    K = len(p)
    e = math.exp(-lam)
    e1 = math.exp(-lam * d1)
    return (p * (1.0 + (K - 1) * e) - e - (e1 - e) * erasure_mass) / (1.0 - e)


def _identity_solution(prob: ErasureProblem) -> ErasureSolution:
    K = prob.K
    p = prob.p_x.as_array()
    channel = np.zeros((K, K + 2))
    channel[:, :K] = np.eye(K)
    return ErasureSolution(
        lam=math.inf,
        mu0=1.0,
        p_y=OutputMarginal(probs=tuple(p) + (0.0, 0.0)),
        p_y_erasure=0.0,
        channel=TestChannel.from_array(channel),
        D=0.0,
        rate_nats=entropy_of(p),
        segment=Segment.HAMMING_SEGMENT,
        active_symbol=prob.active_symbol,
    )


def _solve(prob: ErasureProblem, mix: Optional[float]) -> ErasureSolution:
    K, D = prob.K, prob.D
    d_active = prob.active_distortion
    if d_active <= 0.0:
        raise InvalidParameterError("a zero-cost erasure letter makes R(D) identically zero")
    if D == 0.0:
        return _identity_solution(prob)

    star = lambda_star(d_active, K).value
    onset = onset_distortion(star, K)
    if onset >= d_active:
        raise RegimeViolationError(
            f"onset distortion {onset} is not below the erasure cost {d_active}", value=onset
        )
    if D > d_active + VALIDITY_TOLERANCE:
        raise RegimeViolationError(
            f"D = {D} is past the end of the first segment (d = {d_active})",
            letter=prob.active_symbol,
            value=(D - onset) / (d_active - onset),
        )

    if D <= onset:
        lam, erasure_mass, segment = hamming_segment_lambda(D, K), 0.0, Segment.HAMMING_SEGMENT
    else:
        lam = star
        erasure_mass = min((D - onset) / (d_active - onset), 1.0)
        segment = Segment.ERASURE_ACTIVE if mix is None else Segment.DEGENERATE_FAMILY

    p = prob.p_x.as_array()
    letters = _letter_masses(p, lam, d_active, erasure_mass)
    worst = int(np.argmin(letters))
    if letters[worst] < -VALIDITY_TOLERANCE:
        raise RegimeViolationError(
            f"P_Y({worst}) = {letters[worst]} < 0: D = {D} is outside the closed-form region",
            letter=worst,
            value=float(letters[worst]),
        )
    letters = np.clip(letters, 0.0, None)

    if mix is None:
        share_k = 1.0 if prob.active_symbol == K else 0.0
    else:
        share_k = mix
    p_y = np.concatenate([letters, [share_k * erasure_mass, (1.0 - share_k) * erasure_mass]])

    dual = mu0(lam, K)
    kernel = np.exp(-lam * generalized_erasure(K, prob.d1, prob.d2).as_array())
    channel = p_y[None, :] * dual * kernel / p[:, None]
    row_error = float(np.max(np.abs(channel.sum(axis=1) - 1.0)))
    if row_error > ROW_SUM_TOLERANCE:
        raise SolverInvariantError(f"reconstructed channel rows off by {row_error:.3e}")
    channel /= channel.sum(axis=1, keepdims=True)

    return ErasureSolution(
        lam=lam,
        mu0=dual,
        p_y=OutputMarginal(probs=tuple(float(v) for v in p_y / p_y.sum())),
        p_y_erasure=erasure_mass,
        channel=TestChannel.from_array(channel),
        D=D,
        rate_nats=mutual_information_of(p, channel),
        segment=segment,
        active_symbol=prob.active_symbol,
        mix=mix,
    )


def solve_erasure_segment(prob: ErasureProblem) -> ErasureSolution:
    """
    Closed-form optimizer at prob.D with all erasure mass on the cheaper letter.

    Raises:
        RegimeViolationError: D beyond the cheaper erasure cost, or some letter
            mass P_Y(k) would be negative
    """
    return _solve(prob, mix=None)


def solve_degenerate_family(prob: ErasureProblem, mix: float) -> ErasureSolution:
    """
    Member `mix` of the optimizer family when both erasure letters cost the same.

    The erasure mass s is split as (mix * s, (1 - mix) * s) between letters K
    and K+1. Every member has the same distortion and rate.
    """
    if not prob.is_degenerate:
        raise InvalidParameterError(f"family needs d1 == d2, got ({prob.d1}, {prob.d2})")
    if not 0.0 <= mix <= 1.0:
        raise InvalidParameterError(f"mix must lie in [0, 1], got {mix}")
    return _solve(prob, mix=mix)


def erasure_rate(prob: ErasureProblem) -> float:
    """Rate of the closed-form solution, cross-checked against H(p) + ln mu0 - lambda D."""
    solution = solve_erasure_segment(prob)
    if math.isfinite(solution.lam):
        dual = entropy_of(prob.p_x.as_array()) + math.log(solution.mu0) - solution.lam * prob.D
        if abs(dual - solution.rate_nats) > RATE_CROSS_CHECK_TOLERANCE:
            raise SolverInvariantError(
                f"closed-form rate {solution.rate_nats!r} disagrees with dual value {dual!r}"
            )
    return solution.rate_nats


def erasure_segment_end(prob: ErasureProblem) -> float:
    """
    Largest D for which every letter mass P_Y(k) stays nonnegative.

    This is d itself unless a small source letter runs out first.
    """
    K = prob.K
    d_active = prob.active_distortion
    star = lambda_star(d_active, K).value
    onset = onset_distortion(star, K)
    e, e1 = math.exp(-star), math.exp(-star * d_active)
    p = prob.p_x.as_array()
    limits = (p * (1.0 + (K - 1) * e) - e) / (e1 - e)
    end_mass = min(1.0, float(np.min(limits)))
    return onset + end_mass * (d_active - onset)


# ============= Diagnostics =============

def monotonicity_check(
    prob: ErasureProblem,
    D_grid: Sequence[float],
    solver: str = "analytic",
    cfg: Optional[SolverConfig] = None,
) -> MonotonicityReport:
    """
    Check that the erasure mass is non-decreasing along an ascending grid.

    solver="analytic" reads it from the closed form, solver="ba" from the
    output marginal of Blahut-Arimoto solves of the same problems.
    """
    grid = [float(D) for D in D_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("grid must be ascending")
    if solver not in ("analytic", "ba"):
        raise InvalidParameterError(f"unknown solver {solver!r}")

    K = prob.K
    measure = generalized_erasure(K, prob.d1, prob.d2)
    masses = []
    for D in grid:
        if solver == "analytic":
            masses.append(solve_erasure_segment(prob.at(D)).p_y_erasure)
        else:
            point = ba_solver.solve_rd(prob.p_x, measure, D, cfg)
            masses.append(point.output.probs[K] + point.output.probs[K + 1])

    for index in range(1, len(masses)):
        if masses[index] < masses[index - 1] - MONOTONE_SLACK:
            message = (
                f"erasure mass drops from {masses[index - 1]:.12g} at D={grid[index - 1]:.12g} "
                f"to {masses[index]:.12g} at D={grid[index]:.12g}"
            )
            logger.warning("erasure mass not monotone", extra={"extra": {"solver": solver, "index": index}})
            return MonotonicityReport(
                ok=False, grid=grid, masses=masses, first_violation=index, messages=[message]
            )
    return MonotonicityReport(ok=True, grid=grid, masses=masses)


# ============= Interop with the numerical solver =============

def match_erasure_measure(d: DistortionMeasure) -> Optional[Tuple[int, float, float]]:
    """(K, d1, d2) when d has the generalized erasure layout, else None."""
    K = d.source_size
    if d.repro_size != K + 2:
        return None
    matrix = d.as_array()
    if not np.array_equal(matrix[:, :K], 1.0 - np.eye(K)):
        return None
    first, second = matrix[:, K], matrix[:, K + 1]
    if np.any(first != first[0]) or np.any(second != second[0]):
        return None
    return K, float(first[0]), float(second[0])


def to_rd_point(solution: ErasureSolution, p: SourceDistribution, tag: SolverTag = "analytic") -> RDPoint:
    return RDPoint(
        distortion=solution.D,
        rate_nats=solution.rate_nats,
        lam=solution.lam,
        channel=solution.channel,
        output=solution.p_y,
        source=p,
        solver_tag=tag,
    )


def analytic_point(p: SourceDistribution, d: DistortionMeasure, D: float) -> Optional[RDPoint]:
    """
    Closed-form point when (p, d, D) lies in the erasure-active part of the
    first segment; None whenever the numerical solver has to be used.
    """
    layout = match_erasure_measure(d)
    if layout is None:
        return None
    K, d1, d2 = layout
    try:
        prob = ErasureProblem(K=K, d1=d1, d2=d2, p_x=p, D=D)
        solution = solve_erasure_segment(prob)
    except (ValidationError, RegimeViolationError, InvalidParameterError):
        return None
    if solution.segment == Segment.HAMMING_SEGMENT:
        return None
    return to_rd_point(solution, p)
