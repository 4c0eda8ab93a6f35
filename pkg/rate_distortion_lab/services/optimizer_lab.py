"""
Optimizer-sensitivity constructions.

Each branch test builds two problems that differ by a dyadic perturbation
x = 2^{-i}, read off a finite enumeration table, and solves both. The
optimal values move continuously with x, yet as soon as x > 0 the two
optimizers jump to different extreme points of the unperturbed optimizer
set. Thresholding the distance to the unperturbed optimizer therefore
decides whether n appears in the table by step m, which is the reduction
run by `run_reduction`.

Constructions are done in exact rational arithmetic (fractions.Fraction);
only the solves use floats.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from rate_distortion_lab.domain.errors import (
    InfeasibleConstructionError,
    InvalidParameterError,
    RegimeViolationError,
    SolverInvariantError,
    TrivialMeasureError,
)
from rate_distortion_lab.domain.models.distortion import DistortionMeasure
from rate_distortion_lab.domain.models.erasure import ErasureProblem
from rate_distortion_lab.domain.models.lab import (
    BranchPair,
    BranchProblem,
    DemoName,
    DemoParams,
    EnumerationTable,
    ReductionReport,
    ReductionRow,
    Verdict,
)
from rate_distortion_lab.domain.models.probability import OutputMarginal, SourceDistribution, TestChannel
from rate_distortion_lab.domain.models.solver import RDPoint, SolverConfig
from rate_distortion_lab.monitoring.logger import get_logger
from rate_distortion_lab.services import analytic_erasure, ba_solver
from rate_distortion_lab.services.distortion import (
    d_max,
    generalized_erasure,
    hamming,
    is_normal,
    r_trivial_columns,
)
from rate_distortion_lab.services.prob_core import tv_conditional

logger = get_logger("optimizer_lab")

Rational = Union[Fraction, int]

DOMINANCE_MARGIN = Fraction(1, 10**6)
MAX_SCALE_HALVINGS = 40
MAX_CUTOFF = 1074
DENOMINATOR_LIMIT = 10**12


# ============= Dyadic perturbations =============

def x_value(table: EnumerationTable, n: int, m: int, min_index: int = 1) -> Fraction:
    """2^{-i} for the first step i in [min_index, m] at which the table outputs n, else 0."""
    for i in table.indices_for(n):
        if min_index <= i <= m:
            return Fraction(1, 2**i)
    return Fraction(0)


def cutoff_index(budget: Fraction) -> int:
    """Smallest m~ >= 1 with 2^{-m~} < budget."""
    if budget <= 0:
        raise InvalidParameterError(f"perturbation budget must be positive, got {budget}")
    index = 1
    while Fraction(1, 2**index) >= budget:
        index += 1
        if index > MAX_CUTOFF:
            raise InvalidParameterError(f"perturbation budget {float(budget)} is too small")
    return index


def source_convergence_bound(table: EnumerationTable, n: int, m: int, m_other: int) -> Tuple[Fraction, Fraction]:
    """
    l1 distance between the perturbed sources at steps m and m_other, and its bound.

    Moving x from one letter to another changes the source by 2x in l1, so
    the distance is 2 |x_m - x_m'| <= 2 * 2^{-min(m, m')}.
    """
    distance = 2 * abs(x_value(table, n, m) - x_value(table, n, m_other))
    return distance, Fraction(2, 2 ** min(m, m_other))


def perturbed_measures(
    K: int, d: float, table: EnumerationTable, n: int, m: int
) -> Tuple[DistortionMeasure, DistortionMeasure]:
    """Erasure measures with the extra cost x on letter K+1, respectively on letter K."""
    if d <= 0:
        raise InvalidParameterError(f"base erasure distortion must be positive, got {d}")
    x = float(x_value(table, n, m))
    return generalized_erasure(K, d, d + x), generalized_erasure(K, d + x, d)


# ============= Shared helpers =============

def _to_fraction(value: float) -> Fraction:
    return Fraction(value).limit_denominator(DENOMINATOR_LIMIT)


def _source(masses: Sequence[Rational]) -> SourceDistribution:
    return SourceDistribution(probs=tuple(float(v) for v in masses))


def _column_averages(masses: Sequence[Rational], d: DistortionMeasure) -> List[Fraction]:
    rows = [[_to_fraction(v) for v in row] for row in d.entries]
    return [
        sum((Fraction(masses[k]) * rows[k][l] for k in range(len(rows))), Fraction(0))
        for l in range(d.repro_size)
    ]


def _point_mass(source_size: int, repro_size: int, column: int) -> TestChannel:
    return TestChannel.point_mass(source_size, repro_size, column)


def _exact_corner(masses: Sequence[Rational], d: DistortionMeasure) -> RDPoint:
    """
    Rate-zero optimizer at D_max on the column with the smallest exact average.

    The perturbation x can be far below float resolution, so the column is
    chosen on the rational averages rather than by a float solve.

    Raises:
        SolverInvariantError: two columns tie exactly
    """
    averages = _column_averages(masses, d)
    best = min(averages)
    columns = [l for l, value in enumerate(averages) if value == best]
    if len(columns) > 1:
        raise SolverInvariantError(f"columns {columns} tie exactly for D_max")
    column = columns[0]
    return RDPoint(
        distortion=float(best),
        rate_nats=0.0,
        lam=0.0,
        channel=_point_mass(d.source_size, d.repro_size, column),
        output=OutputMarginal(probs=tuple(1.0 if l == column else 0.0 for l in range(d.repro_size))),
        source=_source(masses),
        solver_tag="analytic",
    )


def _assemble(
    problem_1: BranchProblem,
    problem_2: BranchProblem,
    branch_1: RDPoint,
    branch_2: RDPoint,
    reference: TestChannel,
    threshold: Fraction,
    x: Fraction,
    halved: bool,
    family_endpoints: Optional[Tuple[TestChannel, TestChannel]] = None,
) -> BranchPair:
    tv_branch = tv_conditional(branch_1.channel, branch_2.channel, halved=halved)
    statistic = max(
        tv_conditional(branch_1.channel, reference, halved=halved),
        tv_conditional(reference, branch_2.channel, halved=halved),
    )
    verdict = Verdict.SEPARATED if statistic > float(threshold) else Verdict.MERGED
    logger.debug(
        "branch pair evaluated",
        extra={"extra": {"x": float(x), "tv_branch": tv_branch, "statistic": statistic, "verdict": verdict.value}},
    )
    return BranchPair(
        problem_1=problem_1,
        problem_2=problem_2,
        branch_1=branch_1,
        branch_2=branch_2,
        reference=reference,
        tv_branch=tv_branch,
        statistic=statistic,
        threshold=float(threshold),
        verdict=verdict,
        x_value=float(x),
        tv_form="halved" if halved else "unhalved",
        solver_1=branch_1.solver_tag,
        solver_2=branch_2.solver_tag,
        family_endpoints=family_endpoints,
    )


# ============= Erasure construction =============

def _solve_erasure_branch(prob: ErasureProblem, cfg: Optional[SolverConfig]) -> RDPoint:
    """Closed form where it is valid, Blahut-Arimoto otherwise."""
    try:
        return analytic_erasure.to_rd_point(analytic_erasure.solve_erasure_segment(prob), prob.p_x, "analytic")
    except RegimeViolationError as e:
        logger.info("closed form not valid, falling back to BA", extra={"extra": {"reason": str(e)}})
        measure = generalized_erasure(prob.K, prob.d1, prob.d2)
        return ba_solver.solve_rd(prob.p_x, measure, prob.D, cfg)


def erasure_branch_test(
    K: int,
    d: float,
    table: EnumerationTable,
    n: int,
    m: int,
    D: float,
    c: Union[Fraction, float],
    p_x: Optional[SourceDistribution] = None,
    cfg: Optional[SolverConfig] = None,
) -> BranchPair:
    """
    Erasure-letter branch test with unhalved TV and threshold c.

    Problem 1 charges d + x on letter K+1, problem 2 on letter K. With x > 0
    each optimizer puts its erasure mass (at least c) on a different letter;
    with x = 0 both erasure letters cost d and the optimizer set is the
    family of splits, of which the all-on-K member is taken as the answer.

    Raises:
        InvalidParameterError: c outside (0, 1)
        RegimeViolationError: D outside [onset for c, D_max]
    """
    c = Fraction(c) if isinstance(c, Fraction) else _to_fraction(c)
    if not 0 < c < 1:
        raise InvalidParameterError(f"threshold c must lie in (0, 1), got {c}")
    p_x = p_x or SourceDistribution.uniform(K)
    lower = analytic_erasure.erasure_onset_dmin(d, K, float(c))
    upper, _ = d_max(p_x, generalized_erasure(K, d, d))
    if not lower - 1e-12 <= D <= upper + 1e-12:
        raise RegimeViolationError(f"D = {D} outside [{lower}, {upper}] where the erasure mass exceeds c", value=D)

    x = x_value(table, n, m)
    problem_1 = ErasureProblem(K=K, d1=d, d2=d + float(x), p_x=p_x, D=D)
    problem_2 = ErasureProblem(K=K, d1=d + float(x), d2=d, p_x=p_x, D=D)
    unperturbed = ErasureProblem(K=K, d1=d, d2=d, p_x=p_x, D=D)

    family_top = analytic_erasure.solve_degenerate_family(unperturbed, mix=1.0)
    reference = family_top.channel
    endpoints = None
    if x == 0:
        family_bottom = analytic_erasure.solve_degenerate_family(unperturbed, mix=0.0)
        branch_1 = branch_2 = analytic_erasure.to_rd_point(family_top, p_x, "family")
        endpoints = (family_top.channel, family_bottom.channel)
    else:
        branch_1 = _solve_erasure_branch(problem_1, cfg)
        branch_2 = _solve_erasure_branch(problem_2, cfg)

    return _assemble(
        BranchProblem(source=p_x, measure=generalized_erasure(K, problem_1.d1, problem_1.d2), D=D),
        BranchProblem(source=p_x, measure=generalized_erasure(K, problem_2.d1, problem_2.d2), D=D),
        branch_1,
        branch_2,
        reference,
        threshold=c,
        x=x,
        halved=False,
        family_endpoints=endpoints,
    )


# ============= 2x2 constructions =============

def _binary_measure(d01: float, d10: float) -> DistortionMeasure:
    return DistortionMeasure(entries=((0.0, d01), (d10, 0.0)))


def _balanced_fractions(d01: float, d10: float) -> Tuple[Fraction, Fraction]:
    if d01 <= 0 or d10 <= 0:
        raise InvalidParameterError(f"off-diagonal distortions must be positive, got ({d01}, {d10})")
    a, b = _to_fraction(d01), _to_fraction(d10)
    return b / (a + b), a / (a + b)


def binary_balanced_source(d01: float, d10: float) -> SourceDistribution:
    """
    Source making both reproduction letters equally good at rate zero.

    Both column averages equal d01 d10 / (d01 + d10), which is D_max.
    """
    return _source(_balanced_fractions(d01, d10))


def binary_dmax_branch_test(
    d01: float,
    d10: float,
    table: EnumerationTable,
    n: int,
    k: int,
    cfg: Optional[SolverConfig] = None,
) -> BranchPair:
    """
    Balanced 2x2 source shifted by +-x, both solved at the balanced D_max.

    Halved TV, threshold 1/2. For x > 0 the two optimizers are the
    all-column-0 and all-column-1 channels.
    """
    p0, p1 = _balanced_fractions(d01, d10)
    measure = _binary_measure(d01, d10)
    x = x_value(table, n, k, min_index=cutoff_index(min(p0, p1)))
    D = float(p1 * _to_fraction(d10))

    balanced = _source((p0, p1))
    source_1 = _source((p0 + x, p1 - x))
    source_2 = _source((p0 - x, p1 + x))
    reference = ba_solver.solve_rd(balanced, measure, D, cfg)
    if x == 0:
        branch_1 = branch_2 = reference
    else:
        branch_1 = _exact_corner((p0 + x, p1 - x), measure)
        branch_2 = _exact_corner((p0 - x, p1 + x), measure)

    return _assemble(
        BranchProblem(source=source_1, measure=measure, D=D),
        BranchProblem(source=source_2, measure=measure, D=D),
        branch_1,
        branch_2,
        reference.channel,
        threshold=Fraction(1, 2),
        x=x,
        halved=True,
        family_endpoints=(_point_mass(2, 2, 0), _point_mass(2, 2, 1)) if x == 0 else None,
    )


def binary_zero_support_bound(source: SourceDistribution, d10: float, D: float) -> float:
    """Lower bound 1 - D / (p(1) d10) on P(1|1) of any channel meeting distortion D."""
    p1 = source.probs[1]
    if p1 <= 0 or d10 <= 0:
        raise InvalidParameterError("bound needs p(1) > 0 and d10 > 0")
    return 1.0 - D / (p1 * d10)


def binary_zero_support_branch_test(
    d01: float,
    d10: float,
    table: EnumerationTable,
    n: int,
    k: int,
    L_scale: float,
    cfg: Optional[SolverConfig] = None,
) -> BranchPair:
    """
    Sources (1-x, x) and (1-x/(2L), x/(2L)) at D = x d10 / (2L).

    The first problem must code letter 1 with P(1|1) >= 1 - 1/(2L) >= 1/2,
    the second sits at its D_max and codes everything as column 0. Halved
    TV, threshold 1/4. At x = 0 both sources are (1, 0) and the row of the
    absent letter is free.
    """
    if L_scale < max(1.0, d10 / 2.0):
        raise InvalidParameterError(f"L_scale must be >= max(1, d10/2) = {max(1.0, d10 / 2.0)}, got {L_scale}")
    a, b = _to_fraction(d01), _to_fraction(d10)
    L = _to_fraction(L_scale)
    measure = _binary_measure(d01, d10)
    x = x_value(table, n, k, min_index=cutoff_index(a * b / (a + b)))
    D = float(x * b / (2 * L))

    source_1 = _source((1 - x, x))
    source_2 = _source((1 - x / (2 * L), x / (2 * L)))
    reference = ba_solver.solve_rd(_source((1, 0)), measure, 0.0, cfg)
    if x == 0:
        branch_1 = branch_2 = reference
    else:
        branch_1 = ba_solver.solve_rd(source_1, measure, D, cfg)
        branch_2 = ba_solver.solve_rd(source_2, measure, D, cfg)

    return _assemble(
        BranchProblem(source=source_1, measure=measure, D=D),
        BranchProblem(source=source_2, measure=measure, D=D),
        branch_1,
        branch_2,
        reference.channel,
        threshold=Fraction(1, 4),
        x=x,
        halved=True,
        family_endpoints=(
            TestChannel(rows=((1.0, 0.0), (1.0, 0.0))),
            TestChannel(rows=((1.0, 0.0), (0.0, 1.0))),
        )
        if x == 0
        else None,
    )


# ============= General construction =============

def find_active_pairs(d: DistortionMeasure) -> Tuple[int, int, int, int]:
    """
    Letters k1, k2 and columns l1, l2 with

        d(k1, l1) = 0, d(k1, l2) > 0, d(k2, l2) = 0, d(k2, l1) > 0.

    Starting from row 0 and its first zero column, repeatedly pick the first
    row that pays for the current column and its first zero column. Either
    an earlier row pays for that new column (done), or all rows seen so far
    share it and the chase continues with a new row. Rows never repeat, so
    the chase closes within K steps unless some column is free for every row.

    Raises:
        InvalidParameterError: the measure is not normal
        TrivialMeasureError: a column is zero in every row (R == 0)
    """
    if not is_normal(d):
        raise InvalidParameterError("active pairs are only defined for normal measures")
    trivial = r_trivial_columns(d)
    if trivial:
        raise TrivialMeasureError(f"column {trivial[0]} is zero in every row, so R(D) == 0", column=trivial[0])

    matrix = d.as_array()

    def first_zero(row: int) -> int:
        return int(np.flatnonzero(matrix[row] == 0.0)[0])

    rows = [0]
    column = first_zero(0)
    while True:
        payer = int(np.flatnonzero(matrix[:, column] > 0.0)[0])
        new_column = first_zero(payer)
        for earlier in rows:
            if matrix[earlier, new_column] > 0.0:
                return earlier, payer, column, new_column
        rows.append(payer)
        column = new_column


def _balanced_general(d: DistortionMeasure, seed: SourceDistribution) -> List[Fraction]:
    k1, k2, l1, l2 = find_active_pairs(d)
    K = d.source_size
    if seed.size != K:
        raise InvalidParameterError(f"seed has {seed.size} letters, measure has {K} rows")
    entries = [[_to_fraction(v) for v in row] for row in d.entries]
    d12, d21 = entries[k1][l2], entries[k2][l1]
    others = [k for k in range(K) if k not in (k1, k2)]
    seed_masses = [_to_fraction(v) for v in seed.probs]
    others_total = sum((seed_masses[k] for k in others), Fraction(0))
    if others and others_total >= 1:
        raise InfeasibleConstructionError("seed leaves no mass for the active letters")

    best_margin: Optional[Fraction] = None
    for halving in range(MAX_SCALE_HALVINGS + 1):
        scale = Fraction(1, 2**halving)
        masses = [Fraction(0)] * K
        for k in others:
            masses[k] = scale * seed_masses[k]
        active_total = 1 - scale * others_total
        tilt = sum((masses[k] * (entries[k][l2] - entries[k][l1]) for k in others), Fraction(0))
        masses[k2] = (d12 * active_total + tilt) / (d12 + d21)
        masses[k1] = active_total - masses[k2]
        if masses[k1] <= 0 or masses[k2] <= 0:
            continue
        averages = _column_averages(masses, d)
        if averages[l1] != averages[l2]:
            raise SolverInvariantError("balanced construction lost the exact tie")
        margin = _dominance_margin(averages, l1, l2)
        if margin is None or margin >= DOMINANCE_MARGIN:
            return masses
        best_margin = margin if best_margin is None else max(best_margin, margin)

    raise InfeasibleConstructionError(
        f"no scaling of the seed makes columns {l1}, {l2} strictly best "
        f"(best margin {float(best_margin) if best_margin is not None else 'n/a'})"
    )


def _dominance_margin(averages: Sequence[Fraction], l1: int, l2: int) -> Optional[Fraction]:
    rest = [value for l, value in enumerate(averages) if l not in (l1, l2)]
    if not rest:
        return None
    return min(rest) - averages[l1]


def construct_balanced_exact(d: DistortionMeasure, seed_px: SourceDistribution) -> List[Fraction]:
    """Rational masses of `construct_balanced_general`."""
    return _balanced_general(d, seed_px)


def construct_balanced_general(d: DistortionMeasure, seed_px: SourceDistribution) -> SourceDistribution:
    """
    Full-support source on which columns l1 and l2 of `find_active_pairs` tie
    exactly for the best column average and beat all others by a margin.

    Letters outside {k1, k2} keep the seed's proportions, scaled down by
    powers of 2 until the margin reaches 1e-6; k1 and k2 share the rest so
    that the two averages coincide.

    Raises:
        InfeasibleConstructionError: no scaling establishes the margin
    """
    return _source(_balanced_general(d, seed_px))


@dataclass
class _Directions:
    """Perturbation directions of the two general-construction problems."""

    first: List[Fraction]
    second: List[Fraction]


def _default_directions(K: int, k1: int, k2: int, d12: Fraction, d21: Fraction) -> _Directions:
    # problem 2 moves x * d21 / d12 so both problems share D_max
    first = [Fraction(0)] * K
    second = [Fraction(0)] * K
    first[k1], first[k2] = Fraction(1), Fraction(-1)
    ratio = d21 / d12
    second[k1], second[k2] = -ratio, ratio
    return _Directions(first, second)


def _constant_dmax_directions(
    entries: List[List[Fraction]], k1: int, k2: int, l1: int, l2: int
) -> _Directions:
    """Directions that leave the l1 (resp. l2) column average unchanged."""
    K = len(entries)
    others = [k for k in range(K) if k not in (k1, k2)]
    k3 = next((k for k in others if entries[k][l1] > 0), None)
    k4 = next((k for k in others if entries[k][l2] > 0), None)
    if k3 is None or k4 is None:
        raise InfeasibleConstructionError(
            "constant D_max needs letters outside {k1, k2} paying for l1 and for l2"
        )

    def direction(ka: int, kb: int, kc: int, la: int, lb: int) -> List[Fraction]:
        # mass on kc, compensated on kb so the la average stays put, rest on ka
        ratio = entries[kc][la] / entries[kb][la]
        slope = (ratio - 1) * entries[ka][lb] + entries[kc][lb]
        if slope == 0:
            raise InfeasibleConstructionError(f"letter {kc} cannot separate columns {la} and {lb}")
        sign = 1 if slope > 0 else -1
        vector = [Fraction(0)] * K
        vector[kc] = Fraction(sign)
        vector[kb] = -sign * ratio
        vector[ka] = sign * (ratio - 1)
        return vector

    return _Directions(
        first=direction(k1, k2, k3, l1, l2),
        second=direction(k2, k1, k4, l2, l1),
    )


def _perturbation_budget(
    masses: Sequence[Fraction], directions: _Directions, margin: Optional[Fraction], max_entry: Fraction
) -> Fraction:
    limits = []
    for vector in (directions.first, directions.second):
        limits.extend(masses[k] / -v for k, v in enumerate(vector) if v < 0)
        if margin is not None:
            spread = sum((abs(v) for v in vector), Fraction(0))
            limits.append(margin / (2 * spread * max_entry))
    return min(limits)


def general_branch_test(
    d: DistortionMeasure,
    p_balanced: SourceDistribution,
    table: EnumerationTable,
    n: int,
    m: int,
    constant_dmax: bool = False,
    cfg: Optional[SolverConfig] = None,
) -> BranchPair:
    """
    General-measure branch test at the perturbed D_max, halved TV, threshold 1/2.

    Problem 1 moves x from k2 to k1, problem 2 moves x d(k2,l1)/d(k1,l2)
    from k1 to k2, so that l1 alone is optimal for the first and l2 alone for
    the second while both share D_max = B - x d(k2,l1). With constant_dmax
    the directions also involve letters k3, k4 and keep D_max = B for all x.
    """
    k1, k2, l1, l2 = find_active_pairs(d)
    entries = [[_to_fraction(v) for v in row] for row in d.entries]
    masses = [_to_fraction(v) for v in p_balanced.probs]
    averages = _column_averages(masses, d)
    if averages[l1] != averages[l2]:
        raise InvalidParameterError(f"columns {l1} and {l2} are not tied under the given source")
    margin = _dominance_margin(averages, l1, l2)
    if margin is not None and margin <= 0:
        raise InvalidParameterError(f"columns {l1} and {l2} are not strictly best under the given source")

    if constant_dmax:
        directions = _constant_dmax_directions(entries, k1, k2, l1, l2)
    else:
        directions = _default_directions(d.source_size, k1, k2, entries[k1][l2], entries[k2][l1])
    max_entry = max(max(row) for row in entries)
    budget = _perturbation_budget(masses, directions, margin, max_entry)
    x = x_value(table, n, m, min_index=cutoff_index(budget))

    masses_1 = [p + x * v for p, v in zip(masses, directions.first)]
    masses_2 = [p + x * v for p, v in zip(masses, directions.second)]
    dmax_1, dmax_2 = min(_column_averages(masses_1, d)), min(_column_averages(masses_2, d))
    if dmax_1 != dmax_2:
        raise SolverInvariantError(f"perturbed problems disagree on D_max: {dmax_1} vs {dmax_2}")
    D = float(dmax_1)

    source_1, source_2 = _source(masses_1), _source(masses_2)
    reference = ba_solver.solve_rd(p_balanced, d, float(averages[l1]), cfg)
    if x == 0:
        branch_1 = branch_2 = reference
    else:
        branch_1 = _exact_corner(masses_1, d)
        branch_2 = _exact_corner(masses_2, d)

    K, L = d.source_size, d.repro_size
    return _assemble(
        BranchProblem(source=source_1, measure=d, D=D),
        BranchProblem(source=source_2, measure=d, D=D),
        branch_1,
        branch_2,
        reference.channel,
        threshold=Fraction(1, 2),
        x=x,
        halved=True,
        family_endpoints=(_point_mass(K, L, l1), _point_mass(K, L, l2)) if x == 0 else None,
    )


# ============= Reduction =============

def _branch_test_at(
    demo: DemoName, params: DemoParams, table: EnumerationTable, n: int, m: int, cfg: Optional[SolverConfig]
) -> BranchPair:
    if demo == DemoName.ERASURE:
        return erasure_branch_test(params.K, params.d, table, n, m, params.D, params.c, cfg=cfg)
    if demo == DemoName.BINARY_DMAX:
        return binary_dmax_branch_test(params.d01, params.d10, table, n, m, cfg=cfg)
    if demo == DemoName.BINARY_ZERO:
        return binary_zero_support_branch_test(params.d01, params.d10, table, n, m, params.L_scale, cfg=cfg)
    measure = params.measure or hamming(2)
    seed = params.seed or SourceDistribution.uniform(measure.source_size)
    balanced = construct_balanced_general(measure, seed)
    return general_branch_test(measure, balanced, table, n, m, constant_dmax=params.constant_dmax, cfg=cfg)


def run_reduction(
    demo: Union[DemoName, str],
    params: DemoParams,
    table: EnumerationTable,
    n: int,
    m_max: int,
    cfg: Optional[SolverConfig] = None,
) -> ReductionReport:
    """Run a branch test for m = 1..m_max and report the first separating m."""
    demo = DemoName(demo)
    if m_max < 0:
        raise InvalidParameterError(f"m_max must be >= 0, got {m_max}")
    cfg = cfg or SolverConfig()
    steps = list(range(1, m_max + 1))

    def evaluate(m: int) -> ReductionRow:
        return ReductionRow(m=m, pair=_branch_test_at(demo, params, table, n, m, cfg))

    if cfg.workers > 1 and len(steps) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(evaluate, steps))
    else:
        rows = [evaluate(m) for m in steps]

    first = next((row.m for row in rows if row.pair.separated), None)
    logger.info(
        "reduction finished",
        extra={"extra": {"demo": demo.value, "n": n, "m_max": m_max, "first_separated": first}},
    )
    return ReductionReport(demo=demo, n=n, rows=rows, first_separated=first)
