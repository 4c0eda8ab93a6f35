"""
Finite-alphabet information measures.

All quantities are in nats. Zero-mass terms follow 0 * ln 0 = 0 through
scipy.special.entr / xlogy, so boundary channels (point masses, identity
codes) evaluate without special cases.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import entr, xlogy

from rate_distortion_lab.domain.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    SolverInvariantError,
)
from rate_distortion_lab.domain.models.distortion import DistortionMeasure
from rate_distortion_lab.domain.models.probability import (
    InfoValue,
    OutputMarginal,
    SourceDistribution,
    TestChannel,
)

MI_AGREEMENT_TOLERANCE = 1e-10
MAJORIZATION_TOLERANCE = 1e-12


# ============= Array kernels (shared with the solvers) =============

def entropy_of(p: np.ndarray) -> float:
    return float(np.sum(entr(p)))


def mutual_information_of(p: np.ndarray, channel: np.ndarray) -> float:
    """I(X;Y) in KL form, sum p(k) W(l|k) ln(W(l|k) / q(l))."""
    joint = p[:, None] * channel
    q = joint.sum(axis=0)
    ratio = np.divide(channel, q[None, :], out=np.ones_like(channel), where=joint > 0)
    return max(float(np.sum(xlogy(joint, ratio))), 0.0)


def _conditional_entropy_of(p: np.ndarray, channel: np.ndarray) -> float:
    joint = p[:, None] * channel
    return max(float(np.sum(entr(joint)) - np.sum(entr(joint.sum(axis=0)))), 0.0)


def _check_channel(p: SourceDistribution, ch: TestChannel) -> None:
    if p.size != ch.source_size:
        raise DimensionMismatchError(
            f"source has {p.size} letters but channel has {ch.source_size} rows"
        )


def _info(nats: float) -> InfoValue:
    return InfoValue(nats=max(nats, 0.0))


# ============= Information measures =============

def entropy(p: SourceDistribution) -> InfoValue:
    """H(X) = -sum p ln p."""
    return _info(entropy_of(p.as_array()))


def binary_entropy(x: float) -> InfoValue:
    if not 0.0 <= x <= 1.0:
        raise InvalidParameterError(f"binary entropy needs x in [0, 1], got {x}")
    return _info(float(entr(x) + entr(1.0 - x)))


def conditional_entropy(ch: TestChannel, p: SourceDistribution) -> InfoValue:
    """H(X|Y) from the joint p(k) ch(l|k)."""
    _check_channel(p, ch)
    return _info(_conditional_entropy_of(p.as_array(), ch.as_array()))


def mutual_information(p: SourceDistribution, ch: TestChannel) -> InfoValue:
    """
    I(X;Y), evaluated both as H(X) - H(X|Y) and in KL form.

    Raises:
        DimensionMismatchError: channel rows do not match the source.
        SolverInvariantError: the two evaluations disagree beyond 1e-10.
    """
    _check_channel(p, ch)
    probs, channel = p.as_array(), ch.as_array()
    by_entropy = entropy_of(probs) - _conditional_entropy_of(probs, channel)
    by_divergence = mutual_information_of(probs, channel)
    if abs(by_entropy - by_divergence) > MI_AGREEMENT_TOLERANCE:
        raise SolverInvariantError(
            f"mutual information mismatch: {by_entropy!r} vs {by_divergence!r}"
        )
    return _info(by_divergence)


def kl_divergence(p: SourceDistribution | OutputMarginal, q: SourceDistribution | OutputMarginal) -> float:
    """D(p || q) in nats; +inf when p puts mass where q has none."""
    if p.size != q.size:
        raise DimensionMismatchError(f"lengths differ: {p.size} vs {q.size}")
    a, b = p.as_array(), q.as_array()
    if np.any((a > 0) & (b == 0)):
        return math.inf
    ratio = np.divide(a, b, out=np.ones_like(a), where=a > 0)
    return max(float(np.sum(xlogy(a, ratio))), 0.0)


def nats_to_bits(value: float) -> float:
    return value / math.log(2.0)


# ============= Channels and distances =============

def output_marginal(p: SourceDistribution, ch: TestChannel) -> OutputMarginal:
    _check_channel(p, ch)
    return OutputMarginal(probs=tuple(p.as_array() @ ch.as_array()))


def tv_conditional(a: TestChannel, b: TestChannel, halved: bool = False) -> float:
    """
    Conditional total variation max_k sum_l |a(l|k) - b(l|k)|.

    With halved=True the value is scaled by 1/2, so that two different
    point-mass channels are at distance 1 instead of 2.
    """
    left, right = a.as_array(), b.as_array()
    if left.shape != right.shape:
        raise DimensionMismatchError(f"channel shapes differ: {left.shape} vs {right.shape}")
    value = float(np.max(np.sum(np.abs(left - right), axis=1)))
    return 0.5 * value if halved else value


def expected_distortion(p: SourceDistribution, ch: TestChannel, d: DistortionMeasure) -> float:
    _check_channel(p, ch)
    if (ch.source_size, ch.repro_size) != (d.source_size, d.repro_size):
        raise DimensionMismatchError(
            f"channel is {ch.source_size}x{ch.repro_size} but measure is "
            f"{d.source_size}x{d.repro_size}"
        )
    return float(np.sum(p.as_array()[:, None] * ch.as_array() * d.as_array()))


# ============= Majorization =============

def majorizes(p: SourceDistribution, q: SourceDistribution) -> bool:
    """True iff q is majorized by p (q is "more uniform" than p)."""
    if p.size != q.size:
        raise DimensionMismatchError(f"lengths differ: {p.size} vs {q.size}")
    prefix_p = np.cumsum(np.sort(p.as_array())[::-1])
    prefix_q = np.cumsum(np.sort(q.as_array())[::-1])
    if abs(prefix_p[-1] - prefix_q[-1]) > MAJORIZATION_TOLERANCE:
        return False
    return bool(np.all(prefix_q <= prefix_p + MAJORIZATION_TOLERANCE))


def robin_hood_transfer(p: SourceDistribution, i: int, j: int, amount: float) -> SourceDistribution:
    """
    Move `amount` from letter i to letter j, where p(i) >= p(j).

    The amount is capped so the two entries do not swap order, hence the
    result is majorized by p.
    """
    probs = list(p.probs)
    if not (0 <= i < p.size and 0 <= j < p.size) or i == j:
        raise InvalidParameterError(f"invalid transfer letters ({i}, {j})")
    if probs[i] < probs[j]:
        raise InvalidParameterError(f"transfer must go from the larger entry: p({i}) < p({j})")
    if amount < 0 or amount > (probs[i] - probs[j]) / 2:
        raise InvalidParameterError(
            f"amount {amount} outside [0, {(probs[i] - probs[j]) / 2}]"
        )
    probs[i] -= amount
    probs[j] += amount
    return SourceDistribution(probs=tuple(probs))
