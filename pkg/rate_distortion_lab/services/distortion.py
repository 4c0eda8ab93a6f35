"""
Distortion-measure construction, normalization and derived scalars.
"""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from rate_distortion_lab.domain.errors import DimensionMismatchError, InvalidParameterError
from rate_distortion_lab.domain.models.distortion import DistortionMeasure, NormalizationResult
from rate_distortion_lab.domain.models.probability import SourceDistribution

DMAX_TIE_TOLERANCE = 1e-12


def _check_source(p: SourceDistribution, d: DistortionMeasure) -> None:
    if p.size != d.source_size:
        raise DimensionMismatchError(
            f"source has {p.size} letters but measure has {d.source_size} rows"
        )


def column_averages(p: np.ndarray, d: np.ndarray) -> np.ndarray:
    """E_X[d(X, l)] for every reproduction letter l."""
    return p @ d


def argmin_column(averages: np.ndarray) -> int:
    """Smallest index whose average is within DMAX_TIE_TOLERANCE of the minimum."""
    best = float(np.min(averages))
    return int(np.flatnonzero(averages <= best + DMAX_TIE_TOLERANCE)[0])


# ============= Predicates and derived scalars =============

def is_normal(d: DistortionMeasure) -> bool:
    """Every source row has a zero-cost reproduction letter."""
    return bool(np.all(np.any(d.as_array() == 0.0, axis=1)))


def normalize(d: DistortionMeasure, p: SourceDistribution) -> NormalizationResult:
    """
    Subtract each row minimum c_k.

    The normalized problem has the same optimizers, with the distortion axis
    shifted by E_X[c_k]: R'(D - shift) = R(D).
    """
    _check_source(p, d)
    matrix = d.as_array()
    offsets = matrix.min(axis=1)
    return NormalizationResult(
        normal_measure=DistortionMeasure.from_array(matrix - offsets[:, None]),
        row_offsets=tuple(float(c) for c in offsets),
        distortion_shift=float(p.as_array() @ offsets),
    )


def d_max(p: SourceDistribution, d: DistortionMeasure) -> Tuple[float, int]:
    """Smallest rate-zero distortion and the reproduction letter achieving it."""
    _check_source(p, d)
    averages = column_averages(p.as_array(), d.as_array())
    column = argmin_column(averages)
    return float(averages[column]), column


def min_distortion(p: SourceDistribution, d: DistortionMeasure) -> float:
    """E_X[min_l d(X, l)], the smallest achievable expected distortion."""
    _check_source(p, d)
    return float(p.as_array() @ d.as_array().min(axis=1))


def r_trivial_columns(d: DistortionMeasure) -> List[int]:
    """Columns that cost nothing from every source letter; any of them makes R == 0."""
    return [int(l) for l in np.flatnonzero(np.all(d.as_array() == 0.0, axis=0))]


def frobenius_distance(a: DistortionMeasure, b: DistortionMeasure) -> float:
    left, right = a.as_array(), b.as_array()
    if left.shape != right.shape:
        raise DimensionMismatchError(f"measure shapes differ: {left.shape} vs {right.shape}")
    return float(np.linalg.norm(left - right))


# ============= Constructors =============

def hamming(K: int) -> DistortionMeasure:
    if K < 2:
        raise InvalidParameterError(f"Hamming measure needs K >= 2, got {K}")
    return DistortionMeasure.from_array(1.0 - np.eye(K))


def generalized_erasure(K: int, d1: float, d2: float) -> DistortionMeasure:
    """
    K x (K+2) measure: Hamming costs on the first K columns, then two erasure
    columns costing d1 and d2 from every source letter.
    """
    if K < 2:
        raise InvalidParameterError(f"erasure measure needs K >= 2, got {K}")
    if d1 < 0 or d2 < 0:
        raise InvalidParameterError(f"erasure distortions must be nonnegative, got ({d1}, {d2})")
    matrix = np.ones((K, K + 2))
    matrix[:, :K] -= np.eye(K)
    matrix[:, K] = d1
    matrix[:, K + 1] = d2
    return DistortionMeasure.from_array(matrix)
