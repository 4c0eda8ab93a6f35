"""
Domain models for finite-alphabet probability objects.

Pydantic models keep every distribution and channel on the simplex: entries
in [0, 1] and sums within SIMPLEX_TOLERANCE of one. Values read from files
rarely sum exactly to one, so `from_values` renormalizes inputs that are off
by at most RENORMALIZE_TOLERANCE (with a warning) before validation.
"""
from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from rate_distortion_lab.monitoring.logger import get_logger

SIMPLEX_TOLERANCE = 1e-12
RENORMALIZE_TOLERANCE = 1e-9

logger = get_logger("domain.probability")


def check_probability_vector(values: Sequence[float], what: str) -> Tuple[float, ...]:
    """Validate a probability vector and clip rounding-level negatives to zero."""
    cleaned = []
    for index, value in enumerate(values):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"{what}: entry {index} is not finite ({value})")
        if value < -SIMPLEX_TOLERANCE or value > 1 + SIMPLEX_TOLERANCE:
            raise ValueError(f"{what}: entry {index} = {value!r} outside [0, 1]")
        cleaned.append(min(max(value, 0.0), 1.0))
    total = math.fsum(cleaned)
    if abs(total - 1.0) > SIMPLEX_TOLERANCE:
        raise ValueError(f"{what}: entries sum to {total!r}, expected 1")
    return tuple(cleaned)


def renormalize(values: Sequence[float], what: str) -> Tuple[float, ...]:
    """Rescale a nearly normalized vector; leave anything worse to validation."""
    floats = [float(v) for v in values]
    total = math.fsum(floats)
    if total > 0 and SIMPLEX_TOLERANCE < abs(total - 1.0) <= RENORMALIZE_TOLERANCE:
        logger.warning(
            f"{what} renormalized",
            extra={"extra": {"sum": total, "deviation": total - 1.0}},
        )
        return tuple(v / total for v in floats)
    return tuple(floats)


class _ProbabilityVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    probs: Tuple[float, ...] = Field(
        ...,
        description="Probability masses, nonnegative and summing to one",
        min_length=1,
    )

    @field_validator("probs")
    @classmethod
    def validate_simplex(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        return check_probability_vector(v, cls.__name__)

    @classmethod
    def from_values(cls, values: Sequence[float]):
        """Build from raw values, renormalizing tiny deviations from one."""
        return cls(probs=renormalize(values, cls.__name__))

    @property
    def size(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


class SourceDistribution(_ProbabilityVector):
    """P_X over the source alphabet {0, ..., K-1}."""

    probs: Tuple[float, ...] = Field(
        ...,
        description="Source letter probabilities P_X(k)",
        min_length=2,
        examples=[(0.5, 0.5), (0.25, 0.75)],
    )

    @classmethod
    def uniform(cls, size: int) -> "SourceDistribution":
        return cls(probs=tuple([1.0 / size] * size))

    @classmethod
    def point_mass(cls, size: int, letter: int) -> "SourceDistribution":
        return cls(probs=tuple(1.0 if k == letter else 0.0 for k in range(size)))

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(k for k, value in enumerate(self.probs) if value > 0)


class OutputMarginal(_ProbabilityVector):
    """P_Y over the reproduction alphabet."""


class TestChannel(BaseModel):
    """Row-stochastic matrix P_{Y|X}(l|k); row k is the conditional law given X=k."""

    __test__ = False  # not a pytest class despite the name

    model_config = ConfigDict(frozen=True)

    rows: Tuple[Tuple[float, ...], ...] = Field(
        ...,
        description="K rows of L conditional probabilities",
        min_length=1,
    )

    @field_validator("rows")
    @classmethod
    def validate_rows(cls, v: Tuple[Tuple[float, ...], ...]) -> Tuple[Tuple[float, ...], ...]:
        width = len(v[0])
        if width == 0:
            raise ValueError("channel rows must not be empty")
        checked = []
        for index, row in enumerate(v):
            if len(row) != width:
                raise ValueError(f"row {index} has length {len(row)}, expected {width}")
            checked.append(check_probability_vector(row, f"channel row {index}"))
        return tuple(checked)

    @classmethod
    def from_array(cls, matrix: np.ndarray, renormalize_rows: bool = False) -> "TestChannel":
        rows = [tuple(float(x) for x in row) for row in np.asarray(matrix, dtype=float)]
        if renormalize_rows:
            rows = [renormalize(row, "channel row") for row in rows]
        return cls(rows=tuple(rows))

    @classmethod
    def point_mass(cls, source_size: int, repro_size: int, column: int) -> "TestChannel":
        """Channel that maps every source letter to one reproduction letter."""
        row = tuple(1.0 if l == column else 0.0 for l in range(repro_size))
        return cls(rows=tuple([row] * source_size))

    @classmethod
    def identity(cls, size: int) -> "TestChannel":
        return cls.from_array(np.eye(size))

    @property
    def source_size(self) -> int:
        return len(self.rows)

    @property
    def repro_size(self) -> int:
        return len(self.rows[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float)


class InfoValue(BaseModel):
    """An information quantity in nats."""

    model_config = ConfigDict(frozen=True)

    nats: float = Field(..., ge=0.0, description="Information in natural-log units")

    @field_validator("nats")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("information value must be finite")
        return v

    @property
    def bits(self) -> float:
        return self.nats / math.log(2.0)

    def __float__(self) -> float:
        return self.nats
