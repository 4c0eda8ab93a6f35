"""
Domain models for single-letter distortion measures.
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class DistortionMeasure(BaseModel):
    """
    Dense K x L matrix d(k, l) of finite, nonnegative distortions.

    Alphabets in every experiment are tiny, so the matrix is stored dense.
    """

    model_config = ConfigDict(frozen=True)

    entries: Tuple[Tuple[float, ...], ...] = Field(
        ...,
        description="Row k holds d(k, l) for every reproduction letter l",
        min_length=2,
        examples=[((0.0, 1.0), (1.0, 0.0))],
    )

    @field_validator("entries")
    @classmethod
    def validate_entries(cls, v: Tuple[Tuple[float, ...], ...]) -> Tuple[Tuple[float, ...], ...]:
        width = len(v[0])
        if width < 2:
            raise ValueError("reproduction alphabet needs at least 2 letters")
        for k, row in enumerate(v):
            if len(row) != width:
                raise ValueError(f"row {k} has length {len(row)}, expected {width}")
            for l, value in enumerate(row):
                if not math.isfinite(value):
                    raise ValueError(f"d({k},{l}) = {value} is not finite; only finite measures are supported")
                if value < 0:
                    raise ValueError(f"d({k},{l}) = {value} is negative")
        return tuple(tuple(float(x) for x in row) for row in v)

    @classmethod
    def from_array(cls, matrix: np.ndarray) -> "DistortionMeasure":
        return cls(entries=tuple(tuple(float(x) for x in row) for row in np.asarray(matrix, dtype=float)))

    @property
    def source_size(self) -> int:
        return len(self.entries)

    @property
    def repro_size(self) -> int:
        return len(self.entries[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)


class NormalizationResult(BaseModel):
    """Outcome of subtracting the row minima c_k from a distortion measure."""

    model_config = ConfigDict(frozen=True)

    normal_measure: DistortionMeasure
    row_offsets: Tuple[float, ...] = Field(..., description="c_k = min_l d(k, l)")
    distortion_shift: float = Field(..., ge=0.0, description="E_X[c_k]; R'(D - shift) = R(D)")
