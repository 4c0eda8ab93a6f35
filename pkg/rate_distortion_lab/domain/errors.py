"""
Exception hierarchy for the rate-distortion laboratory.

Every error raised by the services derives from RateDistortionError, and most
also derive from the builtin they specialise so callers can keep catching
ValueError / RuntimeError.
"""
from __future__ import annotations

from typing import Optional, Tuple


class RateDistortionError(Exception):
    """Base class for all laboratory errors."""


class DimensionMismatchError(RateDistortionError, ValueError):
    """Shapes of distributions, channels or distortion matrices disagree."""


class InvalidParameterError(RateDistortionError, ValueError):
    """A scalar parameter is outside its admissible range."""


class InfeasibleDualError(RateDistortionError, ValueError):
    """Dual variables violate sum_k mu_k exp(-lambda d(k,l)) <= 1."""


class InfeasibleDistortionError(RateDistortionError, ValueError):
    """Target distortion is below the smallest achievable expected distortion."""


class BracketError(RateDistortionError, RuntimeError):
    """Bisection bracket on lambda does not straddle the target distortion."""

    def __init__(self, message: str, achieved_range: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.achieved_range = achieved_range


class SolverInvariantError(RateDistortionError, AssertionError):
    """A per-iteration solver invariant failed (debug checks only)."""


class RegimeViolationError(RateDistortionError, ValueError):
    """An analytic formula was evaluated outside its validity region."""

    def __init__(self, message: str, letter: Optional[int] = None, value: Optional[float] = None):
        super().__init__(message)
        self.letter = letter
        self.value = value


class TrivialMeasureError(RateDistortionError, ValueError):
    """The distortion measure has a column that is zero in every row, so R == 0."""

    def __init__(self, message: str, column: int):
        super().__init__(message)
        self.column = column


class InfeasibleConstructionError(RateDistortionError, ValueError):
    """A balanced source satisfying the dominance and tie conditions was not found."""


class ProblemFileError(RateDistortionError, ValueError):
    """Malformed problem or enumeration-table file."""

    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line
