"""
Domain models for the Blahut-Arimoto solver: configuration, results and
optimality diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from rate_distortion_lab.domain.models.probability import (
    OutputMarginal,
    SourceDistribution,
    TestChannel,
)

SolverTag = Literal["ba", "analytic", "family"]


class SolverConfig(BaseModel):
    """Numerical knobs for `solve_rd` and `ba_fixed_slope`."""

    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(1e-10, gt=0.0, description="Stopping tolerance on rate change and BA gap")
    max_iterations: int = Field(100_000, ge=1, description="BA iterations per fixed-slope solve")
    lambda_bracket: Tuple[float, float] = Field((0.0, 64.0), description="Initial bisection bracket")
    lambda_cap: float = Field(float(2**20), gt=0.0, description="Upper end is doubled until this cap")
    debug_checks: bool = Field(False, description="Verify row-stochasticity and monotonicity each step")
    workers: int = Field(1, ge=1, description="Thread pool size for sweeps")

    @model_validator(mode="after")
    def validate_bracket(self) -> "SolverConfig":
        low, high = self.lambda_bracket
        if not (0.0 <= low < high):
            raise ValueError(f"lambda bracket must satisfy 0 <= low < high, got {self.lambda_bracket}")
        if high > self.lambda_cap:
            raise ValueError("lambda bracket upper end exceeds the cap")
        return self

    @classmethod
    def from_settings(cls, **overrides) -> "SolverConfig":
        """Build from environment settings; keyword overrides win (CLI flags)."""
        from rate_distortion_lab.app.config import SolverSettings

        values = dict(
            tolerance=SolverSettings.TOLERANCE,
            max_iterations=SolverSettings.MAX_ITERATIONS,
            lambda_bracket=(SolverSettings.LAMBDA_MIN, SolverSettings.LAMBDA_MAX),
            lambda_cap=SolverSettings.LAMBDA_CAP,
            debug_checks=SolverSettings.DEBUG_CHECKS,
            workers=SolverSettings.WORKERS,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


class RDPoint(BaseModel):
    """One point on the rate-distortion curve together with its optimizer."""

    model_config = ConfigDict(frozen=True)

    distortion: float = Field(..., ge=0.0, description="Achieved expected distortion")
    rate_nats: float = Field(..., ge=0.0, description="Mutual information of the returned channel")
    lam: float = Field(..., ge=0.0, description="Slope parameter; math.inf at the D = 0 corner")
    channel: TestChannel
    output: OutputMarginal
    source: Optional[SourceDistribution] = None
    iterations: int = Field(0, ge=0)
    converged: bool = True
    gap: float = Field(0.0, description="Final upper-minus-lower BA bound")
    solver_tag: SolverTag = "ba"
    timeshared: bool = Field(False, description="Convex combination of two bracket-end channels")

    @property
    def rate_bits(self) -> float:
        return self.rate_nats / math.log(2.0)


@dataclass
class KKTResiduals:
    """Dual certificate of an RDPoint at its slope."""

    mu: np.ndarray
    slack: np.ndarray
    max_violation: float
    support_residual: float
    dual_bound: float

    def ok(self, tolerance: float = 1e-6) -> bool:
        return self.max_violation <= tolerance and self.support_residual <= tolerance


@dataclass
class SweepEntry:
    """Result slot for one target distortion in a sweep."""

    target: float
    point: Optional[RDPoint] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.point is not None
