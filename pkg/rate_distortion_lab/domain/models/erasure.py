"""
Domain models for the generalized erasure distortion family.

The measure has K source letters, K ordinary reproduction letters with
Hamming costs, and two erasure letters K and K+1 that cost d1 and d2 from
every source letter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from rate_distortion_lab.domain.models.probability import (
    OutputMarginal,
    SourceDistribution,
    TestChannel,
)


class Segment(str, Enum):
    """Which part of the first R(D) segment a closed-form solution belongs to."""

    HAMMING_SEGMENT = "hamming_segment"
    """Erasure letters unused; the curve coincides with the Hamming one."""

    ERASURE_ACTIVE = "erasure_active"
    """Slope frozen at lambda*; mass flows into the cheaper erasure letter."""

    DEGENERATE_FAMILY = "degenerate_family"
    """d1 = d2; the erasure mass may be split freely between both letters."""


class ErasureProblem(BaseModel):
    """A target distortion on a generalized erasure instance."""

    model_config = ConfigDict(frozen=True)

    K: int = Field(..., ge=2, description="Source alphabet size")
    d1: float = Field(..., ge=0.0, description="Distortion of erasure letter K")
    d2: float = Field(..., ge=0.0, description="Distortion of erasure letter K+1")
    p_x: SourceDistribution
    D: float = Field(..., ge=0.0, description="Target expected distortion")

    @model_validator(mode="after")
    def validate_regime(self) -> "ErasureProblem":
        if self.p_x.size != self.K:
            raise ValueError(f"source has {self.p_x.size} letters, expected K={self.K}")
        if any(value <= 0.0 or value >= 1.0 for value in self.p_x.probs):
            raise ValueError("source must have full support with 0 < p(k) < 1")
        if self.active_distortion >= min(self.p_x.probs):
            raise ValueError(
                f"erasure distortion {self.active_distortion} must be below the "
                f"smallest source mass {min(self.p_x.probs)}"
            )
        return self

    @property
    def active_distortion(self) -> float:
        """Distortion of the cheaper erasure letter, the one entering first."""
        return min(self.d1, self.d2)

    @property
    def active_symbol(self) -> int:
        return self.K if self.d1 <= self.d2 else self.K + 1

    @property
    def is_degenerate(self) -> bool:
        return self.d1 == self.d2

    def at(self, D: float) -> "ErasureProblem":
        return self.model_copy(update={"D": D})


class ErasureSolution(BaseModel):
    """Closed-form optimizer on the first segment of an erasure instance."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(..., ge=0.0, description="Slope; lambda* while the erasure letter is active")
    mu0: float = Field(..., gt=0.0, description="Common dual value mu_k")
    p_y: OutputMarginal = Field(..., description="Output marginal over all K+2 letters")
    p_y_erasure: float = Field(..., description="Total erasure mass P_Y(K) + P_Y(K+1)")
    channel: TestChannel
    D: float = Field(..., ge=0.0)
    rate_nats: float = Field(..., ge=0.0)
    segment: Segment
    active_symbol: int = Field(..., description="Erasure letter receiving the mass (K or K+1)")
    mix: Optional[float] = Field(None, ge=0.0, le=1.0, description="Share on letter K in the degenerate family")


class LambdaStar(BaseModel):
    """Slope at which the erasure letter enters the optimal support."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., gt=0.0)
    bracket: Tuple[float, float] = Field(..., description="Sign-change bracket the root was isolated in")
    inflection_point: float = Field(..., description="Zero of the second derivative, for comparison")
    residual: float = Field(..., description="f(value), zero up to rounding")


@dataclass
class MonotonicityReport:
    """Erasure mass along a distortion grid and the first decrease, if any."""

    ok: bool
    grid: List[float]
    masses: List[float]
    first_violation: Optional[int] = None
    messages: List[str] = field(default_factory=list)
