"""
Input/output schemas for the command-line front end.

ProblemFile is what a problem file parses into; ResultRow is one data row of
the comma-separated output. Formatting is fixed (12 significant digits,
lower-case booleans) so identical runs produce identical bytes.
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from rate_distortion_lab.domain.models.distortion import DistortionMeasure
from rate_distortion_lab.domain.models.probability import SourceDistribution
from rate_distortion_lab.domain.models.solver import RDPoint

NUMBER_FORMAT = "%.12g"


def format_number(value: Optional[float]) -> str:
    if value is None:
        return ""
    return NUMBER_FORMAT % value


def format_flag(value: Optional[bool]) -> str:
    if value is None:
        return ""
    return "true" if value else "false"


class ProblemFile(BaseModel):
    """
    Parsed problem file: a source distribution and a distortion matrix.
    """

    source_probs: List[float] = Field(
        ...,
        description="K source probabilities",
        examples=[[0.5, 0.5]],
        min_length=2,
    )

    distortion_rows: List[List[float]] = Field(
        ...,
        description="K rows of L distortions",
        examples=[[[0.0, 1.0], [1.0, 0.0]]],
        min_length=2,
    )

    labels: Optional[List[str]] = Field(
        default=None,
        description="Optional names of the L reproduction letters",
    )

    @field_validator("labels")
    @classmethod
    def validate_labels(cls, v: Optional[List[str]]) -> Optional[List[str]]:
        """Labels must be non-empty tokens"""
        if v is not None and any(not label.strip() for label in v):
            raise ValueError("labels cannot be empty")
        return v

    def source(self) -> SourceDistribution:
        return SourceDistribution.from_values(self.source_probs)

    def measure(self) -> DistortionMeasure:
        return DistortionMeasure(entries=tuple(tuple(row) for row in self.distortion_rows))


class ResultRow(BaseModel):
    """One solved point, in output column order."""

    target: float = Field(..., description="Requested distortion")
    D: Optional[float] = Field(None, description="Achieved expected distortion")
    rate_nats: Optional[float] = None
    rate_bits: Optional[float] = None
    lam: Optional[float] = Field(None, description="Slope of the solved point")
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    solver_tag: Optional[Literal["ba", "analytic", "family"]] = None
    status: str = Field("ok", description="'ok' or the failure message")

    @classmethod
    def from_point(cls, target: float, point: RDPoint) -> "ResultRow":
        return cls(
            target=target,
            D=point.distortion,
            rate_nats=point.rate_nats,
            rate_bits=point.rate_bits,
            lam=point.lam,
            iterations=point.iterations,
            converged=point.converged,
            solver_tag=point.solver_tag,
        )

    @classmethod
    def failed(cls, target: float, message: str) -> "ResultRow":
        return cls(target=target, status=f"failed: {message}")

    @staticmethod
    def header(bits: bool = False) -> List[str]:
        columns = ["target", "D", "rate_nats"]
        if bits:
            columns.append("rate_bits")
        return columns + ["lambda", "iterations", "converged", "solver_tag", "status"]

    def fields(self, bits: bool = False) -> List[str]:
        values = [format_number(self.target), format_number(self.D), format_number(self.rate_nats)]
        if bits:
            values.append(format_number(self.rate_bits))
        return values + [
            format_number(self.lam),
            "" if self.iterations is None else str(self.iterations),
            format_flag(self.converged),
            self.solver_tag or "",
            self.status,
        ]
