"""
Domain models for the optimizer-sensitivity experiments.
"""
from __future__ import annotations

from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rate_distortion_lab.domain.models.distortion import DistortionMeasure
from rate_distortion_lab.domain.models.probability import SourceDistribution, TestChannel
from rate_distortion_lab.domain.models.solver import RDPoint, SolverTag

TRIANGLE_SLACK = 1e-12


class Verdict(str, Enum):
    """Outcome of thresholding a branch statistic."""

    SEPARATED = "separated"
    MERGED = "merged"


class EnumerationTable(BaseModel):
    """
    Finite table of an enumerator a(i).

    Each pair (i, n) says the enumerator outputs n at step i. Only finitely
    many steps are ever known, which is exactly what the experiments need.
    """

    model_config = ConfigDict(frozen=True)

    pairs: Tuple[Tuple[int, int], ...] = Field(
        default=(),
        description="(i, a(i)) pairs with distinct positive indices i",
        examples=[((10, 3),), ((1, 0), (4, 2))],
    )

    @field_validator("pairs")
    @classmethod
    def validate_pairs(cls, v: Tuple[Tuple[int, int], ...]) -> Tuple[Tuple[int, int], ...]:
        seen = set()
        for i, value in v:
            if i <= 0:
                raise ValueError(f"index {i} must be positive")
            if value < 0:
                raise ValueError(f"a({i}) = {value} must be a natural number")
            if i in seen:
                raise ValueError(f"index {i} listed twice")
            seen.add(i)
        return tuple(sorted(v))

    def indices_for(self, n: int) -> List[int]:
        """Steps i at which the enumerator outputs n, ascending."""
        return [i for i, value in self.pairs if value == n]

    def as_dict(self) -> Dict[int, int]:
        return dict(self.pairs)


class BranchProblem(BaseModel):
    """One rate-distortion problem (P_X, d, D) of a branch pair."""

    model_config = ConfigDict(frozen=True)

    source: SourceDistribution
    measure: DistortionMeasure
    D: float = Field(..., ge=0.0)


class BranchPair(BaseModel):
    """Two perturbed problems, their optimizers and the separation statistic."""

    model_config = ConfigDict(frozen=True)

    problem_1: BranchProblem
    problem_2: BranchProblem
    branch_1: RDPoint
    branch_2: RDPoint
    reference: TestChannel = Field(..., description="Optimizer of the unperturbed problem")
    tv_branch: float = Field(..., ge=0.0)
    statistic: float = Field(..., ge=0.0)
    threshold: float = Field(..., gt=0.0)
    verdict: Verdict
    x_value: float = Field(..., ge=0.0, description="Dyadic perturbation size")
    tv_form: Literal["halved", "unhalved"]
    solver_1: SolverTag
    solver_2: SolverTag
    family_endpoints: Optional[Tuple[TestChannel, TestChannel]] = Field(
        None, description="Extreme optimizers of the unperturbed problem when x = 0"
    )

    @model_validator(mode="after")
    def validate_verdict(self) -> "BranchPair":
        expected = Verdict.SEPARATED if self.statistic > self.threshold else Verdict.MERGED
        if self.verdict != expected:
            raise ValueError(f"verdict {self.verdict.value} inconsistent with statistic {self.statistic}")
        # triangle inequality through the reference channel
        if self.statistic < 0.5 * self.tv_branch - TRIANGLE_SLACK:
            raise ValueError(
                f"statistic {self.statistic} is below half the branch distance {self.tv_branch}"
            )
        return self

    @property
    def separated(self) -> bool:
        return self.verdict == Verdict.SEPARATED


class DemoName(str, Enum):
    """Branch constructions runnable as reduction demos."""

    ERASURE = "erasure"
    BINARY_DMAX = "binary-dmax"
    BINARY_ZERO = "binary-zero"
    GENERAL = "general"


class DemoParams(BaseModel):
    """Parameters shared by the reduction demos; each demo reads its own subset."""

    model_config = ConfigDict(frozen=True)

    K: int = Field(2, ge=2, description="Source alphabet size (erasure)")
    d: float = Field(0.2, gt=0.0, description="Base erasure distortion (erasure)")
    c: float = Field(0.3, gt=0.0, lt=1.0, description="Erasure-mass threshold (erasure)")
    D: float = Field(0.15, ge=0.0, description="Target distortion (erasure)")
    d01: float = Field(1.0, gt=0.0, description="d(0,1) of the 2x2 measure")
    d10: float = Field(1.0, gt=0.0, description="d(1,0) of the 2x2 measure")
    L_scale: float = Field(1.0, ge=1.0, description="Scale L of the zero-support construction")
    measure: Optional[DistortionMeasure] = Field(None, description="Measure for the general demo")
    seed: Optional[SourceDistribution] = Field(None, description="Seed source for the general demo")
    constant_dmax: bool = Field(False, description="Use the perturbation keeping D_max fixed")


class ReductionRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=1)
    pair: BranchPair


class ReductionReport(BaseModel):
    """Branch tests for m = 1..m_max and the first m whose verdict separated."""

    model_config = ConfigDict(frozen=True)

    demo: DemoName
    n: int
    rows: List[ReductionRow]
    first_separated: Optional[int] = None
