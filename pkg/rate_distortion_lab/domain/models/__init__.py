"""Domain models"""
from rate_distortion_lab.domain.models.distortion import DistortionMeasure, NormalizationResult
from rate_distortion_lab.domain.models.erasure import (
    ErasureProblem,
    ErasureSolution,
    LambdaStar,
    MonotonicityReport,
    Segment,
)
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
from rate_distortion_lab.domain.models.probability import (
    InfoValue,
    OutputMarginal,
    SourceDistribution,
    TestChannel,
)
from rate_distortion_lab.domain.models.solver import KKTResiduals, RDPoint, SolverConfig, SweepEntry

__all__ = [
    "BranchPair",
    "BranchProblem",
    "DemoName",
    "DemoParams",
    "DistortionMeasure",
    "EnumerationTable",
    "ErasureProblem",
    "ErasureSolution",
    "InfoValue",
    "KKTResiduals",
    "LambdaStar",
    "MonotonicityReport",
    "NormalizationResult",
    "OutputMarginal",
    "RDPoint",
    "ReductionReport",
    "ReductionRow",
    "Segment",
    "SolverConfig",
    "SourceDistribution",
    "SweepEntry",
    "TestChannel",
    "Verdict",
]
