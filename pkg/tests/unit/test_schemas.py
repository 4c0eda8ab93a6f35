"""
Unit tests for the CLI schemas and output formatting.
"""
import math

import pytest
from pydantic import ValidationError

from rate_distortion_lab.app.schemas import ProblemFile, ResultRow, format_flag, format_number
from rate_distortion_lab.domain.models import SourceDistribution
from rate_distortion_lab.services import ba_solver
from rate_distortion_lab.services.distortion import hamming


class TestFormatting:
    """Fixed number and flag formatting"""

    def test_twelve_significant_digits(self):
        """Numbers use %.12g"""
        assert format_number(1.0 / 3.0) == "0.333333333333"
        assert format_number(0.5) == "0.5"
        assert format_number(math.inf) == "inf"

    def test_missing_values(self):
        """None prints as an empty field"""
        assert format_number(None) == ""
        assert format_flag(None) == ""

    def test_flags(self):
        """Booleans print lower-case"""
        assert format_flag(True) == "true"
        assert format_flag(False) == "false"


class TestProblemFile:
    """ProblemFile schema"""

    def test_builds_domain_objects(self):
        """source() and measure() produce validated models"""
        problem = ProblemFile(source_probs=[0.5, 0.5], distortion_rows=[[0.0, 1.0], [1.0, 0.0]])
        assert problem.source() == SourceDistribution.uniform(2)
        assert problem.measure() == hamming(2)

    def test_empty_label_rejected(self):
        """Labels must be non-empty"""
        with pytest.raises(ValidationError):
            ProblemFile(source_probs=[0.5, 0.5], distortion_rows=[[0.0, 1.0], [1.0, 0.0]], labels=["a", " "])


class TestResultRow:
    """ResultRow columns"""

    def setup_method(self):
        """A solved binary Hamming point"""
        self.point = ba_solver.solve_rd(SourceDistribution.uniform(2), hamming(2), 0.1)

    def test_header_with_and_without_bits(self):
        """rate_bits appears only on request"""
        assert ResultRow.header() == [
            "target", "D", "rate_nats", "lambda", "iterations", "converged", "solver_tag", "status"
        ]
        assert ResultRow.header(bits=True)[3] == "rate_bits"

    def test_fields_follow_header(self):
        """Data fields line up with the header"""
        row = ResultRow.from_point(0.1, self.point)
        for bits in (False, True):
            assert len(row.fields(bits)) == len(ResultRow.header(bits))
        fields = dict(zip(ResultRow.header(True), row.fields(True)))
        assert fields["rate_bits"].startswith("0.531004")
        assert fields["converged"] == "true"
        assert fields["solver_tag"] == "ba"
        assert fields["status"] == "ok"

    def test_failed_row(self):
        """Failures keep the target and carry the message"""
        row = ResultRow.failed(0.2, "no bracket")
        fields = row.fields()
        assert fields[0] == "0.2"
        assert fields[1] == ""
        assert fields[-1] == "failed: no bracket"
