"""
Unit tests for problem-file and enumeration-table parsing.
"""
from pathlib import Path

import pytest

from rate_distortion_lab.app.problem_files import (
    load_problem,
    load_table,
    parse_problem_text,
    parse_table_text,
)
from rate_distortion_lab.domain.errors import ProblemFileError

DATA = Path(__file__).resolve().parents[1] / "data"


class TestParseProblem:
    """Problem file layout and diagnostics"""

    def test_binary_hamming_fixture(self):
        """The fixture parses into a uniform source and Hamming rows"""
        problem, p, d = load_problem(DATA / "problems" / "binary_hamming.txt")
        assert p.probs == (0.5, 0.5)
        assert d.entries == ((0.0, 1.0), (1.0, 0.0))
        assert problem.labels == ["zero", "one"]

    def test_comments_and_blank_lines(self):
        """'#' comments and blank lines are skipped"""
        text = "# header next\n\n2 3   # K L\n0.25 0.75\n0 1 0.5\n\n1 0 0.5\n"
        problem = parse_problem_text(text)
        assert problem.source_probs == [0.25, 0.75]
        assert problem.measure().repro_size == 3

    def test_bad_number_reports_line(self):
        """The malformed fixture fails on line 4"""
        with pytest.raises(ProblemFileError) as info:
            load_problem(DATA / "problems" / "malformed.txt")
        assert info.value.line == 4
        assert str(info.value).startswith("line 4:")

    def test_bad_header(self):
        """The header needs exactly two naturals"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem_text("2\n0.5 0.5\n0 1\n1 0\n")
        assert info.value.line == 1

    def test_alphabet_too_small(self):
        """K and L are at least 2"""
        with pytest.raises(ProblemFileError):
            parse_problem_text("1 2\n1\n0 1\n")

    def test_wrong_row_length(self):
        """Every distortion row has L entries"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem_text("2 2\n0.5 0.5\n0 1\n1 0 3\n")
        assert info.value.line == 4

    def test_missing_rows(self):
        """Truncated files point past the last line"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem_text("2 2\n0.5 0.5\n0 1\n")
        assert info.value.line == 4

    def test_negative_distortion(self):
        """Distortions are nonnegative"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem_text("2 2\n0.5 0.5\n0 -1\n1 0\n")
        assert info.value.line == 3

    def test_infinite_distortion(self):
        """Only finite distortions are supported"""
        with pytest.raises(ProblemFileError, match="not finite"):
            parse_problem_text("2 2\n0.5 0.5\n0 inf\n1 0\n")

    def test_source_not_normalized(self):
        """A source far from the simplex fails on its own line"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem_text("# comment\n2 2\n0.5 0.6\n0 1\n1 0\n")
        assert info.value.line == 3

    def test_source_renormalized_within_tolerance(self):
        """Rounding-level deviations are accepted"""
        problem = parse_problem_text("2 2\n0.3333333333 0.6666666667\n0 1\n1 0\n")
        assert sum(problem.source().probs) == pytest.approx(1.0, abs=1e-12)

    def test_trailing_content(self):
        """Only a labels line may follow the rows"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem_text("2 2\n0.5 0.5\n0 1\n1 0\nextra stuff\n")
        assert info.value.line == 5

    def test_missing_file(self, tmp_path):
        """Unreadable files are reported as file errors"""
        with pytest.raises(ProblemFileError, match="cannot read"):
            load_problem(tmp_path / "nope.txt")


class TestParseTable:
    """Enumeration-table files"""

    def test_fixture(self):
        """The ten-step fixture outputs 0 at step 10"""
        table = load_table(DATA / "tables" / "ten.txt")
        assert table.as_dict() == {10: 0}

    def test_pairs_are_sorted(self):
        """Pairs are stored in step order"""
        table = parse_table_text("5 1\n2 3\n")
        assert table.pairs == ((2, 3), (5, 1))

    def test_duplicate_step(self):
        """A step may appear only once"""
        with pytest.raises(ProblemFileError) as info:
            parse_table_text("2 3\n2 4\n")
        assert info.value.line == 2

    def test_step_zero(self):
        """Steps start at 1"""
        with pytest.raises(ProblemFileError):
            parse_table_text("0 3\n")

    def test_not_a_natural(self):
        """Entries are natural numbers"""
        with pytest.raises(ProblemFileError):
            parse_table_text("1 -3\n")

    def test_empty_table(self):
        """Comment-only files give an empty table"""
        assert parse_table_text("# nothing yet\n").pairs == ()
