"""
Readers for problem files and enumeration-table files.

Problem file layout ('#' starts a comment, blank lines are ignored):

    K L
    p(0) ... p(K-1)
    d(0,0) ... d(0,L-1)
    ...
    d(K-1,0) ... d(K-1,L-1)
    labels y0 ... y(L-1)          (optional)

Enumeration tables hold one "i n" pair of naturals per line.
"""
import math
from pathlib import Path
from typing import Iterator, List, Tuple, Union

from pydantic import ValidationError

from rate_distortion_lab.app.schemas import ProblemFile
from rate_distortion_lab.domain.errors import ProblemFileError
from rate_distortion_lab.domain.models.distortion import DistortionMeasure
from rate_distortion_lab.domain.models.lab import EnumerationTable
from rate_distortion_lab.domain.models.probability import SourceDistribution

PathLike = Union[str, Path]


def _content_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    """(line number, tokens) for every line with content left after stripping comments."""
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if tokens:
            yield number, tokens


def _numbers(tokens: List[str], line: int, what: str) -> List[float]:
    values = []
    for token in tokens:
        try:
            value = float(token)
        except ValueError:
            raise ProblemFileError(f"{what}: {token!r} is not a number", line=line) from None
        if not math.isfinite(value):
            raise ProblemFileError(f"{what}: {token!r} is not finite; only finite distortions are supported", line=line)
        values.append(value)
    return values


def _naturals(tokens: List[str], line: int, what: str) -> List[int]:
    values = []
    for token in tokens:
        if not token.isdigit():
            raise ProblemFileError(f"{what}: {token!r} is not a natural number", line=line)
        values.append(int(token))
    return values


def parse_problem_text(text: str) -> ProblemFile:
    """
    Parse problem-file contents.

    Raises:
        ProblemFileError: with the offending line number
    """
    lines = list(_content_lines(text))
    if not lines:
        raise ProblemFileError("empty problem file", line=1)

    header_line, header = lines[0]
    if len(header) != 2:
        raise ProblemFileError(f"header must be 'K L', got {' '.join(header)!r}", line=header_line)
    K, L = _naturals(header, header_line, "header")
    if K < 2 or L < 2:
        raise ProblemFileError(f"need K >= 2 and L >= 2, got K={K} L={L}", line=header_line)

    if len(lines) < K + 2:
        last = lines[-1][0]
        raise ProblemFileError(f"expected a source line and {K} distortion rows", line=last + 1)

    source_line, source_tokens = lines[1]
    if len(source_tokens) != K:
        raise ProblemFileError(f"source line has {len(source_tokens)} entries, expected {K}", line=source_line)
    source = _numbers(source_tokens, source_line, "source")

    rows = []
    for row_line, tokens in lines[2 : K + 2]:
        if len(tokens) != L:
            raise ProblemFileError(f"distortion row has {len(tokens)} entries, expected {L}", line=row_line)
        row = _numbers(tokens, row_line, "distortion")
        if any(value < 0 for value in row):
            raise ProblemFileError("distortions must be nonnegative", line=row_line)
        rows.append(row)

    labels = None
    for extra_line, tokens in lines[K + 2 :]:
        if tokens[0] != "labels" or labels is not None:
            raise ProblemFileError(f"unexpected content {' '.join(tokens)!r}", line=extra_line)
        if len(tokens) - 1 != L:
            raise ProblemFileError(f"expected {L} labels, got {len(tokens) - 1}", line=extra_line)
        labels = tokens[1:]

    try:
        problem = ProblemFile(source_probs=source, distortion_rows=rows, labels=labels)
        problem.measure()
    except ValidationError as e:
        raise ProblemFileError(f"invalid problem: {e.errors()[0]['msg']}", line=header_line) from None
    try:
        problem.source()
    except ValidationError as e:
        raise ProblemFileError(f"invalid source distribution: {e.errors()[0]['msg']}", line=source_line) from None
    return problem


def load_problem(path: PathLike) -> Tuple[ProblemFile, SourceDistribution, DistortionMeasure]:
    """Read a problem file and build its domain objects."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ProblemFileError(f"cannot read {path}: {e.strerror}") from None
    problem = parse_problem_text(text)
    return problem, problem.source(), problem.measure()


def parse_table_text(text: str) -> EnumerationTable:
    """Parse "i n" lines into an EnumerationTable."""
    pairs = []
    seen = {}
    for number, tokens in _content_lines(text):
        if len(tokens) != 2:
            raise ProblemFileError(f"expected 'i n', got {' '.join(tokens)!r}", line=number)
        i, n = _naturals(tokens, number, "table")
        if i == 0:
            raise ProblemFileError("indices start at 1", line=number)
        if i in seen:
            raise ProblemFileError(f"index {i} already given on line {seen[i]}", line=number)
        seen[i] = number
        pairs.append((i, n))
    return EnumerationTable(pairs=tuple(pairs))


def load_table(path: PathLike) -> EnumerationTable:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ProblemFileError(f"cannot read {path}: {e.strerror}") from None
    return parse_table_text(text)
