"""Delimited matrix files, result documents, and table serialization.

No delimiter sniffing: the delimiter is always explicit, because silently
misparsing an expression matrix is worse than asking for one flag. Floats
are written with ``repr``, so a written matrix re-reads bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import as_data_matrix
from .errors import ParseError

ROWS = "rows"
COLS = "cols"

_NA_TOKENS = {"NA", "NAN", "NULL", ""}

LONG_TABLE_HEADER = ("scenario", "test", "x", "y", "ci_low", "ci_high")


@dataclass(frozen=True)
class MatrixFile:
    """A delimited text matrix on disk.

    orientation 'rows' means rows are observations (the default);
    'cols' means the file stores one variable per row and is transposed
    after parsing.
    """

    path: str | Path
    delimiter: str = ","
    header: bool = False
    orientation: str = ROWS

    def __post_init__(self):
        if self.orientation not in (ROWS, COLS):
            raise ValueError(f"orientation must be {ROWS!r} or {COLS!r}")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")


def parse_matrix_text(
    text: str, delimiter: str = ",", header: bool = False, orientation: str = ROWS
) -> np.ndarray:
    """Parse delimited text into a validated (observations × variables) matrix.

    ParseError carries 1-based (line, field) file coordinates; NA-like
    tokens parse as NaN and are then rejected by validation, whose NonFinite
    coordinates are 0-based indices into the returned matrix.
    """
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if header and lineno == 1:
            continue
        stripped = line.strip()
        if not stripped:
            continue
        tokens = stripped.split(delimiter)
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise ParseError(lineno, len(tokens), f"expected {width} fields, got {len(tokens)}")
        values = []
        for fieldno, token in enumerate(tokens, start=1):
            t = token.strip()
            try:
                values.append(float(t))
            except ValueError:
                if t.upper() in _NA_TOKENS:
                    values.append(float("nan"))
                else:
                    raise ParseError(lineno, fieldno, f"not a number: {t!r}") from None
        rows.append(values)
    if not rows:
        raise ParseError(1, 1, "no data rows")
    m = np.array(rows, dtype=np.float64)
    if orientation == COLS:
        m = m.T
    return as_data_matrix(m, "matrix")


def read_matrix(file: MatrixFile) -> np.ndarray:
    return parse_matrix_text(
        Path(file.path).read_text(encoding="utf-8"),
        delimiter=file.delimiter,
        header=file.header,
        orientation=file.orientation,
    )


def write_matrix(m: np.ndarray, path: str | Path, delimiter: str = ",") -> None:
    """Write rows-are-observations delimited text that re-reads bit-identically."""
    a = np.asarray(m, dtype=np.float64)
    lines = [delimiter.join(repr(float(v)) for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating, np.integer)):
        return repr(v.item())
    return str(v)


def result_document(entries: Mapping[str, object]) -> str:
    """'key = value' lines in the mapping's order (reproducibility contract:
    callers pass the full effective configuration, resolved defaults included)."""
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in entries.items())


def format_long_table(rows: Iterable[Sequence], delimiter: str = "\t") -> str:
    """Plot-ready long format: scenario, test, x, y, ci_low, ci_high."""
    out = [delimiter.join(LONG_TABLE_HEADER)]
    for row in rows:
        if len(row) != len(LONG_TABLE_HEADER):
            raise ValueError(f"expected {len(LONG_TABLE_HEADER)} fields per row, got {len(row)}")
        out.append(delimiter.join(_fmt(v) for v in row))
    return "\n".join(out) + "\n"


def format_aligned(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Space-aligned table for terminal output; values formatted as in files."""
    cells = [[str(h) for h in header]] + [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"
