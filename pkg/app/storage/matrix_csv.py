"""
Delimited text format for matrices.

One matrix row per line, comma-separated by default. An empty field or the
token NA (any case) marks a missing entry. A single header line is skipped
when the first line holds a token that is neither numeric nor missing.
Numbers are written in shortest round-trip form; integral values without a
decimal point.
"""
import re
from pathlib import Path

import numpy as np
import pandas as pd

from app.logging_config import setup_logging
from app.services.matrix_core import ObservedMatrix
from app.storage.exceptions import AllMissing, EmptyMatrix, IoError, ParseError, RaggedRows

logger = setup_logging()

MISSING_TOKEN = "NA"

_TOKENIZE_ERROR = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


def _is_missing(token: str) -> bool:
    return token == "" or token.upper() == MISSING_TOKEN


def _is_numeric(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_tokens(path: Path, delimiter: str) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path,
            sep=delimiter,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            skipinitialspace=True,
        )
    except FileNotFoundError as e:
        raise IoError(str(path), "file not found") from e
    except pd.errors.EmptyDataError as e:
        raise EmptyMatrix(str(path)) from e
    except pd.errors.ParserError as e:
        match = _TOKENIZE_ERROR.search(str(e))
        if match:
            expected, line, got = (int(g) for g in match.groups())
            raise RaggedRows(str(path), line, expected, got) from e
        raise IoError(str(path), str(e)) from e
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e


def read_matrix(path: str | Path, delimiter: str = ",") -> ObservedMatrix:
    """
    Read a matrix file.

    Args:
        path: File to read
        delimiter: Field separator

    Returns:
        ObservedMatrix whose mask marks the non-missing entries

    Raises:
        ParseError: A token is neither numeric nor a missing marker
        RaggedRows: Lines have different numbers of fields
        AllMissing: No entry is observed
        EmptyMatrix: The file holds no data row
        IoError: The file cannot be read
    """
    path = Path(path)
    tokens = _read_tokens(path, delimiter)

    # Shorter lines are padded with NaN by the reader
    short = tokens.isna().any(axis=1).to_numpy()
    if short.any():
        row = int(np.flatnonzero(short)[0])
        raise RaggedRows(str(path), row + 1, tokens.shape[1], int(tokens.iloc[row].notna().sum()))

    tokens = tokens.apply(lambda column: column.str.strip())
    header_lines = 0
    first = tokens.iloc[0].tolist() if len(tokens) else []
    if any(not _is_missing(t) and not _is_numeric(t) for t in first):
        tokens = tokens.iloc[1:]
        header_lines = 1
    if tokens.empty:
        raise EmptyMatrix(str(path))

    raw = tokens.to_numpy(dtype=object)
    missing = np.vectorize(_is_missing, otypes=[bool])(raw)
    values = tokens.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)

    unparsed = np.isnan(values) & ~missing
    if unparsed.any():
        line, column = (int(i) for i in np.argwhere(unparsed)[0])
        raise ParseError(str(path), line + 1 + header_lines, column + 1, str(raw[line, column]))
    if missing.all():
        raise AllMissing(str(path))

    logger.debug(
        f"Read {values.shape[0]}x{values.shape[1]} matrix from {path} "
        f"({int(missing.sum())} missing, header={'yes' if header_lines else 'no'})"
    )
    return ObservedMatrix(values=np.where(missing, 0.0, values), observed_mask=~missing)


def format_number(x: float) -> str:
    """Shortest round-trip decimal form; integral values without a trailing '.0'."""
    if np.isnan(x):
        return MISSING_TOKEN
    x = float(x)
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(x)


def write_matrix(matrix, path: str | Path, delimiter: str = ",") -> None:
    """
    Write a matrix (ObservedMatrix, or array with NaN for missing) to `path`.

    Raises:
        EmptyMatrix: The matrix has no rows or columns
        IoError: The file cannot be written
    """
    path = Path(path)
    values = matrix.to_array() if isinstance(matrix, ObservedMatrix) else np.asarray(matrix, dtype=float)
    if values.ndim != 2 or 0 in values.shape:
        raise EmptyMatrix(str(path))

    formatted = pd.DataFrame(values).apply(lambda column: column.map(format_number))
    try:
        formatted.to_csv(path, sep=delimiter, header=False, index=False, lineterminator="\n")
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e
    logger.debug(f"Wrote {values.shape[0]}x{values.shape[1]} matrix to {path}")


def read_labels(path: str | Path) -> list[str]:
    """Read one label per line (e.g. variant or phenotype names)."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, sep="\t")
    except FileNotFoundError as e:
        raise IoError(str(path), "file not found") from e
    except pd.errors.EmptyDataError as e:
        raise EmptyMatrix(str(path)) from e
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e
    return [label.strip() for label in frame.iloc[:, 0].tolist()]
