"""Array precondition checks shared by the numerical services."""
import numpy as np

from app.exceptions import (
    DimensionMismatch,
    NonFiniteInput,
    NotOrthonormal,
    RankOutOfRange,
)


def require_matrix(a, what: str) -> np.ndarray:
    """
    Return `a` as a 2-D float array.

    Raises:
        DimensionMismatch: When `a` is not two-dimensional
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(what, "(rows, cols)", arr.shape)
    return arr


def require_finite(a: np.ndarray, what: str) -> None:
    """Raise NonFiniteInput when `a` holds NaN or infinite values."""
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput(what)


def require_shape(a: np.ndarray, shape: tuple[int, ...], what: str) -> None:
    """Raise DimensionMismatch when `a.shape` differs from `shape`."""
    if a.shape != tuple(shape):
        raise DimensionMismatch(what, tuple(shape), a.shape)


def require_rows(a: np.ndarray, rows: int, what: str) -> None:
    """Raise DimensionMismatch when `a` does not have `rows` rows."""
    if a.shape[0] != rows:
        raise DimensionMismatch(what, f"({rows}, *)", a.shape)


def require_rank(r: int, limit: int) -> None:
    """Raise RankOutOfRange unless 1 <= r <= limit."""
    if r < 1 or r > limit:
        raise RankOutOfRange(r, limit)


def require_unit_columns(q: np.ndarray, tol: float = 1e-6) -> None:
    """
    Check that every column of `q` has unit Euclidean norm.

    Raises:
        NotOrthonormal: When a column norm deviates from 1 by more than `tol`
    """
    deviation = float(np.max(np.abs(np.linalg.norm(q, axis=0) - 1.0), initial=0.0))
    if deviation > tol:
        raise NotOrthonormal(deviation)

