"""
Dense matrix primitives.

This module provides the observed-matrix container with an explicit
missing-entry mask, truncated SVD with a deterministic sign convention,
orthonormalization, operator-form projections, subspace distances and the
iterative rank-r completion used for incomplete target matrices.

Projections are always applied as X - Q(QᵀX); p×p projection matrices are
never formed.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from app.exceptions import (
    DimensionMismatch,
    EmptyObservationSet,
    EmptyRowOrColumn,
    NonFiniteInput,
    RankDeficient,
)
from app.logging_config import setup_logging
from app.utils.validators import (
    require_finite,
    require_matrix,
    require_rank,
    require_rows,
    require_shape,
)

logger = setup_logging()

# Relative size of the smallest R diagonal below which a basis is rank deficient
RANK_TOLERANCE = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ObservedMatrix:
    """
    Dense p×q matrix with an observed-entry mask.

    Entries outside the mask are stored as 0 and ignored by all arithmetic.
    """

    values: np.ndarray
    observed_mask: np.ndarray

    def __post_init__(self):
        values = require_matrix(self.values, "values")
        mask = np.asarray(self.observed_mask, dtype=bool)
        require_shape(mask, values.shape, "observed_mask")
        if not np.all(np.isfinite(values[mask])):
            raise NonFiniteInput("observed entries")
        if not mask.any():
            raise EmptyObservationSet()

        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "values", _frozen(np.where(mask, values, 0.0)))
        object.__setattr__(self, "observed_mask", mask)

    @classmethod
    def from_array(cls, a) -> "ObservedMatrix":
        """Build from an array where NaN marks a missing entry."""
        arr = require_matrix(a, "matrix")
        return cls(values=np.nan_to_num(arr, nan=0.0), observed_mask=~np.isnan(arr))

    @classmethod
    def complete(cls, a) -> "ObservedMatrix":
        """Build a fully observed matrix."""
        arr = require_matrix(a, "matrix")
        require_finite(arr, "matrix")
        return cls(values=arr, observed_mask=np.ones(arr.shape, dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]

    @property
    def n_observed(self) -> int:
        return int(self.observed_mask.sum())

    @property
    def is_complete(self) -> bool:
        return self.n_observed == self.values.size

    def observed_indices(self) -> np.ndarray:
        """Row-major flat indices of the observed entries, ascending."""
        return np.flatnonzero(self.observed_mask)

    def with_hidden(self, flat_indices: np.ndarray) -> "ObservedMatrix":
        """Return a copy in which the given flat indices are additionally missing."""
        mask = self.observed_mask.copy()
        mask.flat[np.asarray(flat_indices, dtype=int)] = False
        return ObservedMatrix(values=self.values, observed_mask=mask)

    def to_array(self) -> np.ndarray:
        """Return the values with NaN at missing entries."""
        return np.where(self.observed_mask, self.values, np.nan)


@dataclass(frozen=True)
class TruncatedSvd:
    """Top-r singular triplets: U (p×r), singular values (r,), V (q×r)."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        for name in ("U", "singular_values", "V"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T

    def scaled_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (UΛ^{1/2}, VΛ^{1/2}), the balanced factor pair."""
        root = np.sqrt(self.singular_values)
        return self.U * root, self.V * root

    def bases(self) -> "SourceBases":
        return SourceBases(U1=self.U, V1=self.V)


@dataclass(frozen=True)
class SourceBases:
    """Orthonormal source latent bases Û₁ (p×r) and V̂₁ (q×r)."""

    U1: np.ndarray
    V1: np.ndarray
    rank: int = field(init=False)

    def __post_init__(self):
        u1 = require_matrix(self.U1, "U1")
        v1 = require_matrix(self.V1, "V1")
        if u1.shape[1] != v1.shape[1]:
            raise DimensionMismatch("V1", f"(*, {u1.shape[1]})", v1.shape)
        object.__setattr__(self, "U1", _frozen(u1))
        object.__setattr__(self, "V1", _frozen(v1))
        object.__setattr__(self, "rank", u1.shape[1])


@dataclass(frozen=True)
class CompletionResult:
    """Outcome of the impute-then-truncate fixed-point iteration."""

    matrix: np.ndarray
    omega_losses: list[float]
    iterations: int
    converged: bool


def dense(M) -> np.ndarray:
    """
    Return a fully observed matrix as a float array.

    Raises:
        NonFiniteInput: When `M` has missing or non-finite entries
    """
    if isinstance(M, ObservedMatrix):
        if not M.is_complete:
            raise NonFiniteInput("matrix with missing entries")
        return np.asarray(M.values)
    arr = require_matrix(M, "matrix")
    require_finite(arr, "matrix")
    return arr


def as_observed(Y) -> ObservedMatrix:
    """Wrap an array (NaN = missing) as an ObservedMatrix; pass ObservedMatrix through."""
    if isinstance(Y, ObservedMatrix):
        return Y
    return ObservedMatrix.from_array(Y)


def fix_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Largest-magnitude entry of each left vector is positive; argmax keeps the lowest index on ties
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivots, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, v * signs


def truncated_svd(M, r: int) -> TruncatedSvd:
    """
    Compute the top-r singular triplets of a fully observed matrix.

    Args:
        M: p×q array or complete ObservedMatrix
        r: Number of triplets to keep, 1 <= r <= min(p, q)

    Returns:
        TruncatedSvd whose reconstruction is the best rank-r Frobenius approximation

    Raises:
        RankOutOfRange: If r < 1 or r > min(p, q)
        NonFiniteInput: If any entry is not finite
    """
    a = dense(M)
    require_rank(r, min(a.shape))

    u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesdd")
    u, v = fix_signs(u[:, :r], vt[:r].T)
    return TruncatedSvd(U=u, singular_values=s[:r], V=v)


def singular_values(M) -> np.ndarray:
    """All singular values of a fully observed matrix, nonincreasing."""
    return scipy.linalg.svdvals(dense(M))


def orthonormalize(B) -> np.ndarray:
    """
    Return an orthonormal basis of span(B) with the same column count.

    Raises:
        RankDeficient: If the smallest |R| diagonal is below 1e-12 times the largest
    """
    b = require_matrix(B, "basis")
    require_finite(b, "basis")
    q, r = scipy.linalg.qr(b, mode="economic")
    diag = np.abs(np.diag(r))
    largest = float(diag.max(initial=0.0))
    numerical_rank = int(np.sum(diag >= RANK_TOLERANCE * largest)) if largest > 0 else 0
    if numerical_rank < b.shape[1]:
        raise RankDeficient(numerical_rank, b.shape[1])

    # Positive R diagonal makes the factorization unique
    signs = np.sign(np.diag(r))
    return q * signs


def apply_complement_projection(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Apply P⊥(Q) = I - QQᵀ to X in operator form."""
    require_rows(X, Q.shape[0], "X")
    return X - Q @ (Q.T @ X)


def apply_projection(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Apply P(Q) = QQᵀ to X in operator form."""
    require_rows(X, Q.shape[0], "X")
    return Q @ (Q.T @ X)


def subspace_distance(Qa: np.ndarray, Qb: np.ndarray) -> float:
    """
    Frobenius distance ‖P(Qa) - P(Qb)‖_F between two orthonormal bases.

    Uses ‖P(Qa) - P(Qb)‖_F² = ra + rb - 2‖QaᵀQb‖_F², clamped at 0.
    """
    require_rows(Qb, Qa.shape[0], "Qb")
    cross = np.linalg.norm(Qa.T @ Qb) ** 2
    return float(np.sqrt(max(Qa.shape[1] + Qb.shape[1] - 2.0 * cross, 0.0)))


def frobenius_error(A, B) -> float:
    """‖A - B‖_F for fully observed matrices of equal shape."""
    a = dense(A)
    b = dense(B)
    require_shape(b, a.shape, "B")
    return float(np.linalg.norm(a - b))


def min_singular_value(M) -> float:
    """Smallest singular value θ = σ_min(M)."""
    return float(singular_values(M)[-1])


def _require_observed_lines(Y: ObservedMatrix) -> None:
    for axis, name in ((1, "row"), (0, "column")):
        counts = Y.observed_mask.sum(axis=axis)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise EmptyRowOrColumn(name, int(empty[0]))


def hard_impute(Y: ObservedMatrix, r: int, tol: float, max_iter: int) -> CompletionResult:
    """
    Rank-r completion by alternating imputation and truncated SVD.

    Missing entries start at 0. Each iteration replaces the current filled
    matrix by its rank-r truncation W and re-imputes the missing entries
    from W, stopping when ‖W_new - W_old‖_F / max(1, ‖W_old‖_F) < tol.

    Args:
        Y: Target matrix, each row and column with at least one observed entry
        r: Rank of the completion
        tol: Relative change tolerance
        max_iter: Maximum number of truncations

    Returns:
        CompletionResult with the final W and the Ω-restricted squared error
        of every iterate (nonincreasing)

    Raises:
        EmptyRowOrColumn: If a row or column is entirely missing
        RankOutOfRange: If r is outside [1, min(p, q)]
    """
    require_rank(r, min(Y.shape))
    _require_observed_lines(Y)

    mask = Y.observed_mask
    filled = np.array(Y.values)
    previous = None
    losses: list[float] = []
    converged = False

    for iteration in range(1, max_iter + 1):
        current = truncated_svd(filled, r).reconstruct()
        losses.append(float(np.sum((current - Y.values)[mask] ** 2)))

        if Y.is_complete:
            converged = True
            break
        if previous is not None:
            change = np.linalg.norm(current - previous) / max(1.0, np.linalg.norm(previous))
            if change < tol:
                converged = True
                break

        filled = np.where(mask, Y.values, current)
        previous = current

    if not converged:
        logger.warning(f"Rank-{r} completion stopped after {max_iter} iterations without converging")
    logger.debug(f"Rank-{r} completion finished after {iteration} iterations")

    return CompletionResult(
        matrix=current,
        omega_losses=losses,
        iterations=iteration,
        converged=converged,
    )


def complete_rank_r(Y: ObservedMatrix, r: int, tol: float, max_iter: int) -> np.ndarray:
    """Return the rank-r completion W₀,ᵣ of Y (see hard_impute)."""
    return hard_impute(Y, r, tol, max_iter).matrix
