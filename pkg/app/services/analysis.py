"""
Interpretation utilities for fitted latent factors.

Contribution scores, scree values, projection-matrix blocks for heatmaps
and the varimax rotation of a factor.
"""
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from app.config import settings
from app.exceptions import IndexOutOfRange
from app.logging_config import setup_logging
from app.services.matrix_core import TruncatedSvd, fix_signs, singular_values, truncated_svd
from app.utils.validators import require_matrix, require_rank, require_rows, require_unit_columns

logger = setup_logging()


@dataclass(frozen=True)
class ContributionScores:
    """Squared loadings: scores[i, l] is the share of factor l carried by entry i."""

    scores: np.ndarray
    axis: str

    @property
    def n_factors(self) -> int:
        return self.scores.shape[1]

    def to_frame(self, labels: list[str] | None = None) -> pd.DataFrame:
        columns = [f"factor_{l + 1}" for l in range(self.n_factors)]
        frame = pd.DataFrame(self.scores, columns=columns)
        frame.insert(0, self.axis, labels if labels is not None else range(self.scores.shape[0]))
        return frame


@dataclass(frozen=True)
class ProjectionBlocks:
    """Rows/columns S of P(Qa) and P(Qb), for side-by-side heatmaps."""

    indices: np.ndarray
    block_a: np.ndarray
    block_b: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.block_a - self.block_b


@dataclass(frozen=True)
class VarimaxResult:
    rotated: np.ndarray
    rotation: np.ndarray
    criterion: float
    iterations: int
    converged: bool


def contribution_scores(basis, axis: str = "index") -> ContributionScores:
    """
    Elementwise squares of an orthonormal basis.

    Args:
        basis: n×r array with unit-norm orthogonal columns
        axis: Label of the rows (e.g. "variant" or "phenotype")

    Raises:
        NotOrthonormal: If a column norm deviates from 1 by more than 1e-6
    """
    q = require_matrix(basis, "basis")
    require_unit_columns(q)
    return ContributionScores(scores=q ** 2, axis=axis)


def scree_values(Y, k: int) -> np.ndarray:
    """
    First k singular values of a fully observed matrix.

    Raises:
        RankOutOfRange: If k is outside [1, min(p, q)]
    """
    s = singular_values(Y)
    require_rank(k, s.shape[0])
    return s[:k]


def projection_gram(Qa, Qb, indices=None) -> ProjectionBlocks:
    """
    Submatrices P(Qa)[S, S] and P(Qb)[S, S], formed as Q[S]·Q[S]ᵀ.

    Args:
        Qa: p×ra orthonormal array
        Qb: p×rb orthonormal array
        indices: Row subset S (defaults to all rows)

    Raises:
        IndexOutOfRange: If an index is outside [0, p)
        DimensionMismatch: If Qa and Qb have different row counts
    """
    qa = require_matrix(Qa, "Qa")
    qb = require_matrix(Qb, "Qb")
    require_rows(qb, qa.shape[0], "Qb")
    p = qa.shape[0]
    subset = np.arange(p) if indices is None else np.asarray(indices, dtype=int).ravel()
    bad = subset[(subset < 0) | (subset >= p)]
    if bad.size:
        raise IndexOutOfRange(int(bad[0]), p)

    a, b = qa[subset], qb[subset]
    return ProjectionBlocks(indices=subset, block_a=a @ a.T, block_b=b @ b.T)


def varimax_criterion(V: np.ndarray) -> float:
    """Σ_l [mean_i v⁴_il - (mean_i v²_il)²], the raw varimax criterion."""
    squared = V ** 2
    return float(np.sum(np.mean(squared ** 2, axis=0) - np.mean(squared, axis=0) ** 2))


def _canonical_order(rotated: np.ndarray, rotation: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Descending column sum of squares, stable on ties; then the sign convention of truncated_svd
    order = np.argsort(-np.sum(rotated ** 2, axis=0), kind="stable")
    return fix_signs(rotated[:, order], rotation[:, order])


def varimax(V, tol: float | None = None, max_iter: int | None = None) -> VarimaxResult:
    """
    Orthogonal varimax rotation of the columns of V.

    Uses the SVD-based fixed-point iteration: R ← L·Mᵀ where
    L·S·Mᵀ = Vᵀ(q·B³ - B·diag(ΣB²)) and B = V·R. The best iterate is kept, so
    the reported criterion is never below the starting one. Columns of the
    result are ordered by descending sum of squares.

    Args:
        V: q×r array
        tol: Relative tolerance on the criterion change
        max_iter: Maximum number of iterations

    Returns:
        VarimaxResult; `converged` is False when max_iter was reached
    """
    A = require_matrix(V, "V")
    tol = settings.VARIMAX_TOL if tol is None else tol
    max_iter = settings.VARIMAX_MAX_ITER if max_iter is None else max_iter
    q, r = A.shape

    rotation = np.eye(r)
    best_rotation = rotation
    best = previous = varimax_criterion(A)
    converged = False
    iteration = 0

    for iteration in range(1, max_iter + 1):
        B = A @ rotation
        target = A.T @ (q * B ** 3 - B * np.sum(B ** 2, axis=0))
        left, _, right_t = scipy.linalg.svd(target)
        rotation = left @ right_t

        current = varimax_criterion(A @ rotation)
        if current > best:
            best, best_rotation = current, rotation
        if abs(current - previous) <= tol * max(abs(current), np.finfo(float).tiny):
            converged = True
            break
        previous = current

    if not converged:
        logger.warning(f"Varimax stopped after {max_iter} iterations without converging")

    rotated, rotation = _canonical_order(A @ best_rotation, best_rotation)
    return VarimaxResult(
        rotated=rotated,
        rotation=rotation,
        criterion=best,
        iterations=iteration,
        converged=converged,
    )


def estimate_bases(theta_hat, r: int) -> TruncatedSvd:
    """Rank-r truncated SVD of an estimate, for scoring its latent factors."""
    return truncated_svd(theta_hat, r)


def top_contributors(scores: ContributionScores, n_top: int, labels: list[str] | None = None) -> pd.DataFrame:
    """
    The n_top highest-scoring entries of every factor.

    Entries are sorted by descending score; equal scores keep input order.

    Returns:
        DataFrame with columns factor, position, index, label, score
    """
    n, r = scores.scores.shape
    labels = list(labels) if labels is not None else [str(i) for i in range(n)]
    rows = []
    for factor in range(r):
        column = scores.scores[:, factor]
        order = np.argsort(-column, kind="stable")[:n_top]
        for position, index in enumerate(order, start=1):
            rows.append(
                {
                    "factor": factor + 1,
                    "position": position,
                    "index": int(index),
                    "label": labels[index],
                    "score": float(column[index]),
                }
            )
    return pd.DataFrame(rows, columns=["factor", "position", "index", "label", "score"])
