"""
Tuning-parameter selection for LEARNER.

Cross-validation holds out one of k random subsamples of the observed
entries at a time, fits every grid cell on the remaining entries and scores
the held-out mean squared error. External selection fits on the full target
and scores against an independent target dataset instead.
"""
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from app.config import settings
from app.exceptions import (
    ConfigError,
    DimensionMismatch,
    EmptyHoldout,
    HoldoutNotObserved,
    IndexOutOfRange,
    TooFewObservations,
)
from app.logging_config import setup_logging
from app.schemas.fit import FitSpec, Termination
from app.schemas.selection import PenaltyGrid
from app.services.learner import FitResult, fit
from app.services.matrix_core import ObservedMatrix, TruncatedSvd, as_observed
from app.utils.rng import StreamRole, child_rng

logger = setup_logging()


@dataclass(frozen=True)
class SelectionResult:
    """Per-cell validation errors and the fit refitted (or kept) for the winning cell."""

    cells: list[tuple[float, float, float]]
    per_fold_mse: np.ndarray
    per_cell_mse: np.ndarray
    best_index: int
    final_fit: FitResult
    method: str
    folds_seed: int | None = None

    @property
    def best_lambdas(self) -> tuple[float, float, float]:
        return self.cells[self.best_index]

    @property
    def best_mse(self) -> float:
        return float(self.per_cell_mse[self.best_index])


def make_folds(Y0, k: int | None = None, seed: int = 0, rep: int = 0) -> list[np.ndarray]:
    """
    Randomly partition the observed entries of Y0 into k subsamples.

    Args:
        Y0: Target matrix; only observed entries are partitioned
        k: Number of folds (defaults to settings.CV_FOLDS)
        seed: Root seed; the permutation uses the FOLDS child stream
        rep: Repetition index of the child stream

    Returns:
        k sorted arrays of row-major flat indices, sizes differing by at most one

    Raises:
        TooFewObservations: If |Ω| < k
    """
    k = settings.CV_FOLDS if k is None else k
    if k < 1:
        raise ConfigError([f"number of folds must be positive, got {k}"])

    observed = as_observed(Y0).observed_indices()
    if observed.size < k:
        raise TooFewObservations(int(observed.size), k)

    permuted = child_rng(seed, rep=rep, role=StreamRole.FOLDS).permutation(observed)
    return [np.sort(part) for part in np.array_split(permuted, k)]


def holdout_mse(theta_hat: np.ndarray, Y, holdout) -> float:
    """
    Mean squared difference between theta_hat and Y over the holdout entries.

    Raises:
        EmptyHoldout: If the holdout set is empty
        IndexOutOfRange: If an index lies outside the matrix
        HoldoutNotObserved: If an index points at a missing entry of Y
        DimensionMismatch: If theta_hat and Y differ in shape
    """
    Y = as_observed(Y)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_hat.shape != Y.shape:
        raise DimensionMismatch("theta_hat", Y.shape, theta_hat.shape)

    holdout = np.asarray(holdout, dtype=int).ravel()
    if holdout.size == 0:
        raise EmptyHoldout()
    out_of_range = holdout[(holdout < 0) | (holdout >= Y.values.size)]
    if out_of_range.size:
        raise IndexOutOfRange(int(out_of_range[0]), Y.values.size)
    missing = holdout[~Y.observed_mask.flat[holdout]]
    if missing.size:
        raise HoldoutNotObserved(int(missing[0]))

    residual = theta_hat.flat[holdout] - Y.values.flat[holdout]
    return float(np.mean(residual ** 2))


def _fit_score(train: ObservedMatrix, source: TruncatedSvd, spec: FitSpec, Y, holdout) -> float:
    result = fit(train, source, spec)
    if result.termination is Termination.DIVERGED:
        return float("inf")
    return holdout_mse(result.theta_hat, Y, holdout)


def _fit_external(Y0: ObservedMatrix, source: TruncatedSvd, spec: FitSpec, Y_ext: ObservedMatrix):
    result = fit(Y0, source, spec)
    if result.termination is Termination.DIVERGED:
        return result, float("inf")
    return result, holdout_mse(result.theta_hat, Y_ext, Y_ext.observed_indices())


def _best_cell(per_cell_mse: np.ndarray) -> int:
    # argmin keeps the first minimum, which is the lexicographically smallest cell
    return int(np.argmin(per_cell_mse))


def _log_cells(cells, per_cell_mse: np.ndarray, best: int, method: str) -> None:
    for cell, mse in zip(cells, per_cell_mse):
        logger.info(f"{method} cell lambda1=({cell[0]:.6g}, {cell[1]:.6g}), lambda2={cell[2]:.6g}: mse={mse:.6g}")
    if not np.isfinite(per_cell_mse[best]):
        logger.warning(f"{method}: every grid cell diverged; keeping the first cell")
    logger.info(f"{method} selected lambdas {cells[best]} with mse={per_cell_mse[best]:.6g}")


def cv_select(
    Y0,
    svd_of_Y1: TruncatedSvd,
    grid: PenaltyGrid,
    spec_template: FitSpec,
    seed: int = 0,
    n_jobs: int = 1,
    k: int | None = None,
    rep: int = 0,
) -> SelectionResult:
    """
    Select penalties by k-fold entry-holdout cross-validation and refit.

    For each fold the fold's entries are masked out of Y0 in addition to the
    entries that were already missing; each grid cell is fitted on that
    training matrix and scored on the fold. The cell with the smallest mean
    MSE wins (first cell in lexicographic order on ties) and is refitted on
    the full Y0. A fold whose fit diverges scores +inf.

    Args:
        Y0: Target matrix (array with NaN for missing, or ObservedMatrix)
        svd_of_Y1: Rank-r truncated SVD of the source matrix
        grid: Penalty grid
        spec_template: Step size and stopping rules; penalties and rank are overwritten
        seed: Root seed for the fold partition
        n_jobs: joblib worker count; never affects the result
        k: Number of folds (defaults to settings.CV_FOLDS)
        rep: Repetition index used to address the fold stream

    Returns:
        SelectionResult with an (n_cells, k) table of fold MSEs

    Raises:
        TooFewObservations: If Y0 has fewer observed entries than folds
    """
    Y0 = as_observed(Y0)
    k = settings.CV_FOLDS if k is None else k
    if k < 2:
        raise ConfigError([f"cross-validation needs at least 2 folds, got {k}"])

    folds = make_folds(Y0, k, seed, rep)
    training = [Y0.with_hidden(fold) for fold in folds]
    spec = spec_template.with_rank(svd_of_Y1.rank)
    cells = grid.cells()

    logger.info(f"Cross-validating {len(cells)} cells x {k} folds with n_jobs={n_jobs}")
    scores = Parallel(n_jobs=n_jobs)(
        delayed(_fit_score)(training[f], svd_of_Y1, spec.with_penalties(*cell), Y0, folds[f])
        for cell in cells
        for f in range(k)
    )

    per_fold = np.asarray(scores, dtype=float).reshape(len(cells), k)
    per_cell = per_fold.mean(axis=1)
    best = _best_cell(per_cell)
    _log_cells(cells, per_cell, best, "cv")

    final_fit = fit(Y0, svd_of_Y1, spec.with_penalties(*cells[best]))
    return SelectionResult(
        cells=cells,
        per_fold_mse=per_fold,
        per_cell_mse=per_cell,
        best_index=best,
        final_fit=final_fit,
        method="cv",
        folds_seed=seed,
    )


def external_select(
    Y0,
    svd_of_Y1: TruncatedSvd,
    Y0_ext,
    grid: PenaltyGrid,
    spec_template: FitSpec,
    n_jobs: int = 1,
) -> SelectionResult:
    """
    Select penalties by scoring full-data fits against an external target dataset.

    Every cell is fitted once on the full Y0; its MSE is taken over all
    observed entries of Y0_ext, which may miss whole rows or columns. The
    winning fit is returned as is.

    Raises:
        DimensionMismatch: If Y0_ext and Y0 differ in shape
        EmptyObservationSet: If Y0_ext has no observed entry
    """
    Y0 = as_observed(Y0)
    Y0_ext = as_observed(Y0_ext)
    if Y0_ext.shape != Y0.shape:
        raise DimensionMismatch("Y0_ext", Y0.shape, Y0_ext.shape)

    spec = spec_template.with_rank(svd_of_Y1.rank)
    cells = grid.cells()

    logger.info(
        f"External selection over {len(cells)} cells against {Y0_ext.n_observed} "
        f"external entries with n_jobs={n_jobs}"
    )
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_fit_external)(Y0, svd_of_Y1, spec.with_penalties(*cell), Y0_ext)
        for cell in cells
    )

    fits = [result for result, _ in outcomes]
    per_cell = np.asarray([mse for _, mse in outcomes], dtype=float)
    best = _best_cell(per_cell)
    _log_cells(cells, per_cell, best, "external")

    return SelectionResult(
        cells=cells,
        per_fold_mse=per_cell.reshape(-1, 1),
        per_cell_mse=per_cell,
        best_index=best,
        final_fit=fits[best],
        method="external",
    )
