"""
Holdout comparison of estimators on a real target/source pair.

The observed target entries are split into k folds. For each fold every
method is trained on the remaining entries and judged by the squared errors
on the held-out entries.
"""
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.config import settings
from app.logging_config import setup_logging
from app.schemas.fit import FitSpec
from app.services.dlearner import d_learner_missing
from app.services.learner import fit
from app.services.matrix_core import ObservedMatrix, TruncatedSvd, as_observed, complete_rank_r
from app.services.model_select import make_folds

logger = setup_logging()

COMPARISON_METHODS = ("Learner", "DLearner", "TargetHardImpute", "SourceSvd")
COMPARISON_FOLDS = 5


def _estimates(train: ObservedMatrix, source: TruncatedSvd, spec: FitSpec) -> dict[str, np.ndarray]:
    r = source.rank
    tol, max_iter = settings.COMPLETION_TOL, settings.COMPLETION_MAX_ITER
    return {
        "Learner": fit(train, source, spec).theta_hat,
        "DLearner": d_learner_missing(train, source.bases(), r, tol, max_iter),
        "TargetHardImpute": complete_rank_r(train, r, tol, max_iter),
        "SourceSvd": source.reconstruct(),
    }


def _score_fold(fold: int, Y0: ObservedMatrix, holdout: np.ndarray, source: TruncatedSvd, spec: FitSpec):
    train = Y0.with_hidden(holdout)
    truth = Y0.values.flat[holdout]
    rows = []
    for method, estimate in _estimates(train, source, spec).items():
        squared = (estimate.flat[holdout] - truth) ** 2
        rows.append(
            {
                "fold": fold,
                "method": method,
                "mse": float(squared.mean()),
                "q025": float(np.quantile(squared, 0.025)),
                "q975": float(np.quantile(squared, 0.975)),
            }
        )
    return rows


def compare_methods(
    Y0,
    svd_of_Y1: TruncatedSvd,
    lambdas: tuple[float, float, float],
    spec_template: FitSpec,
    k: int = COMPARISON_FOLDS,
    seed: int = 0,
    n_jobs: int = 1,
) -> pd.DataFrame:
    """
    Compare LEARNER, D-LEARNER, target-only hard imputation and the source SVD.

    Args:
        Y0: Target matrix (NaN = missing)
        svd_of_Y1: Rank-r truncated SVD of the source matrix
        lambdas: Fixed (λ₁,₁, λ₁,₂, λ₂) for LEARNER
        spec_template: Step size and stopping rules for LEARNER
        k: Number of folds
        seed: Root seed of the fold partition
        n_jobs: joblib workers across folds

    Returns:
        DataFrame with one row per (fold, method): mse, q025, q975 of the
        held-out squared errors

    Raises:
        TooFewObservations: If Y0 has fewer observed entries than folds
        EmptyRowOrColumn: If removing a fold empties a row or column of Y0
    """
    Y0 = as_observed(Y0)
    spec = spec_template.with_rank(svd_of_Y1.rank).with_penalties(*lambdas)
    folds = make_folds(Y0, k, seed)

    logger.info(f"Comparing {len(COMPARISON_METHODS)} methods over {k} folds at rank {svd_of_Y1.rank}")
    per_fold = Parallel(n_jobs=n_jobs)(
        delayed(_score_fold)(f, Y0, holdout, svd_of_Y1, spec) for f, holdout in enumerate(folds)
    )

    table = pd.DataFrame([row for rows in per_fold for row in rows], columns=["fold", "method", "mse", "q025", "q975"])
    for method, mse in table.groupby("method", sort=False)["mse"].mean().items():
        logger.info(f"{method}: mean holdout mse={mse:.6g}")
    return table
