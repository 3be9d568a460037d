"""
Direct-projection estimator (D-LEARNER).

Projects the target matrix onto the source latent spaces:
Θ̂ = P(Û₁)·Y₀·P(V̂₁), evaluated as Û₁·((Û₁ᵀY₀)·V̂₁)·V̂₁ᵀ so that cost is
O(pqr) and no p×p or q×q projection is formed.
"""
import numpy as np

from app.exceptions import DimensionMismatch
from app.logging_config import setup_logging
from app.services.matrix_core import ObservedMatrix, SourceBases, complete_rank_r, dense

logger = setup_logging()


def d_learner(Y0, bases: SourceBases) -> np.ndarray:
    """
    Project a fully observed target matrix onto the source row and column spaces.

    Args:
        Y0: p×q fully observed target matrix
        bases: Source bases Û₁ (p×r), V̂₁ (q×r)

    Returns:
        p×q estimate of rank at most r

    Raises:
        DimensionMismatch: When Y0 does not match the bases
    """
    y0 = dense(Y0)
    if y0.shape != (bases.U1.shape[0], bases.V1.shape[0]):
        raise DimensionMismatch("Y0", (bases.U1.shape[0], bases.V1.shape[0]), y0.shape)

    core = (bases.U1.T @ y0) @ bases.V1
    return bases.U1 @ core @ bases.V1.T


def d_learner_missing(
    Y0: ObservedMatrix,
    bases: SourceBases,
    r: int,
    tol: float,
    max_iter: int,
) -> np.ndarray:
    """
    D-LEARNER for an incomplete target: project the rank-r completion W₀,ᵣ.

    Raises:
        EmptyRowOrColumn / RankOutOfRange: Propagated from the completion
    """
    if Y0.is_complete:
        return d_learner(Y0, bases)

    completed = complete_rank_r(Y0, r, tol, max_iter)
    logger.debug(f"D-LEARNER applied to rank-{r} completion of a {Y0.p}x{Y0.q} target")
    return d_learner(completed, bases)
