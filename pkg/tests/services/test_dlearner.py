import numpy as np
import pytest

from app.exceptions import DimensionMismatch, EmptyRowOrColumn
from app.services.dlearner import d_learner, d_learner_missing
from app.services.matrix_core import ObservedMatrix, SourceBases, orthonormalize, truncated_svd


class TestDLearner:
    """Projection of the target onto the source spaces"""

    def test_matches_explicit_projectors(self, rng):
        """Equals P(Û₁)·Y₀·P(V̂₁) formed explicitly"""
        U1 = orthonormalize(rng.standard_normal((12, 3)))
        V1 = orthonormalize(rng.standard_normal((7, 3)))
        Y0 = rng.standard_normal((12, 7))
        expected = U1 @ U1.T @ Y0 @ V1 @ V1.T
        np.testing.assert_allclose(d_learner(Y0, SourceBases(U1, V1)), expected, atol=1e-12)

    def test_idempotent(self, rng):
        """Projecting a projection changes nothing"""
        bases = truncated_svd(rng.standard_normal((10, 6)), 2).bases()
        once = d_learner(rng.standard_normal((10, 6)), bases)
        np.testing.assert_allclose(d_learner(once, bases), once, atol=1e-12)

    def test_rank_at_most_r(self, rng):
        bases = truncated_svd(rng.standard_normal((10, 6)), 2).bases()
        estimate = d_learner(rng.standard_normal((10, 6)), bases)
        assert np.linalg.matrix_rank(estimate, tol=1e-9) <= 2

    def test_shared_spaces_recover_signal(self):
        """A target inside the source spaces is returned unchanged"""
        svd = truncated_svd(np.diag([4.0, 3.0, 0.0, 0.0]), 2)
        target = np.diag([1.0, 7.0, 0.0, 0.0])
        np.testing.assert_allclose(d_learner(target, svd.bases()), target, atol=1e-12)

    def test_shape_mismatch(self, rng):
        bases = truncated_svd(rng.standard_normal((10, 6)), 2).bases()
        with pytest.raises(DimensionMismatch):
            d_learner(rng.standard_normal((9, 6)), bases)


class TestDLearnerMissing:
    """Projection of the rank-r completion"""

    def test_complete_target_uses_direct_path(self, small_pair, small_source):
        _, Y0, _ = small_pair
        direct = d_learner(Y0, small_source.bases())
        via_missing = d_learner_missing(ObservedMatrix.complete(Y0), small_source.bases(), 3, 1e-9, 100)
        np.testing.assert_allclose(via_missing, direct)

    def test_incomplete_target(self, small_pair, small_source, rng):
        """Result lies in the source spaces"""
        _, Y0, _ = small_pair
        Y = ObservedMatrix.from_array(np.where(rng.random(Y0.shape) < 0.15, np.nan, Y0))
        estimate = d_learner_missing(Y, small_source.bases(), 3, 1e-9, 500)
        np.testing.assert_allclose(d_learner(estimate, small_source.bases()), estimate, atol=1e-10)

    def test_empty_row(self, small_source):
        values = np.ones((30, 8))
        values[4] = np.nan
        with pytest.raises(EmptyRowOrColumn):
            d_learner_missing(ObservedMatrix.from_array(values), small_source.bases(), 3, 1e-9, 10)
