import numpy as np
import pytest

from app.exceptions import (
    EmptyObservationSet,
    EmptyRowOrColumn,
    NonFiniteInput,
    RankDeficient,
    RankOutOfRange,
)
from app.services.matrix_core import (
    ObservedMatrix,
    apply_complement_projection,
    apply_projection,
    complete_rank_r,
    frobenius_error,
    hard_impute,
    min_singular_value,
    orthonormalize,
    subspace_distance,
    truncated_svd,
)


class TestObservedMatrix:
    """Mask handling of the observed-matrix container"""

    def test_nan_marks_missing(self):
        """NaN entries become unobserved zeros"""
        m = ObservedMatrix.from_array([[1.0, np.nan], [3.0, 4.0]])
        assert m.n_observed == 3
        assert not m.is_complete
        assert m.values[0, 1] == 0.0
        assert np.isnan(m.to_array()[0, 1])

    def test_all_missing_rejected(self):
        """A matrix without observed entries is an error"""
        with pytest.raises(EmptyObservationSet):
            ObservedMatrix.from_array([[np.nan, np.nan]])

    def test_infinite_observed_entry_rejected(self):
        """Observed entries must be finite"""
        with pytest.raises(NonFiniteInput):
            ObservedMatrix.complete([[1.0, np.inf]])

    def test_with_hidden_leaves_original(self):
        """Hiding entries returns a new matrix"""
        m = ObservedMatrix.complete(np.ones((2, 3)))
        hidden = m.with_hidden(np.array([0, 4]))
        assert hidden.n_observed == 4
        assert m.is_complete

    def test_values_are_read_only(self):
        """Stored arrays cannot be mutated in place"""
        m = ObservedMatrix.complete(np.ones((2, 2)))
        with pytest.raises(ValueError):
            m.values[0, 0] = 5.0


class TestTruncatedSvd:
    """Truncated SVD and its sign convention"""

    def test_diagonal_matrix(self):
        """diag(3, 2, 1) truncated at 2"""
        svd = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(svd.singular_values, [3.0, 2.0])
        np.testing.assert_allclose(svd.U, [[1, 0], [0, 1], [0, 0]], atol=1e-12)
        np.testing.assert_allclose(svd.V, [[1, 0], [0, 1], [0, 0]], atol=1e-12)

    def test_rank_one(self):
        """Outer product of ones recovers value 2 with unit vectors"""
        svd = truncated_svd(np.ones((2, 2)), 1)
        np.testing.assert_allclose(svd.singular_values, [2.0])
        np.testing.assert_allclose(svd.U[:, 0], [1 / np.sqrt(2)] * 2)

    def test_sign_convention(self, rng):
        """Largest-magnitude entry of every left vector is positive"""
        svd = truncated_svd(rng.standard_normal((20, 6)), 4)
        pivots = np.argmax(np.abs(svd.U), axis=0)
        assert np.all(svd.U[pivots, np.arange(4)] > 0)

    def test_eckart_young(self, rng):
        """Reconstruction error equals the tail singular values"""
        M = rng.standard_normal((15, 7))
        s = np.linalg.svd(M, compute_uv=False)
        svd = truncated_svd(M, 3)
        assert frobenius_error(svd.reconstruct(), M) == pytest.approx(np.sqrt(np.sum(s[3:] ** 2)))

    def test_beats_random_rank_r(self, rng):
        """No rank-3 matrix approximates M better than the truncation"""
        M = rng.standard_normal((15, 7))
        best = frobenius_error(truncated_svd(M, 3).reconstruct(), M)
        for _ in range(50):
            W = rng.standard_normal((15, 3)) @ rng.standard_normal((3, 7))
            assert best <= frobenius_error(W, M)

    def test_scaled_factors_reconstruct(self, rng):
        """UΛ^½ (VΛ^½)ᵀ equals the truncation"""
        svd = truncated_svd(rng.standard_normal((10, 5)), 2)
        left, right = svd.scaled_factors()
        np.testing.assert_allclose(left @ right.T, svd.reconstruct(), atol=1e-12)

    @pytest.mark.parametrize("r", [0, 6])
    def test_rank_out_of_range(self, rng, r):
        """r must lie in [1, min(p, q)]"""
        with pytest.raises(RankOutOfRange):
            truncated_svd(rng.standard_normal((8, 5)), r)

    def test_missing_entries_rejected(self):
        """The SVD needs a fully observed matrix"""
        with pytest.raises(NonFiniteInput):
            truncated_svd(ObservedMatrix.from_array([[1.0, np.nan], [1.0, 2.0]]), 1)


class TestOrthonormalize:
    """QR-based orthonormalization"""

    def test_orthonormal_columns(self, rng):
        """QᵀQ = I and span(Q) = span(B)"""
        B = rng.standard_normal((12, 4))
        Q = orthonormalize(B)
        np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(apply_projection(Q, B), B, atol=1e-10)

    def test_rank_deficient(self):
        """Collinear columns are rejected"""
        B = np.array([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]])
        with pytest.raises(RankDeficient) as exc:
            orthonormalize(B)
        assert exc.value.numerical_rank == 1


class TestProjections:
    """Operator-form projections and subspace distances"""

    def test_complement_annihilates_span(self, rng):
        """P⊥(Q)Q = 0"""
        Q = orthonormalize(rng.standard_normal((10, 3)))
        np.testing.assert_allclose(apply_complement_projection(Q, Q), 0.0, atol=1e-12)

    def test_projection_split(self, rng):
        """P(Q)X + P⊥(Q)X = X"""
        Q = orthonormalize(rng.standard_normal((10, 3)))
        X = rng.standard_normal((10, 4))
        np.testing.assert_allclose(apply_projection(Q, X) + apply_complement_projection(Q, X), X, atol=1e-12)

    def test_complement_idempotent(self, rng):
        """Applying P⊥(Q) twice changes nothing"""
        Q = orthonormalize(rng.standard_normal((12, 4)))
        once = apply_complement_projection(Q, rng.standard_normal((12, 2)))
        np.testing.assert_allclose(apply_complement_projection(Q, once), once, atol=1e-12)

    def test_distance_identical_bases(self, rng):
        """Same span gives distance 0"""
        Q = orthonormalize(rng.standard_normal((10, 3)))
        R = np.linalg.qr(rng.standard_normal((3, 3)))[0]
        assert subspace_distance(Q, Q @ R) == pytest.approx(0.0, abs=1e-7)

    def test_distance_orthogonal_bases(self):
        """Orthogonal spans of ranks 1 and 1 are √2 apart"""
        e = np.eye(4)
        assert subspace_distance(e[:, :1], e[:, 1:2]) == pytest.approx(np.sqrt(2.0))

    def test_distance_matches_explicit_projectors(self, rng):
        """Agrees with ‖QaQaᵀ - QbQbᵀ‖_F"""
        Qa = orthonormalize(rng.standard_normal((9, 2)))
        Qb = orthonormalize(rng.standard_normal((9, 3)))
        explicit = np.linalg.norm(Qa @ Qa.T - Qb @ Qb.T)
        assert subspace_distance(Qa, Qb) == pytest.approx(explicit, rel=1e-10)

    def test_distance_is_a_metric(self, rng):
        """Symmetric and obeys the triangle inequality"""
        for _ in range(20):
            Qa, Qb, Qc = (orthonormalize(rng.standard_normal((9, 2))) for _ in range(3))
            assert subspace_distance(Qa, Qb) == pytest.approx(subspace_distance(Qb, Qa), rel=1e-12)
            assert subspace_distance(Qa, Qc) <= subspace_distance(Qa, Qb) + subspace_distance(Qb, Qc) + 1e-12

    def test_min_singular_value(self):
        """σ_min of diag(3, 2, 0.5)"""
        assert min_singular_value(np.diag([3.0, 2.0, 0.5])) == pytest.approx(0.5)


class TestHardImpute:
    """Rank-r completion of an incomplete target"""

    def test_complete_input_is_truncation(self, rng):
        """A fully observed matrix completes to its truncated SVD"""
        M = rng.standard_normal((12, 6))
        W = complete_rank_r(ObservedMatrix.complete(M), 2, 1e-9, 100)
        np.testing.assert_allclose(W, truncated_svd(M, 2).reconstruct(), atol=1e-12)

    def test_recovers_low_rank(self, rng):
        """An exactly rank-2 matrix with 10% missing is recovered"""
        L = rng.standard_normal((40, 2)) @ rng.standard_normal((2, 15))
        hidden = rng.random(L.shape) < 0.1
        Y = ObservedMatrix.from_array(np.where(hidden, np.nan, L))
        result = hard_impute(Y, 2, 1e-12, 2000)
        assert np.linalg.norm(result.matrix - L) / np.linalg.norm(L) < 1e-3

    def test_omega_loss_nonincreasing(self, rng):
        """The Ω-restricted error never grows"""
        M = rng.standard_normal((20, 8))
        Y = ObservedMatrix.from_array(np.where(rng.random(M.shape) < 0.2, np.nan, M))
        losses = hard_impute(Y, 3, 1e-10, 200).omega_losses
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))

    def test_empty_column(self):
        """An entirely missing column cannot be completed"""
        Y = ObservedMatrix.from_array([[1.0, np.nan], [2.0, np.nan], [3.0, np.nan]])
        with pytest.raises(EmptyRowOrColumn) as exc:
            complete_rank_r(Y, 1, 1e-9, 10)
        assert exc.value.axis == "column"
        assert exc.value.index == 1
