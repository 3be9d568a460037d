import numpy as np

from app.utils.rng import StreamRole, child_rng, generator_identity


class TestChildRng:
    """Streams addressed by (seed, rep, role)"""

    def test_same_address_same_draws(self):
        a = child_rng(7, 2, StreamRole.TARGET_NOISE).standard_normal(5)
        b = child_rng(7, 2, StreamRole.TARGET_NOISE).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_roles_are_independent_streams(self):
        a = child_rng(7, 2, StreamRole.TARGET_NOISE).standard_normal(5)
        b = child_rng(7, 2, StreamRole.SOURCE_NOISE).standard_normal(5)
        c = child_rng(7, 3, StreamRole.TARGET_NOISE).standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_identity_names_numpy_version(self):
        assert np.__version__ in generator_identity()
        assert "PCG64" in generator_identity()
