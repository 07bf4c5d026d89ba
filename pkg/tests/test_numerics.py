import numpy as np
import pytest

from wsc.numerics import cosine, exp_scaled, l2_normalize, pairwise_cosine


class TestL2Normalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(l2_normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-15)

    def test_zero_vector_maps_to_zero(self):
        np.testing.assert_array_equal(l2_normalize([0.0, 0.0]), [0.0, 0.0])

    def test_unit_vector_unchanged(self):
        e1 = np.array([1.0, 0.0, 0.0])
        np.testing.assert_allclose(l2_normalize(e1), e1, atol=1e-15)

    def test_output_norm_is_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            v = rng.standard_normal(7)
            assert np.linalg.norm(l2_normalize(v)) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            l2_normalize([1.0, np.nan])
        with pytest.raises(ValueError):
            l2_normalize([np.inf, 0.0])


class TestCosine:
    def test_self_similarity(self):
        v = np.array([0.3, -1.2, 4.0])
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 2.0]) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        assert cosine([1.0, 0.0], [1.0, 1.0]) == pytest.approx(1.0 / np.sqrt(2), abs=1e-12)

    def test_symmetry_and_scale_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            u = rng.standard_normal(5)
            v = rng.standard_normal(5)
            assert cosine(u, v) == pytest.approx(cosine(v, u), abs=1e-12)
            alpha = float(rng.uniform(0.1, 10.0))
            assert cosine(alpha * u, v) == pytest.approx(cosine(u, v), abs=1e-12)

    def test_clamped_to_unit_interval(self):
        # nearly parallel vectors can round above 1 without the clamp
        u = np.full(64, 0.1234567)
        assert cosine(u, u * 3.0) <= 1.0

    def test_zero_norm_is_error(self):
        with pytest.raises(ValueError):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            cosine([1.0, 0.0], [1.0, 0.0, 0.0])


class TestPairwiseCosine:
    def test_orthonormal_rows_give_identity(self):
        eye = np.eye(4)
        np.testing.assert_allclose(pairwise_cosine(eye, eye), np.eye(4), atol=1e-15)

    def test_single_row_reduces_to_cosine(self):
        u = np.array([[1.0, 2.0, 3.0]])
        v = np.array([[3.0, -1.0, 0.5]])
        assert pairwise_cosine(u, v)[0, 0] == pytest.approx(cosine(u[0], v[0]), abs=1e-12)

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(2)
        U = rng.standard_normal((3, 4))
        V = rng.standard_normal((2, 4))
        got = pairwise_cosine(U, V)
        for i in range(3):
            for j in range(2):
                assert got[i, j] == pytest.approx(cosine(U[i], V[j]), abs=1e-12)

    def test_random_batches_match_oracle(self):
        rng = np.random.default_rng(3)
        U = rng.standard_normal((8, 8))
        V = rng.standard_normal((8, 8))
        got = pairwise_cosine(U, V)
        want = np.array([[cosine(U[i], V[j]) for j in range(8)] for i in range(8)])
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_symmetric_when_same_matrix(self):
        rng = np.random.default_rng(4)
        U = rng.standard_normal((5, 3))
        z = pairwise_cosine(U, U)
        np.testing.assert_allclose(z, z.T, atol=1e-12)

    def test_zero_row_is_error(self):
        U = np.zeros((2, 3))
        U[0] = [1.0, 0.0, 0.0]
        with pytest.raises(ValueError):
            pairwise_cosine(U, np.eye(3))


class TestExpScaled:
    def test_zero_gives_one(self):
        assert exp_scaled(np.zeros((2, 2)), 0.33)[0, 0] == pytest.approx(1.0)

    def test_hand_values(self):
        import math

        assert exp_scaled(np.array([[1.0]]), 0.07)[0, 0] == pytest.approx(
            math.exp(1.0 / 0.07), rel=1e-12)
        assert exp_scaled(np.array([[-1.0]]), 1.0)[0, 0] == pytest.approx(
            math.exp(-1.0), rel=1e-12)

    def test_output_bounds_for_unit_inputs(self):
        rng = np.random.default_rng(5)
        z = rng.uniform(-1, 1, size=(6, 6))
        tau = 0.25
        out = exp_scaled(z, tau)
        assert np.all(out >= np.exp(-1 / tau) - 1e-12)
        assert np.all(out <= np.exp(1 / tau) + 1e-9)

    def test_monotone_in_z_and_inverse_tau(self):
        zs = np.linspace(-1, 1, 11)
        out = exp_scaled(zs, 0.5)
        assert np.all(np.diff(out) > 0)
        taus = np.linspace(0.05, 1.0, 10)
        vals = [exp_scaled(np.array([0.7]), t)[0] for t in taus]
        assert np.all(np.diff(vals) < 0)  # increasing tau = decreasing 1/tau

    def test_non_positive_tau_rejected(self):
        for tau in (0.0, -1.0):
            with pytest.raises(ValueError):
                exp_scaled(np.ones((1, 1)), tau)
