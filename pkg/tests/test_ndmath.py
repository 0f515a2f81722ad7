"""Dense linear algebra, seeded sampling and the Jacobi SVD."""

import numpy as np
import pytest

from py_lstm_returns.ndmath import (
    RngState, as_matrix, gaussian_fill, hadamard, matmul, svd, svd_orthonormal_factor, uniform_fill,
)
from py_lstm_returns.utils import ContractError


def _spectral_norm(m: np.ndarray, iterations: int = 500) -> float:
    """Power iteration on mᵀm"""
    v = np.ones(m.shape[1]) / np.sqrt(m.shape[1])
    for _ in range(iterations):
        w = m.T @ (m @ v)
        v = w / np.linalg.norm(w)
    return float(np.linalg.norm(m @ v))


class TestMatmul:

    def test_identity(self):
        m = gaussian_fill(RngState(1), 3, 3)
        np.testing.assert_array_equal(matmul(np.eye(3), m), m)

    def test_hand_arithmetic(self):
        out = matmul(as_matrix([[1, 2], [3, 4]]), as_matrix([[5], [6]]))
        np.testing.assert_array_equal(out, [[17.0], [39.0]])

    def test_matches_triple_loop(self):
        rng = RngState(3)
        a, b = gaussian_fill(rng, 7, 5), gaussian_fill(rng, 5, 3)
        expected = np.zeros((7, 3))
        for i in range(7):
            for j in range(3):
                for k in range(5):
                    expected[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(matmul(a, b), expected, rtol=0, atol=1e-12)

    def test_associativity(self):
        rng = RngState(4)
        a, b, c = (gaussian_fill(rng, 4, 4) for _ in range(3))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-10)

    def test_mismatch_names_both_shapes(self):
        with pytest.raises(ContractError, match='2x3.*2x3'):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))


class TestHadamard:

    def test_values(self):
        a = np.array([1.0, 2.0])
        np.testing.assert_array_equal(hadamard(a, np.array([3.0, 4.0])), [3.0, 8.0])
        np.testing.assert_array_equal(hadamard(a, np.ones(2)), a)
        np.testing.assert_array_equal(hadamard(a, np.zeros(2)), np.zeros(2))

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            hadamard(np.zeros(2), np.zeros(3))


class TestSampling:

    def test_gaussian_moments(self):
        samples = gaussian_fill(RngState(42), 1, 100000)
        assert abs(samples.mean()) < 0.02
        assert 0.97 <= samples.var() <= 1.03

    def test_gaussian_replay(self):
        np.testing.assert_array_equal(gaussian_fill(RngState(9), 4, 5), gaussian_fill(RngState(9), 4, 5))
        single = gaussian_fill(RngState(9), 1, 1)
        assert single.shape == (1, 1) and np.isfinite(single[0, 0])

    def test_uniform_range_and_mean(self):
        samples = uniform_fill(RngState(5), 1, 100000, -0.33, 0.33)
        assert samples.min() >= -0.33 and samples.max() < 0.33
        assert abs(samples.mean()) < 0.01

    def test_uniform_replay(self):
        np.testing.assert_array_equal(uniform_fill(RngState(6), 3, 3, 0.0, 1.0),
                                      uniform_fill(RngState(6), 3, 3, 0.0, 1.0))

    def test_uniform_rejects_empty_interval(self):
        with pytest.raises(ContractError):
            uniform_fill(RngState(0), 2, 2, 1.0, 1.0)

    def test_snapshot_restore_replays_stream(self):
        rng = RngState(11)
        state = rng.snapshot()
        first = gaussian_fill(rng, 2, 2)
        rng.restore(state)
        np.testing.assert_array_equal(gaussian_fill(rng, 2, 2), first)

    def test_seed_range(self):
        with pytest.raises(ContractError):
            RngState(-1)


class TestSvd:

    def test_identity_gives_signed_permutation(self):
        u = svd_orthonormal_factor(np.eye(3))
        np.testing.assert_array_equal(u.T @ u, np.eye(3))
        np.testing.assert_array_equal(np.abs(u).sum(axis=0), np.ones(3))

    def test_orthonormal_factor_n50(self):
        u = svd_orthonormal_factor(gaussian_fill(RngState(7), 50, 50))
        assert np.max(np.abs(u.T @ u - np.eye(50))) < 1e-10
        assert abs(_spectral_norm(u) - 1.0) < 1e-8

    def test_reconstruction(self):
        g = gaussian_fill(RngState(8), 10, 10)
        u, s, v = svd(g)
        assert np.max(np.abs(u @ np.diag(s) @ v.T - g)) < 1e-9

    def test_singular_values_descending_and_match_lapack(self):
        g = gaussian_fill(RngState(12), 20, 20)
        _, s, _ = svd(g, compute_v=False)
        assert np.all(np.diff(s) <= 0)
        np.testing.assert_allclose(s, np.linalg.svd(g, compute_uv=False), rtol=1e-10)

    def test_rank_deficient_input_still_orthonormal(self):
        g = np.zeros((4, 4))
        g[:, 0] = [1.0, 2.0, 3.0, 4.0]
        g[:, 1] = 2.0 * g[:, 0]
        u, s, v = svd(g)
        assert np.max(np.abs(u.T @ u - np.eye(4))) < 1e-10
        assert np.max(np.abs(u @ np.diag(s) @ v.T - g)) < 1e-9

    def test_repeated_multiplication_does_not_grow(self):
        rng = RngState(13)
        u = svd_orthonormal_factor(gaussian_fill(rng, 30, 30))
        v = gaussian_fill(rng, 30, 1)[:, 0]
        v /= np.linalg.norm(v)
        for _ in range(100):
            v = u @ v
            assert np.linalg.norm(v) <= 1.0 + 1e-8

    def test_non_square_rejected(self):
        with pytest.raises(ContractError):
            svd(np.zeros((2, 3)))
