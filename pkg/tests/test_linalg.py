import itertools

import numpy as np
import pytest

from ttembed.linalg import ShapeError, matmul, numerical_rank, permute, reshape, svd


class TestReshape:
    def test_column_major_semantics(self):
        t = np.reshape(np.arange(6.0), (6,), order="F")
        m = reshape(t, (2, 3))
        # first index fastest: flat 1 + 2*2 = 5
        assert m[1, 2] == 5.0

    def test_roundtrip_identity(self):
        t = np.arange(6.0)
        back = reshape(reshape(t, (2, 3)), (6,))
        assert np.array_equal(back, t)

    def test_flatten_matches_enumeration(self):
        rng = np.random.default_rng(0)
        t = reshape(rng.standard_normal(8), (2, 2, 2))
        flat = reshape(t, (8,))
        for k in range(8):
            i1, i2, i3 = k % 2, (k // 2) % 2, k // 4
            assert flat[k] == t[i1, i2, i3]

    def test_size_mismatch(self):
        with pytest.raises(ShapeError):
            reshape(np.arange(6.0), (2, 2))

    def test_roundtrip_random_dims(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            order = int(rng.integers(1, 7))
            dims = tuple(int(rng.integers(1, 4)) for _ in range(order))
            t = rng.standard_normal(int(np.prod(dims)))
            back = reshape(reshape(t, dims), (t.size,))
            assert np.array_equal(back, t)


class TestPermute:
    def test_transpose(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((2, 3))
        mt = permute(m, (1, 0))
        for i in range(2):
            for j in range(3):
                assert mt[j, i] == m[i, j]

    def test_identity_perm(self):
        m = np.random.default_rng(3).standard_normal((4, 5))
        assert np.array_equal(permute(m, (0, 1)), m)

    def test_exhaustive_index_math(self):
        rng = np.random.default_rng(4)
        t = rng.standard_normal((2, 3, 4))
        p = permute(t, (2, 0, 1))
        for i, j, k in itertools.product(range(2), range(3), range(4)):
            assert p[k, i, j] == t[i, j, k]

    def test_composition(self):
        rng = np.random.default_rng(5)
        t = rng.standard_normal((2, 3, 4, 2))
        p = (2, 0, 3, 1)
        q = (1, 3, 0, 2)
        qp = tuple(p[i] for i in q)
        assert np.array_equal(permute(permute(t, p), q), permute(t, qp))

    def test_invalid(self):
        with pytest.raises(ShapeError):
            permute(np.zeros((2, 2)), (0, 0))


class TestMatmul:
    def test_identity(self):
        a = np.random.default_rng(6).standard_normal((4, 4))
        assert np.array_equal(matmul(np.eye(4), a), a)

    def test_scalar(self):
        assert matmul(np.array([[2.0]]), np.array([[3.0]]))[0, 0] == 6.0

    def test_vs_triple_loop(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((4, 2))
        want = np.zeros((3, 2))
        for i in range(3):
            for j in range(2):
                for k in range(4):
                    want[i, j] += a[i, k] * b[k, j]
        got = matmul(a, b)
        assert np.max(np.abs(got - want)) <= 1e-15 * np.max(np.abs(want))

    def test_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))


class TestSvd:
    def test_diagonal(self):
        res = svd(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(res.singular_values, [3.0, 2.0, 1.0])

    def test_rank_one(self):
        rng = np.random.default_rng(8)
        m = np.outer(rng.standard_normal(6), rng.standard_normal(4))
        s = svd(m).singular_values
        assert s[0] > 1e-8
        assert np.all(s[1:] < 1e-12 * s[0])

    @pytest.mark.parametrize("shape", [(8, 5), (5, 8), (16, 16), (64, 64), (1, 1)])
    def test_reconstruction_and_orthonormality(self, shape):
        rng = np.random.default_rng(sum(shape))
        m = rng.standard_normal(shape)
        res = svd(m)
        rec = res.u @ np.diag(res.singular_values) @ res.vt
        assert np.linalg.norm(rec - m) <= 1e-10 * np.linalg.norm(m)
        k = res.singular_values.size
        assert np.linalg.norm(res.u.T @ res.u - np.eye(k)) < 1e-10
        assert np.linalg.norm(res.vt @ res.vt.T - np.eye(k)) < 1e-10
        assert np.all(np.diff(res.singular_values) <= 0)
        assert np.all(res.singular_values >= 0)

    def test_sign_convention(self):
        rng = np.random.default_rng(9)
        m = rng.standard_normal((7, 5))
        res = svd(m)
        piv = np.argmax(np.abs(res.u), axis=0)
        assert np.all(res.u[piv, np.arange(5)] > 0)

    def test_zero_matrix(self):
        res = svd(np.zeros((4, 3)))
        assert np.all(res.singular_values == 0)
        assert np.linalg.norm(res.u.T @ res.u - np.eye(3)) < 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestNumericalRank:
    def test_zero(self):
        assert numerical_rank(np.zeros((4, 4))) == 0

    def test_identity(self):
        assert numerical_rank(np.eye(5)) == 5

    def test_rank_one_plus_noise(self):
        rng = np.random.default_rng(10)
        m = np.outer(rng.standard_normal(16), rng.standard_normal(16))
        m += 1e-15 * rng.standard_normal((16, 16))
        assert numerical_rank(m) == 1

    def test_gram_preserves_rank(self):
        for seed in range(5):
            m = np.random.default_rng(seed).standard_normal((10, 10))
            if seed % 2:
                m[:, -1] = m[:, 0]  # make it exactly deficient
            assert numerical_rank(m @ m.T) == numerical_rank(m)
