import numpy as np
import pytest

from rrrmt.exceptions import PoleError, SingularDesignError
from rrrmt.perturbation import (SecularFunction, det_identity_check, secular_eval,
                                secular_zeros)


def _instance(rng, p, r, s):
    Z = rng.standard_normal((p, r))
    U = np.linalg.qr(rng.standard_normal((p, s)))[0]
    V = np.linalg.qr(rng.standard_normal((r, s)))[0]
    thetas = np.sort(rng.uniform(0.5, 5.0, s))[::-1]
    return Z, U, V, thetas


class TestDeterminantIdentity:
    def test_rank_one(self):
        rng = np.random.default_rng(0)
        Psi = rng.standard_normal((4, 4))
        lhs, rhs = det_identity_check(Psi, [[1.7]], rng.standard_normal((4, 1)),
                                      rng.standard_normal((1, 4)), 5.0)
        assert abs(lhs - rhs) <= 1e-9 * abs(lhs)

    def test_zero_perturbation(self):
        rng = np.random.default_rng(1)
        Psi = rng.standard_normal((5, 5))
        lhs, rhs = det_identity_check(Psi, np.diag([2.0, 3.0]), np.zeros((5, 2)),
                                      rng.standard_normal((2, 5)), 7.0)
        assert lhs == pytest.approx(np.linalg.det(7.0 * np.eye(5) - Psi))
        assert rhs == pytest.approx(lhs)

    def test_diagonal_case(self):
        n = 5
        e1 = np.eye(n)[:, :1]
        lhs, rhs = det_identity_check(np.zeros((n, n)), [[1.0]], e1, e1.T, 2.0)
        assert lhs == pytest.approx(2.0 ** (n - 1) * (2.0 - 1.0))
        assert rhs == pytest.approx(lhs)

    def test_random_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n, s = rng.integers(3, 9), rng.integers(1, 4)
            Psi = rng.standard_normal((n, n))
            t = np.abs(np.linalg.eigvals(Psi)).max() + rng.uniform(0.5, 2.0)
            lhs, rhs = det_identity_check(Psi, rng.standard_normal((s, s)) + 3 * np.eye(s),
                                          rng.standard_normal((n, s)),
                                          rng.standard_normal((s, n)), t)
            assert abs(lhs - rhs) <= 1e-9 * abs(lhs)

    def test_singular_D(self):
        with pytest.raises(SingularDesignError):
            det_identity_check(np.eye(3), np.zeros((1, 1)), np.ones((3, 1)),
                               np.ones((1, 3)), 5.0)

    def test_eigenvalue_t(self):
        with pytest.raises(SingularDesignError):
            det_identity_check(np.eye(3), [[1.0]], np.ones((3, 1)), np.ones((1, 3)), 1.0)


class TestSecular:
    def test_zeros_match_svd(self):
        rng = np.random.default_rng(3)
        Z, U, V, thetas = _instance(rng, 6, 8, 2)
        sf = SecularFunction(Z, U, V, thetas)
        zeros = secular_zeros(sf)
        target = np.linalg.svd(Z + U @ np.diag(thetas) @ V.T, compute_uv=False)
        for z in zeros:
            assert np.min(np.abs(target - z)) < 1e-8
        top = zeros[zeros > sf.noise_singulars[0]]
        np.testing.assert_allclose(top, target[:top.size], atol=1e-8)

    def test_rank_one_expansion(self):
        rng = np.random.default_rng(4)
        Z, U, V, thetas = _instance(rng, 5, 7, 1)
        sf = SecularFunction(Z, U, V, thetas)
        t = 1.3 * sf.noise_singulars[0]
        u, v, th = U[:, 0], V[:, 0], thetas[0]
        Rp = np.linalg.inv(t * t * np.eye(5) - Z @ Z.T)
        Rr = np.linalg.inv(t * t * np.eye(7) - Z.T @ Z)
        expected = (t * v @ Rr @ v) * (t * u @ Rp @ u) - (u @ Rp @ Z @ v - 1 / th) ** 2
        assert secular_eval(sf, t) == pytest.approx(expected, rel=1e-10)

    def test_large_theta_limit(self):
        # with Theta^-1 -> 0 the zeros above the bulk solve the diagonal-block product
        rng = np.random.default_rng(5)
        Z, U, V, _ = _instance(rng, 4, 6, 1)
        big = SecularFunction(Z, U, V, [1e9])
        t = 2.0 * big.noise_singulars[0]
        M = big.matrix(t)
        assert np.linalg.det(M) == pytest.approx(M[0, 0] * M[1, 1] - M[0, 1] ** 2, rel=1e-9)
        assert abs(M[0, 1] - (U[:, 0] @ np.linalg.solve(t * t * np.eye(4) - Z @ Z.T, Z @ V[:, 0]))) < 1e-8

    def test_pole(self):
        rng = np.random.default_rng(6)
        sf = SecularFunction(*_instance(rng, 4, 4, 1))
        with pytest.raises(PoleError):
            secular_eval(sf, sf.noise_singulars[1])
        with pytest.raises(PoleError):
            secular_eval(sf, -1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_multiset(self, seed):
        rng = np.random.default_rng(100 + seed)
        for _ in range(20):
            p, r = rng.integers(2, 13, size=2)
            s = rng.integers(1, min(3, p, r) + 1)
            Z, U, V, thetas = _instance(rng, p, r, s)
            sf = SecularFunction(Z, U, V, thetas)
            zeros = secular_zeros(sf)
            target = np.linalg.svd(Z + U @ np.diag(thetas) @ V.T, compute_uv=False)
            noise = sf.noise_singulars
            fresh = [x for x in target if x > 1e-9 and np.min(np.abs(noise - x)) > 1e-7]
            assert len(fresh) == zeros.size
            np.testing.assert_allclose(np.sort(fresh), np.sort(zeros), atol=1e-7)
