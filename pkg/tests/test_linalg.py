import numpy as np
import pytest

from cla.errors import (
    CapacityError,
    ConvergenceError,
    DimensionError,
    NumericError,
    SingularMatrixError,
)
from cla.linalg import (
    covariance,
    real_schur,
    ridge_solve,
    solve_sylvester,
    solve_sylvester_oracle,
)


def schur_structure_ok(t):
    """Quasi-upper-triangular: exact zeros below the first subdiagonal and
    no two adjacent nonzero subdiagonal entries."""
    n = t.shape[0]
    if not np.all(t[np.tril_indices(n, -2)] == 0.0):
        return False
    sub = np.diagonal(t, -1)
    return not any(sub[i] != 0 and sub[i + 1] != 0 for i in range(len(sub) - 1))


class TestRealSchur:
    def test_identity(self):
        f = real_schur(np.eye(3))
        assert np.array_equal(f.t, np.eye(3))
        assert np.array_equal(f.q, np.eye(3))

    def test_diagonal_keeps_eigenvalues(self):
        f = real_schur(np.diag([3.0, 1.0, 2.0]))
        assert sorted(np.diag(f.t)) == [1.0, 2.0, 3.0]
        assert schur_structure_ok(f.t)

    def test_seeded_reconstruction(self):
        rng = np.random.default_rng(42)
        m = rng.standard_normal((6, 6))
        f = real_schur(m)
        assert np.linalg.norm(f.q @ f.t @ f.q.T - m) <= 1e-8 * (
            1 + np.linalg.norm(m)
        )

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 21])
    def test_random_matrices(self, n):
        rng = np.random.default_rng(n)
        m = rng.standard_normal((n, n))
        f = real_schur(m)
        assert np.linalg.norm(f.q.T @ f.q - np.eye(n)) <= 1e-10 * n
        assert np.linalg.norm(f.q @ f.t @ f.q.T - m) <= 1e-8 * (
            1 + np.linalg.norm(m)
        )
        assert schur_structure_ok(f.t)

    def test_eigenvalues_match_numpy(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((12, 12))
        f = real_schur(m)
        got = np.sort_complex(np.linalg.eigvals(f.t))
        want = np.sort_complex(np.linalg.eigvals(m))
        assert np.abs(got - want).max() < 1e-10

    @pytest.mark.parametrize(
        "m",
        [
            np.zeros((4, 4)),
            np.eye(5) + np.diag(np.ones(4), 1),  # Jordan block
            np.diag(np.ones(5), -1),  # nilpotent
            np.array([[0.0, -1.0], [1.0, 0.0]]),  # rotation, complex pair
            np.roll(np.eye(7), 1, axis=0),  # permutation cycle
        ],
        ids=["zero", "jordan", "nilpotent", "rotation", "cycle"],
    )
    def test_hard_cases(self, m):
        f = real_schur(m)
        n = m.shape[0]
        assert np.linalg.norm(f.q @ f.t @ f.q.T - m) <= 1e-8 * (
            1 + np.linalg.norm(m)
        )
        assert np.linalg.norm(f.q.T @ f.q - np.eye(n)) <= 1e-10 * n
        assert schur_structure_ok(f.t)

    def test_symmetric_becomes_diagonal(self):
        rng = np.random.default_rng(9)
        m = rng.standard_normal((10, 10))
        m = m + m.T
        f = real_schur(m)
        assert np.all(np.diagonal(f.t, -1) == 0.0)

    def test_determinism(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((9, 9))
        f1 = real_schur(m)
        f2 = real_schur(m.copy())
        assert np.array_equal(f1.q, f2.q)
        assert np.array_equal(f1.t, f2.t)

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            real_schur(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(NumericError):
            real_schur(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_exhausted_iteration_cap_reports_count(self, monkeypatch):
        import cla.linalg

        monkeypatch.setattr(cla.linalg, "QR_ITERATION_CAP_FACTOR", 0)
        rng = np.random.default_rng(0)
        with pytest.raises(ConvergenceError) as err:
            real_schur(rng.standard_normal((6, 6)))
        assert err.value.iterations == 0


class TestSolveSylvester:
    def test_identity_case(self):
        w = solve_sylvester(np.eye(2), np.eye(2), 2.0 * np.eye(2))
        assert np.abs(w - np.eye(2)).max() < 1e-12

    def test_degenerate_a(self):
        rng = np.random.default_rng(0)
        c = rng.standard_normal((2, 2))
        w = solve_sylvester(np.zeros((2, 2)), np.eye(2), c)
        assert np.abs(w - c).max() < 1e-12

    def test_seeded_spd_matches_oracle(self):
        rng = np.random.default_rng(11)
        ra = rng.standard_normal((4, 4))
        a = ra @ ra.T + 4 * np.eye(4)
        rb = rng.standard_normal((3, 3))
        b = rb @ rb.T + 3 * np.eye(3)
        c = rng.standard_normal((4, 3))
        w = solve_sylvester(a, b, c)
        w_ref = solve_sylvester_oracle(a, b, c)
        assert np.abs(w - w_ref).max() <= 1e-8

    @pytest.mark.parametrize("seed", range(20))
    def test_oracle_equivalence_and_residual(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 9))
        d = int(rng.integers(1, 9))
        ra = rng.standard_normal((k, k))
        a = ra @ ra.T + k * np.eye(k)
        rb = rng.standard_normal((d, d))
        b = rb @ rb.T + d * np.eye(d)
        c = rng.standard_normal((k, d))
        w = solve_sylvester(a, b, c)
        assert np.abs(w - solve_sylvester_oracle(a, b, c)).max() <= 1e-8
        res = np.linalg.norm(a @ w + w @ b - c)
        assert res <= 1e-8 * (1 + np.linalg.norm(c))

    def test_complex_spectrum_blocks(self):
        # rotation-heavy a exercises the 2x2-block back-substitution
        a = np.kron(np.eye(2), [[1.0, -5.0], [5.0, 1.0]])
        rng = np.random.default_rng(2)
        b = np.diag([1.0, 2.0, 3.0])
        c = rng.standard_normal((4, 3))
        w = solve_sylvester(a, b, c)
        res = np.linalg.norm(a @ w + w @ b - c)
        assert res <= 1e-8 * (1 + np.linalg.norm(c))

    def test_shared_eigenvalue_raises(self):
        with pytest.raises(SingularMatrixError, match="eigenvalue"):
            solve_sylvester(
                np.diag([1.0, 2.0]), np.diag([-2.0, 5.0]), np.ones((2, 2))
            )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            solve_sylvester(np.eye(2), np.eye(3), np.ones((3, 3)))


class TestSylvesterOracle:
    def test_scalar(self):
        w = solve_sylvester_oracle(np.eye(1), np.eye(1), np.array([[4.0]]))
        assert w[0, 0] == pytest.approx(2.0)

    def test_diagonal_by_hand(self):
        # 1*w1 + 3*w1 = 4 ; 2*w2 + 3*w2 = 10
        w = solve_sylvester_oracle(
            np.diag([1.0, 2.0]), np.array([[3.0]]), np.array([[4.0], [10.0]])
        )
        assert np.abs(w - np.array([[1.0], [2.0]])).max() < 1e-12

    def test_residual_on_random_system(self):
        rng = np.random.default_rng(77)
        a = rng.standard_normal((5, 5)) + 10 * np.eye(5)
        b = rng.standard_normal((5, 5)) + 10 * np.eye(5)
        c = rng.standard_normal((5, 5))
        w = solve_sylvester_oracle(a, b, c)
        assert np.linalg.norm(a @ w + w @ b - c) <= 1e-10 * np.linalg.norm(c)

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            solve_sylvester_oracle(
                np.eye(65), np.eye(64), np.zeros((65, 64))
            )

    def test_singular_system(self):
        with pytest.raises(SingularMatrixError):
            solve_sylvester_oracle(
                np.diag([1.0, 2.0]), np.diag([-1.0, 3.0]), np.ones((2, 2))
            )


class TestRidgeSolve:
    def test_identity(self):
        x = ridge_solve(np.eye(2), np.array([[1.0], [2.0]]), 0.0)
        assert np.abs(x - [[1.0], [2.0]]).max() < 1e-12

    def test_pure_regularizer(self):
        x = ridge_solve(np.zeros((2, 2)), np.array([[3.0], [3.0]]), 1.0)
        assert np.abs(x - [[3.0], [3.0]]).max() < 1e-12

    def test_diagonal_hand_solved(self):
        # (1+0.5)x = 3 ; (3+0.5)x = 7
        x = ridge_solve(np.diag([1.0, 3.0]), np.array([[3.0], [7.0]]), 0.5)
        assert np.abs(x - [[2.0], [2.0]]).max() < 1e-12

    def test_asymmetric_rejected(self):
        g = np.array([[1.0, 1e-6], [0.0, 1.0]])
        with pytest.raises(DimensionError):
            ridge_solve(g, np.ones((2, 1)), 0.0)

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            ridge_solve(np.zeros((2, 2)), np.ones((2, 1)), 0.0)


class TestCovariance:
    def test_single_column_is_zero(self):
        assert np.array_equal(covariance(np.array([[3.0], [1.0]])),
                              np.zeros((2, 2)))

    def test_two_points_1d(self):
        assert covariance(np.array([[1.0, -1.0]]))[0, 0] == pytest.approx(1.0)

    def test_matches_bruteforce_loop(self):
        rng = np.random.default_rng(8)
        z = rng.standard_normal((2, 3))
        mean = z.mean(axis=1)
        ref = np.zeros((2, 2))
        for i in range(3):
            diff = z[:, i] - mean
            ref += np.outer(diff, diff)
        ref /= 3
        assert np.abs(covariance(z) - ref).max() <= 1e-12

    def test_symmetric_psd(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal((5, 20))
        cov = covariance(z)
        assert np.array_equal(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() >= -1e-10

    def test_empty_rejected(self):
        with pytest.raises(DimensionError):
            covariance(np.zeros((3, 0)))


class TestDeterminism:
    def test_sylvester_bitwise_repeatable(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((6, 6)) + 6 * np.eye(6)
        b = rng.standard_normal((4, 4)) + 6 * np.eye(4)
        c = rng.standard_normal((6, 4))
        assert np.array_equal(
            solve_sylvester(a, b, c), solve_sylvester(a.copy(), b.copy(), c.copy())
        )
