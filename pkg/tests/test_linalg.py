import numpy as np
import pytest

from sharpbfgs.linalg import (
    NotPositiveDefinite,
    SpdMatrix,
    UpperTriangular,
    inv_cholesky,
    inv_quad_form,
    quad_form,
    solve,
    trace_solve,
)

from conftest import random_spd, spd_with_spectrum


class TestSpdMatrix:
    def test_symmetrizes_on_construction(self):
        m = SpdMatrix([[2.0, 0.3], [0.1, 2.0]])
        assert m.a[0, 1] == m.a[1, 0] == pytest.approx(0.2)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            SpdMatrix([[1.0, 0.0], [0.0, -1.0]])

    def test_rejects_tiny_pivot(self):
        # Positive definite, but the trailing pivot is below the relative floor.
        with pytest.raises(NotPositiveDefinite):
            SpdMatrix(np.diag([1.0, 1e-16]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            SpdMatrix(np.ones((2, 3)))

    def test_factor_reconstructs(self, rng):
        m = random_spd(rng, 6)
        rec = m.chol @ m.chol.T
        assert np.linalg.norm(rec - m.a) <= 1e-10 * np.linalg.norm(m.a)

    def test_logdet_matches_slogdet(self, rng):
        m = random_spd(rng, 5)
        _, expected = np.linalg.slogdet(m.a)
        assert m.logdet() == pytest.approx(expected, rel=1e-12)


class TestUpperTriangular:
    def test_rejects_nonpositive_diagonal(self):
        with pytest.raises(ValueError):
            UpperTriangular(np.diag([1.0, 0.0]))

    def test_rejects_lower_triangle(self):
        with pytest.raises(ValueError):
            UpperTriangular(np.array([[1.0, 0.0], [0.5, 1.0]]))


class TestInvCholesky:
    def test_identity(self):
        r = inv_cholesky(SpdMatrix(np.eye(3)))
        np.testing.assert_allclose(r.entries, np.eye(3))

    def test_diagonal(self):
        r = inv_cholesky(SpdMatrix(np.diag([4.0, 9.0])))
        np.testing.assert_allclose(r.entries, np.diag([0.5, 1.0 / 3.0]))

    def test_random_inverse_factor(self, rng):
        # Oracle: direct multiplication m (R'R) must be the identity.
        m = random_spd(rng, 5)
        r = inv_cholesky(m).entries
        residual = np.linalg.norm(m.a @ (r.T @ r) - np.eye(5))
        assert residual <= 1e-8 * np.sqrt(5)

    @pytest.mark.parametrize("d", [2, 8, 33])
    def test_round_trip_bound(self, rng, d):
        m = random_spd(rng, d, lo=0.1, hi=50.0)
        r = inv_cholesky(m).entries
        assert np.linalg.norm(m.a @ (r.T @ r) - np.eye(d)) <= 1e-8 * np.sqrt(d)


class TestSolve:
    def test_identity(self, rng):
        b = rng.standard_normal(4)
        np.testing.assert_allclose(solve(SpdMatrix(np.eye(4)), b), b)

    def test_diagonal(self):
        x = solve(SpdMatrix(np.diag([2.0, 4.0])), np.array([2.0, 4.0]))
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_residual_random(self, rng):
        m = random_spd(rng, 6)
        b = np.ones(6)
        x = solve(m, b)
        assert np.linalg.norm(m.a @ x - b) <= 1e-9 * np.linalg.norm(b)

    def test_residual_ill_conditioned(self, rng):
        # Condition number 1e6 at d = 512.
        d = 512
        evals = np.exp(np.linspace(0.0, np.log(1e6), d))
        m = spd_with_spectrum(rng, evals)
        b = rng.standard_normal(d)
        x = solve(m, b)
        assert np.linalg.norm(m.a @ x - b) <= 1e-9 * np.linalg.norm(b)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            solve(SpdMatrix(np.eye(3)), np.ones(4))


class TestQuadForm:
    def test_identity_basis_vector(self):
        assert quad_form(SpdMatrix(np.eye(3)), np.array([1.0, 0, 0])) == 1.0

    def test_diagonal(self):
        assert quad_form(SpdMatrix(np.diag([3.0, 5.0])), np.ones(2)) == 8.0

    def test_matches_double_loop(self, rng):
        m = random_spd(rng, 7)
        u = rng.standard_normal(7)
        expected = sum(u[i] * m.a[i, j] * u[j] for i in range(7) for j in range(7))
        assert quad_form(m, u) == pytest.approx(expected, rel=1e-12)

    def test_positive_on_random_directions(self, rng):
        m = random_spd(rng, 5)
        for _ in range(100):
            u = rng.standard_normal(5)
            assert quad_form(m, u) > 0.0

    def test_inv_quad_form_matches_solve(self, rng):
        m = random_spd(rng, 6)
        u = rng.standard_normal(6)
        assert inv_quad_form(m, u) == pytest.approx(float(u @ solve(m, u)), rel=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            quad_form(SpdMatrix(np.eye(2)), np.ones(3))


class TestTraceSolve:
    def test_identity_pair(self):
        assert trace_solve(SpdMatrix(np.eye(4)), SpdMatrix(np.eye(4))) == pytest.approx(4.0)

    def test_diagonal_pair(self):
        a = SpdMatrix(np.diag([1.0, 2.0]))
        g = SpdMatrix(np.diag([2.0, 2.0]))
        assert trace_solve(a, g) == pytest.approx(3.0)

    def test_matches_explicit_inverse(self, rng):
        a, g = random_spd(rng, 5), random_spd(rng, 5)
        expected = np.trace(np.linalg.inv(a.a) @ g.a)
        assert trace_solve(a, g) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("d", [2, 10, 40])
    def test_self_trace_is_dimension(self, rng, d):
        a = random_spd(rng, d, lo=0.01, hi=100.0)
        assert abs(trace_solve(a, a) - d) <= 1e-9 * d

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            trace_solve(SpdMatrix(np.eye(2)), SpdMatrix(np.eye(3)))
