import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardymodel.errors import DimensionMismatch, NegativeEigenvalue, NotHermitian, SingularShift
from hardymodel.linops import (
    Subspace,
    adjoint,
    hermitian_sqrt,
    operator_norm,
    orthonormalize,
    projector,
    solve_shifted,
    subspace_distance,
)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestHermitianSqrt:
    def test_identity(self):
        np.testing.assert_allclose(hermitian_sqrt(np.eye(3)), np.eye(3), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(
            hermitian_sqrt(np.diag([4.0, 0.0])), np.diag([2.0, 0.0]), atol=1e-14
        )

    def test_resquare_random_gram(self):
        rng = np.random.default_rng(4)
        c = random_complex(rng, 4, 4)
        a = adjoint(c) @ c
        m = hermitian_sqrt(a, tol=1e-10)
        assert operator_norm(m @ m - a) <= 1e-10
        assert operator_norm(m - adjoint(m)) <= 1e-12

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            hermitian_sqrt(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_negative_eigenvalue(self):
        with pytest.raises(NegativeEigenvalue):
            hermitian_sqrt(np.diag([1.0, -1.0]))

    def test_clamp_window(self):
        a = np.diag([1.0, -5e-13])
        m = hermitian_sqrt(a, tol=1e-12)
        np.testing.assert_allclose(m, np.diag([1.0, 0.0]), atol=1e-13)


class TestSolveShifted:
    def test_zero_shift(self):
        rng = np.random.default_rng(0)
        t = random_complex(rng, 3, 3)
        np.testing.assert_allclose(solve_shifted(t, 0.0), np.eye(3), atol=1e-14)

    def test_nilpotent_terminating_series(self):
        t = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        np.testing.assert_allclose(
            solve_shifted(t, 0.5), np.eye(2) + 0.5 * t, atol=1e-14
        )

    def test_scalar(self):
        np.testing.assert_allclose(
            solve_shifted(np.array([[0.5]]), 0.5), np.array([[1.0 / 0.75]]), atol=1e-14
        )

    def test_singular(self):
        with pytest.raises(SingularShift):
            solve_shifted(np.eye(2), 1.0)

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_residual_property(self, seed):
        rng = np.random.default_rng(seed)
        t = random_complex(rng, 3, 3)
        t = 0.8 * t / max(operator_norm(t), 1e-12)
        z = 0.7 * np.exp(2j * np.pi * rng.uniform())
        inv = solve_shifted(t, z)
        resid = (np.eye(3) - z * t) @ inv - np.eye(3)
        assert operator_norm(resid) <= 1e-10


class TestOrthonormalize:
    def test_duplicate_columns(self):
        e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.array([0.0, 1.0, 0.0])
        s = orthonormalize(np.column_stack([e1, e1, e2]))
        assert s.dim == 2
        p = projector(s)
        np.testing.assert_allclose(p @ e1, e1, atol=1e-12)
        np.testing.assert_allclose(p @ e2, e2, atol=1e-12)

    def test_zero_matrix(self):
        s = orthonormalize(np.zeros((4, 3)))
        assert s.dim == 0

    def test_rank_matches_svd(self):
        rng = np.random.default_rng(7)
        v = random_complex(rng, 4, 10)
        s = orthonormalize(v)
        rank = int(np.sum(np.linalg.svd(v, compute_uv=False) > 1e-10))
        assert s.dim == rank == 4

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        v = random_complex(rng, 5, 5)
        a = orthonormalize(v).basis
        b = orthonormalize(v.copy()).basis
        np.testing.assert_array_equal(a, b)


class TestProjector:
    def test_full_space(self):
        s = orthonormalize(np.eye(3))
        np.testing.assert_allclose(projector(s), np.eye(3), atol=1e-14)

    def test_span_e1(self):
        s = orthonormalize(np.array([[1.0], [0.0]]))
        np.testing.assert_allclose(projector(s), np.diag([1.0, 0.0]), atol=1e-14)

    def test_idempotent_hermitian(self):
        rng = np.random.default_rng(3)
        s = orthonormalize(random_complex(rng, 5, 2))
        p = projector(s)
        assert operator_norm(p @ p - p) <= 1e-12
        assert operator_norm(p - adjoint(p)) <= 1e-12


class TestSubspaceDistance:
    def test_self(self):
        s = orthonormalize(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        assert subspace_distance(s, s) == 0.0

    def test_orthogonal_lines(self):
        s1 = orthonormalize(np.array([[1.0], [0.0]]))
        s2 = orthonormalize(np.array([[0.0], [1.0]]))
        assert abs(subspace_distance(s1, s2) - 1.0) <= 1e-12

    def test_principal_angle(self):
        s1 = orthonormalize(np.array([[1.0], [0.0]]))
        s2 = orthonormalize(np.array([[1.0], [1.0]]) / np.sqrt(2.0))
        assert abs(subspace_distance(s1, s2) - np.sin(np.pi / 4)) <= 1e-12

    def test_mismatch(self):
        s1 = orthonormalize(np.eye(2))
        s2 = orthonormalize(np.eye(3))
        with pytest.raises(DimensionMismatch):
            subspace_distance(s1, s2)

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_symmetric_triangle(self, seed):
        rng = np.random.default_rng(seed)
        subs = [orthonormalize(random_complex(rng, 4, rng.integers(1, 4))) for _ in range(3)]
        d01 = subspace_distance(subs[0], subs[1])
        d10 = subspace_distance(subs[1], subs[0])
        d12 = subspace_distance(subs[1], subs[2])
        d02 = subspace_distance(subs[0], subs[2])
        assert abs(d01 - d10) <= 1e-10
        assert d02 <= d01 + d12 + 1e-10


def test_subspace_rejects_non_orthonormal():
    with pytest.raises(DimensionMismatch):
        Subspace(2, np.array([[1.0], [1.0]]))
