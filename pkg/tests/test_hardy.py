import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardymodel.contraction import mobius_series
from hardymodel.errors import DegreeOverflow, NotIntertwining, SizeOverflow
from hardymodel.hardy import (
    HardyVector,
    enumerate_basis,
    evaluate,
    homogeneous_component,
    is_inner_on_truncation,
    kernel_vector,
    mobius_partial_product,
    monomial_vector,
    mult_operator,
    one_variable_symbol,
    operator_from_json,
    operator_to_json,
    parity_shift,
    shift,
    symbol_from_intertwiner,
    vector_from_json,
    vector_to_json,
    wandering_subspace,
)
from hardymodel.linops import adjoint, operator_norm, projector


class TestEnumerateBasis:
    def test_one_variable(self):
        b = enumerate_basis(1, 3, 1)
        assert b.size == 4
        assert [tuple(r) for r in b.exponents] == [(0,), (1,), (2,), (3,)]

    def test_two_variables(self):
        b = enumerate_basis(2, 2, 1)
        assert b.size == math.comb(4, 2) == 6

    def test_coeff_slots(self):
        b = enumerate_basis(2, 1, 3)
        assert b.size == 9

    def test_graded_lex_order(self):
        b = enumerate_basis(2, 2, 1)
        assert [tuple(r) for r in b.exponents] == [
            (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
        ]

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("HARDYMODEL_BASIS_CAP", "10")
        with pytest.raises(SizeOverflow):
            enumerate_basis(3, 5, 1)

    def test_stable_indexing(self):
        b = enumerate_basis(3, 4, 2)
        for i, row in enumerate(b.exponents):
            assert b.monomial_index(row) == i


class TestShift:
    def test_adjoint_kills_constants(self):
        b = enumerate_basis(1, 4, 1)
        op = shift(1, b)
        out = op.apply_adjoint(monomial_vector(b, (0,)))
        assert out.norm == 0.0

    def test_cross_variable(self):
        b = enumerate_basis(2, 3, 1)
        out = shift(1, b).apply(monomial_vector(b, (0, 1)))
        np.testing.assert_allclose(out.coefficients, monomial_vector(b, (1, 1)).coefficients)

    def test_isometric_below_top_degree(self):
        b = enumerate_basis(2, 3, 2)
        op = shift(2, b)
        g = adjoint(op.dense()) @ op.dense()
        top = (b.flat_degrees() == b.max_degree).astype(float)
        np.testing.assert_allclose(g, np.eye(b.size) - np.diag(top), atol=1e-14)

    def test_window_declared_correctly(self):
        b = enumerate_basis(2, 3, 1)
        assert shift(1, b).check_window() == 0.0
        assert shift(1, b).adjoint().check_window() == 0.0


class TestKernel:
    def test_zero_point_is_constant(self):
        b = enumerate_basis(2, 3, 2)
        x = np.array([0.0, 1.0])
        kv = kernel_vector((0.0, 0.0), b, x)
        np.testing.assert_allclose(kv.coefficients, monomial_vector(b, (0, 0), 1).coefficients)

    def test_reproduction_exact(self):
        rng = np.random.default_rng(17)
        b = enumerate_basis(2, 5, 3)
        f = HardyVector(b, rng.standard_normal(b.size) + 1j * rng.standard_normal(b.size))
        lam = (0.4 - 0.2j, 0.35j)
        for slot in range(3):
            x = np.zeros(3, dtype=complex)
            x[slot] = 1.0
            kv = kernel_vector(lam, b, x)
            inner = np.vdot(kv.coefficients, f.coefficients)  # <F, K x>
            want = np.vdot(x, evaluate(f, lam))  # <F(lam), x>
            assert abs(inner - want) <= 1e-12

    def test_adjoint_shift_eigen_relation(self):
        b = enumerate_basis(2, 6, 1)
        lam = (0.5, -0.3 + 0.4j)
        kv = kernel_vector(lam, b)
        for k in (1, 2):
            got = shift(k, b).apply_adjoint(kv)
            lower = kernel_vector(lam, b).coefficients * (b.flat_degrees() <= 5)
            want = np.conj(lam[k - 1]) * lower
            np.testing.assert_allclose(got.coefficients, want, atol=1e-14)


class TestMultOperator:
    def test_constant_identity(self):
        b = enumerate_basis(2, 3, 2)
        op = mult_operator({(0, 0): np.eye(2)}, b)
        np.testing.assert_allclose(op.dense(), np.eye(b.size), atol=1e-14)

    def test_coordinate_symbol_equals_shift(self):
        b = enumerate_basis(2, 4, 1)
        op = mult_operator({(1, 0): 1.0}, b)
        np.testing.assert_allclose(op.dense(), shift(1, b).dense(), atol=1e-14)

    def test_mobius_symbol_column(self):
        a = 0.5 - 0.2j
        d = 12
        b = enumerate_basis(1, d, 1)
        coeffs = mobius_series(a, d)
        op = one_variable_symbol(1, coeffs, b)
        np.testing.assert_allclose(op.dense()[:, 0], coeffs, atol=1e-14)

    def test_degree_overflow(self):
        b = enumerate_basis(1, 2, 1)
        with pytest.raises(DegreeOverflow):
            mult_operator({(5,): 1.0}, b)


class TestOneVariableSymbol:
    def test_z_in_second_variable(self):
        b = enumerate_basis(2, 3, 1)
        op = one_variable_symbol(2, [0.0, 1.0], b)
        np.testing.assert_allclose(op.dense(), shift(2, b).dense(), atol=1e-14)

    def test_constant_unitary_block(self):
        rng = np.random.default_rng(2)
        u = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0]
        b = enumerate_basis(2, 3, 2)
        op = one_variable_symbol(1, [u], b)
        np.testing.assert_allclose(op.dense(), np.kron(np.eye(b.num_monomials), u), atol=1e-14)
        rep = is_inner_on_truncation(op, 1e-12)
        assert rep.passed and rep.safe_cutoff == 3

    def test_square_in_first_variable(self):
        b = enumerate_basis(2, 4, 1)
        op = one_variable_symbol(1, [0.0, 0.0, 1.0], b)
        out = op.apply(monomial_vector(b, (0, 1)))
        np.testing.assert_allclose(out.coefficients, monomial_vector(b, (2, 1)).coefficients)

    def test_rectangular_coefficients(self):
        c0 = np.array([[1.0], [0.0]])
        b_in = enumerate_basis(1, 2, 1)
        b_out = enumerate_basis(1, 2, 2)
        op = one_variable_symbol(1, [c0], b_in, b_out)
        assert op.dense().shape == (6, 3)


class TestInnerReport:
    def test_shift_passes(self):
        b = enumerate_basis(2, 4, 1)
        rep = is_inner_on_truncation(shift(1, b), 1e-12)
        assert rep.passed and rep.residual <= 1e-14 and rep.safe_cutoff == 3

    def test_constant_half_fails(self):
        b = enumerate_basis(1, 3, 1)
        rep = is_inner_on_truncation(mult_operator({(0,): 0.5}, b), 1e-12)
        assert not rep.passed
        assert abs(rep.residual - 0.75) <= 1e-12

    def test_truncated_mobius_within_geometric_tail(self):
        a = 0.5
        d = 20
        b = enumerate_basis(1, d, 1)
        op = one_variable_symbol(1, mobius_series(a, d), b)
        cutoff = op.safe_input_degree
        rep = is_inner_on_truncation(op, tol=4 * abs(a) ** (2 * (d - cutoff)) + 1e-12)
        assert rep.passed


class TestWandering:
    def test_all_shifts_leave_constants(self):
        b = enumerate_basis(2, 4, 2)
        w = wandering_subspace([shift(1, b), shift(2, b)], b)
        assert w.dim == 2
        p = projector(w)
        for slot in range(2):
            v = monomial_vector(b, (0, 0), slot).coefficients
            np.testing.assert_allclose(p @ v, v, atol=1e-12)

    def test_single_z_squared(self):
        b = enumerate_basis(1, 6, 1)
        op = one_variable_symbol(1, [0.0, 0.0, 1.0], b)
        w = wandering_subspace([op], b, cutoff=b.max_degree - 2)
        assert w.dim == 2
        p = projector(w)
        for alpha in [(0,), (1,)]:
            v = monomial_vector(b, alpha).coefficients
            np.testing.assert_allclose(p @ v, v, atol=1e-10)

    def test_parity_family_wandering(self):
        b = enumerate_basis(3, 6, 1)
        ops = [parity_shift(k, b) for k in (1, 2, 3)]
        # each factor I - V V* is degree-preserving on monomials, so the
        # full truncation short of one degree is safe
        w = wandering_subspace(ops, b, cutoff=b.max_degree - 1)
        assert w.dim == 1
        v = monomial_vector(b, (1, 1, 1)).coefficients
        np.testing.assert_allclose(projector(w) @ v, v, atol=1e-10)

    def test_wandering_orthogonal_to_shifted_copies(self):
        b = enumerate_basis(2, 8, 1)
        ops = [shift(1, b), shift(2, b)]
        w = wandering_subspace(ops, b)
        wb = w.basis
        for alpha in [(1, 0), (0, 1), (2, 1)]:
            shifted = wb
            for k, reps in enumerate(alpha, start=1):
                for _ in range(reps):
                    shifted = ops[k - 1].matrix @ shifted
            assert operator_norm(adjoint(wb) @ shifted) <= 1e-10


class TestCrossVariableCommutation:
    def test_one_variable_symbols_doubly_commute(self):
        from hardymodel.contraction import mobius_series

        d = 16
        b = enumerate_basis(2, d, 1)
        op1 = one_variable_symbol(1, mobius_series(0.5, 4), b)
        op2 = one_variable_symbol(2, mobius_series(-0.3 + 0.2j, 4), b)
        a1, a2 = op1.dense(), op2.dense()
        comm = a1 @ a2 - a2 @ a1
        cross = adjoint(a1) @ a2 - a2 @ adjoint(a1)
        cols = np.nonzero(b.degree_selector(d - 8))[0]  # both windows add to 8
        assert operator_norm(comm[:, cols]) <= 1e-12
        assert operator_norm(cross[:, cols]) <= 1e-12

    def test_parity_cross_pairs_doubly_commute(self):
        b = enumerate_basis(2, 8, 1)
        v1, v2 = parity_shift(1, b), parity_shift(2, b)
        a1, a2 = v1.dense(), v2.dense()
        cols = np.nonzero(b.degree_selector(b.max_degree - 8))[0]
        comm = (a1 @ a2 - a2 @ a1)[:, cols]
        cross = (adjoint(a1) @ a2 - a2 @ adjoint(a1))[:, cols]
        assert operator_norm(comm) <= 1e-12
        assert operator_norm(cross) <= 1e-12


class TestParityShift:
    def test_one_variable_action(self):
        b = enumerate_basis(1, 6, 1)
        v = parity_shift(1, b)
        moves = {0: 3, 1: 0, 2: 5, 3: 2}
        for src, dst in moves.items():
            out = v.apply(monomial_vector(b, (src,)))
            np.testing.assert_allclose(
                out.coefficients, monomial_vector(b, (dst,)).coefficients, atol=1e-14
            )

    def test_square_equals_squared_shift_on_safe_degrees(self):
        b = enumerate_basis(2, 6, 1)
        v = parity_shift(1, b)
        m = shift(1, b)
        v2 = v.compose(v).dense()
        m2 = m.compose(m).dense()
        # intermediates of V^2 rise at most 3 degrees above the input
        sel = b.degree_selector(b.max_degree - 3)
        np.testing.assert_allclose(v2[:, sel], m2[:, sel], atol=1e-14)

    def test_isometric_on_safe_degrees(self):
        b = enumerate_basis(2, 6, 1)
        v = parity_shift(2, b)
        rep = is_inner_on_truncation(v, 1e-12)
        assert rep.passed and rep.safe_cutoff == 3

    def test_adjoint_kernel_is_exponent_one(self):
        b = enumerate_basis(1, 8, 1)
        v = parity_shift(1, b)
        out = v.apply_adjoint(monomial_vector(b, (1,)))
        assert out.norm == 0.0
        out = v.apply_adjoint(monomial_vector(b, (3,)))
        np.testing.assert_allclose(out.coefficients, monomial_vector(b, (0,)).coefficients)


class TestHomogeneous:
    def test_constant(self):
        b = enumerate_basis(2, 3, 1)
        one = monomial_vector(b, (0, 0))
        assert homogeneous_component(one, 0).norm == 1.0
        assert homogeneous_component(one, 1).norm == 0.0

    def test_mixed(self):
        b = enumerate_basis(2, 3, 1)
        f = HardyVector(
            b,
            monomial_vector(b, (0, 0)).coefficients + monomial_vector(b, (1, 1)).coefficients,
        )
        comp = homogeneous_component(f, 2)
        np.testing.assert_allclose(comp.coefficients, monomial_vector(b, (1, 1)).coefficients)

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_parseval_over_components(self, seed):
        rng = np.random.default_rng(seed)
        b = enumerate_basis(2, 4, 2)
        f = HardyVector(b, rng.standard_normal(b.size) + 1j * rng.standard_normal(b.size))
        total = sum(
            homogeneous_component(f, k).norm ** 2 for k in range(b.max_degree + 1)
        )
        assert abs(total - f.norm**2) <= 1e-12 * max(1.0, f.norm**2)


class TestSymbolFromIntertwiner:
    def test_identity(self):
        b = enumerate_basis(2, 5, 2)
        op = mult_operator({(0, 0): np.eye(2)}, b)
        samples = symbol_from_intertwiner(op, [(0.3, 0.1j)])
        np.testing.assert_allclose(samples[0][0], np.eye(2), atol=1e-12)

    def test_coordinate_shift(self):
        b = enumerate_basis(2, 8, 1)
        points = [(0.5, 0.0), (0.2 + 0.1j, -0.4)]
        samples = symbol_from_intertwiner(shift(1, b), points)
        for (value, bound), pt in zip(samples, points):
            assert abs(value[0, 0] - pt[0]) <= max(bound, 1e-12)

    def test_polynomial_symbol(self):
        b = enumerate_basis(1, 14, 1)
        coeffs = [0.3, 0.0, -0.5, 0.25]
        op = one_variable_symbol(1, coeffs, b)
        lam = 0.45
        samples = symbol_from_intertwiner(op, [(lam,)])
        want = np.polyval(coeffs[::-1], lam)
        value, bound = samples[0]
        assert abs(value[0, 0] - want) <= bound + 1e-10

    def test_not_intertwining(self):
        b = enumerate_basis(1, 4, 1)
        v = parity_shift(1, b)  # does not commute with the shift
        with pytest.raises(NotIntertwining):
            symbol_from_intertwiner(v, [(0.1,)])


class TestMobiusPartialProduct:
    def test_empty_range(self):
        prod, dist = mobius_partial_product([0.5, 0.5], 1, 1)
        assert prod == 1.0 and dist == 0.0

    def test_single_zero_factor(self):
        prod, dist = mobius_partial_product([0.0], 0, 1)
        assert prod == 0.0
        assert abs(dist - 2.0) <= 1e-15

    def test_two_real_factors(self):
        r = 0.9
        prod, dist = mobius_partial_product([r, r], 0, 2)
        assert abs(prod - r * r) <= 1e-15
        assert abs(dist - 0.380000) <= 1e-12

    def test_against_truncated_hardy_norm(self):
        # direct route: expand prod phi_{lam_i}(zeta_i) - 1 on a truncation
        lams = [0.6, -0.4 + 0.3j]
        d = 40
        b = enumerate_basis(2, d, 1)
        f = monomial_vector(b, (0, 0))
        for i, a in enumerate(lams):
            op = one_variable_symbol(i + 1, mobius_series(a, d), b)
            f = op.apply(f)
        diff = f.coefficients - monomial_vector(b, (0, 0)).coefficients
        direct = float(np.vdot(diff, diff).real)
        _, closed = mobius_partial_product(lams, 0, 2)
        assert abs(direct - closed) <= 1e-10

    def test_index_error(self):
        with pytest.raises(IndexError):
            mobius_partial_product([0.1], 1, 2)


class TestSerialization:
    def test_vector_roundtrip(self):
        rng = np.random.default_rng(3)
        b = enumerate_basis(2, 3, 2)
        v = HardyVector(b, rng.standard_normal(b.size) + 1j * rng.standard_normal(b.size))
        back = vector_from_json(vector_to_json(v))
        np.testing.assert_allclose(back.coefficients, v.coefficients, atol=1e-15)

    def test_operator_roundtrip(self):
        b = enumerate_basis(2, 3, 1)
        op = shift(1, b)
        back = operator_from_json(operator_to_json(op))
        np.testing.assert_allclose(back.dense(), op.dense(), atol=1e-15)
        assert (back.shift_lo, back.shift_hi) == (1, 1)
