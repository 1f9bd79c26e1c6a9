"""Submodule and quotient-module structure on the truncated Hardy space.

Submodules are represented by safe-degree sections (orthonormal column
spans of truncated generator images); quotient modules of tensor type are
built from one-variable model-space sections so that compressions carry
exact Kronecker structure.  All set operations happen at the section
level and every report names the cutoff it used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .contraction import BlaschkeProduct, mobius
from .errors import (
    AmbiguousWandering,
    DegreeOverflow,
    DimensionMismatch,
    NotInner,
    UnsafeDegree,
)
from .hardy import (
    HardyBasis,
    HardyOperator,
    HardyVector,
    enumerate_basis,
    evaluate,
    is_inner_on_truncation,
    kernel_vector,
    monomial_vector,
    one_variable_symbol,
    shift,
)
from .linops import Subspace, adjoint, operator_norm, orthonormalize

__all__ = [
    "CommutationReport",
    "ExtractionResult",
    "QuotientHandle",
    "SubmoduleHandle",
    "compression_double_commutation",
    "expected_tensor_compression",
    "inner_symbol_operator",
    "kernel_fixed_point_residual",
    "minimal_degree_obstruction",
    "model_space_section",
    "projector_product_check",
    "quotient_from_complement",
    "quotient_tensor_build",
    "restriction_double_commutation",
    "submodule_from_generators",
    "submodule_from_inner",
    "wandering_generator_extract",
]


@dataclass(frozen=True)
class SubmoduleHandle:
    basis: HardyBasis
    space: Subspace
    safe_degree: int
    generator_hint: object = None  # optional: dict var index -> BlaschkeProduct

    @property
    def dim(self) -> int:
        return self.space.dim


@dataclass(frozen=True)
class QuotientHandle:
    basis: HardyBasis
    space: Subspace
    compressions: tuple  # one square matrix per variable, in the handle basis
    safe_degree: int
    var_caps: tuple = ()
    free_cap: int = 0

    @property
    def dim(self) -> int:
        return self.space.dim


def submodule_from_inner(
    op: HardyOperator, tol: float = 1e-8, hint=None, input_cutoff: int | None = None
) -> SubmoduleHandle:
    """Safe-degree section of the range of an inner symbol's operator."""
    report = is_inner_on_truncation(op, tol, cutoff=input_cutoff)
    if not report.passed:
        raise NotInner(
            f"isometry residual {report.residual:.3e} exceeds {tol:.3e} "
            f"on degrees <= {report.safe_cutoff}"
        )
    cutoff = report.safe_cutoff
    basis = op.basis_in
    sel = np.nonzero(basis.degree_selector(cutoff))[0]
    m = op.matrix
    cols = m[:, sel]
    cols = cols.toarray() if sp.issparse(cols) else np.asarray(cols)
    space = orthonormalize(cols, rank_tol=1e-8)
    return SubmoduleHandle(op.basis_out, space, cutoff, hint)


def submodule_from_generators(
    gens, basis: HardyBasis, cutoff: int
) -> SubmoduleHandle:
    """Span of the shift orbit of the given vectors up to the cutoff depth.

    Shift monomials are enumerated once each (variables applied in
    non-decreasing index order); the cutoff bounds the orbit depth, not
    the coefficient support.
    """
    shift_mats = [shift(k, basis).matrix for k in range(1, basis.num_vars + 1)]
    cols = [np.asarray(g.coefficients, dtype=complex) for g in gens]
    frontier = [(c, 0) for c in cols]
    for _ in range(cutoff):
        nxt = []
        for vec, start in frontier:
            for k in range(start, basis.num_vars):
                w = shift_mats[k] @ vec
                if np.any(w):
                    nxt.append((w, k))
        frontier = nxt
        cols.extend(w for w, _ in frontier)
        if not frontier:
            break
    space = orthonormalize(np.column_stack(cols), rank_tol=1e-8)
    return SubmoduleHandle(basis, space, cutoff, None)


def inner_symbol_operator(hint: dict, basis: HardyBasis) -> HardyOperator:
    """Multiplier of a product of one-variable inner factors.

    hint maps 1-based variable indices to finite Blaschke products; each
    factor's series is expanded to the full truncation degree.
    """
    op = None
    for var in sorted(hint):
        eta = hint[var]
        factor = one_variable_symbol(var, eta.coefficients(basis.max_degree), basis)
        op = factor if op is None else factor.compose(op)
    if op is None:
        raise DimensionMismatch("need at least one inner factor")
    return op


def _low_section(handle: SubmoduleHandle, slack: int) -> np.ndarray:
    """Coordinates (in the handle basis) of the handle's low-degree part."""
    b = handle.space.basis
    cutoff = handle.safe_degree - slack
    keep = handle.basis.degree_selector(cutoff)
    low = orthonormalize(b * keep[:, None], rank_tol=1e-6)
    return adjoint(b) @ low.basis


@dataclass(frozen=True)
class CommutationReport:
    max_commutator: float
    max_cross_commutator: float
    safe_degree: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.max_commutator, self.max_cross_commutator) <= self.tol


def restriction_double_commutation(
    handle: SubmoduleHandle, tol: float, slack: int = 2
) -> CommutationReport:
    """(Cross-)commutators of the restricted shifts on the handle section.

    Residuals are measured on the handle's low-degree part (safe_degree
    minus slack) so truncation edge effects do not pollute the verdict.
    """
    if handle.safe_degree - slack < 0:
        raise UnsafeDegree("section too shallow for the requested slack")
    b = handle.space.basis
    n = handle.basis.num_vars
    restricted = [adjoint(b) @ (shift(k, handle.basis).matrix @ b) for k in range(1, n + 1)]
    probes = _low_section(handle, slack)
    max_comm = 0.0
    max_cross = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ri, rj = restricted[i], restricted[j]
            if i < j:
                max_comm = max(max_comm, operator_norm((ri @ rj - rj @ ri) @ probes))
            max_cross = max(
                max_cross, operator_norm((adjoint(ri) @ rj - rj @ adjoint(ri)) @ probes)
            )
    return CommutationReport(max_comm, max_cross, handle.safe_degree - slack, tol)


@dataclass(frozen=True)
class ExtractionResult:
    wandering_dim: int
    generator: HardyVector | None
    unimodular: complex | None
    max_deviation: float | None
    grid: tuple


def _deviation_grid(num_vars: int, points: int = 16, radius: float = 0.5):
    out = []
    for j in range(points):
        z = radius * np.exp(2j * np.pi * j / points)
        out.append(tuple(z * (0.9**i) for i in range(num_vars)))
    return tuple(out)


def _hint_value(hint, point) -> complex:
    val = 1.0 + 0.0j
    for var, eta in hint.items():
        val *= eta(point[var - 1])
    return val


def wandering_generator_extract(handle: SubmoduleHandle, slack: int = 1) -> ExtractionResult:
    """Wandering part of the section and the recovered generator.

    Scalar coefficient space only.  When the wandering dimension is one,
    the generator is compared against the handle's hint (if any) up to a
    unimodular constant estimated from the largest-modulus coefficient.
    """
    if handle.basis.coeff_dim != 1:
        raise DimensionMismatch("extraction is defined for scalar coefficients")
    b = handle.space.basis
    low = _low_section(handle, slack)  # handle coords of the low part
    low_cols = b @ low
    shifted = []
    for k in range(1, handle.basis.num_vars + 1):
        shifted.append(shift(k, handle.basis).matrix @ low_cols)
    shifted_space = orthonormalize(np.concatenate(shifted, axis=1), rank_tol=1e-8)
    residual_cols = low_cols - shifted_space.basis @ (adjoint(shifted_space.basis) @ low_cols)
    wandering = orthonormalize(residual_cols, rank_tol=1e-6)
    if wandering.dim != 1:
        raise AmbiguousWandering(
            f"wandering section has dimension {wandering.dim}, expected 1"
        )
    gen = HardyVector(handle.basis, wandering.basis[:, 0])
    if handle.generator_hint is None:
        return ExtractionResult(1, gen, None, None, ())
    hint_vec = _hint_coefficients(handle.generator_hint, handle.basis)
    idx = int(np.argmax(np.abs(hint_vec)))
    if abs(hint_vec[idx]) == 0 or abs(gen.coefficients[idx]) == 0:
        raise AmbiguousWandering("degenerate coefficient match")
    ratio = gen.coefficients[idx] / hint_vec[idx]
    unimodular = ratio / abs(ratio)
    grid = _deviation_grid(handle.basis.num_vars)
    worst = 0.0
    for pt in grid:
        got = evaluate(gen, pt)[0]
        want = unimodular * _hint_value(handle.generator_hint, pt)
        worst = max(worst, abs(got - want))
    return ExtractionResult(1, gen, complex(unimodular), float(worst), grid)


def _hint_coefficients(hint: dict, basis: HardyBasis) -> np.ndarray:
    vec = monomial_vector(basis, (0,) * basis.num_vars).coefficients
    for var, eta in hint.items():
        op = one_variable_symbol(var, eta.coefficients(basis.max_degree), basis)
        vec = op.matrix @ vec
    return np.asarray(vec).reshape(-1)


def model_space_section(eta: BlaschkeProduct, c: int) -> np.ndarray:
    """Orthonormal section of H2 minus eta H2 on one-variable degrees <= c.

    Columns are projections of the rational kernel basis attached to the
    Blaschke zeros (derivative kernels for multiplicities); exact
    polynomials when all zeros sit at the origin.
    """
    p = eta.degree
    if p == 0:
        raise DimensionMismatch("constant inner function has a trivial model space")
    if c < p - 1:
        raise DegreeOverflow(f"section degree {c} below model dimension {p}")
    mult: dict[complex, int] = {}
    cols = []
    n = np.arange(c + 1)
    for a in eta.zeros:
        j = mult.get(a, 0)
        mult[a] = j + 1
        col = np.zeros(c + 1, dtype=complex)
        mask = n >= j
        ff = np.ones(c + 1)
        for step in range(j):
            ff[mask] *= n[mask] - step
        col[mask] = ff[mask] * np.conj(a) ** (n[mask] - j)
        cols.append(col)
    return orthonormalize(np.column_stack(cols), rank_tol=1e-10).basis


def _default_caps(inner_list, num_vars: int, d: int):
    caps = [eta.degree - 1 for eta in inner_list]
    free_vars = num_vars - len(inner_list)
    free_cap = 0
    budget = d - 1 - sum(caps)
    if budget < 0:
        raise DegreeOverflow("truncation degree cannot hold the model sections")
    if free_vars > 0:
        free_cap = min(2, budget)
        budget -= free_cap
    # distribute leftover degrees round-robin to sharpen the sections
    i = 0
    while budget > 0 and caps and max(caps) < 12:
        caps[i % len(caps)] += 1
        budget -= 1
        i += 1
    return caps, free_cap


def quotient_tensor_build(
    inner_list,
    basis: HardyBasis,
    var_caps=None,
    free_cap: int | None = None,
) -> QuotientHandle:
    """Tensor of one-variable model-space sections in the leading variables
    and (truncated) full Hardy space in the rest, with compressions."""
    if basis.coeff_dim != 1:
        raise DimensionMismatch("tensor quotients are built over scalar coefficients")
    n = basis.num_vars
    el = list(inner_list)
    if len(el) > n:
        raise DimensionMismatch("more inner functions than variables")
    for eta in el:
        if eta.degree < 1:
            raise DimensionMismatch("each inner factor needs degree >= 1")
    d = basis.max_degree
    if var_caps is None or free_cap is None:
        caps_auto, free_auto = _default_caps(el, n, d)
        caps = list(var_caps) if var_caps is not None else caps_auto
        free_cap = free_auto if free_cap is None else free_cap
    else:
        caps = list(var_caps)
    if sum(caps) + free_cap + 1 > d:
        raise DegreeOverflow(
            f"degree budget {sum(caps)}+{free_cap}+1 exceeds truncation {d}"
        )
    sections = [model_space_section(eta, c) for eta, c in zip(el, caps)]
    free_vars = n - len(el)
    free_exps = (
        enumerate_basis(free_vars, free_cap, 1).exponents
        if free_vars
        else np.zeros((1, 0), dtype=np.int64)
    )
    cols = []
    for gamma in free_exps:
        partial = [(tuple(), 1.0 + 0.0j)]
        for sec in sections:
            partial = [
                (expo + (j,), w)
                for expo, w in partial
                for j in range(sec.shape[1])
            ]
        for expo, _ in partial:
            col = np.zeros(basis.size, dtype=complex)
            _fill_tensor_column(col, basis, sections, expo, gamma)
            cols.append(col)
    space = Subspace(basis.size, np.column_stack(cols))
    compressions = []
    bmat = space.basis
    for k in range(1, n + 1):
        compressions.append(adjoint(bmat) @ (shift(k, basis).matrix @ bmat))
    return QuotientHandle(
        basis,
        space,
        tuple(compressions),
        sum(caps) + free_cap,
        tuple(caps),
        free_cap,
    )


def _fill_tensor_column(col, basis, sections, expo, gamma):
    """Coefficients of prod_i section_i[:, expo_i](zeta_i) * zeta_free^gamma."""
    per_var = [sec[:, j] for sec, j in zip(sections, expo)]
    idx_sets = [np.nonzero(v)[0] for v in per_var]
    L = len(per_var)
    n = basis.num_vars

    def rec(i, alpha, weight):
        if i == L:
            full = alpha + [int(g) for g in gamma]
            if sum(full) <= basis.max_degree:
                col[basis.monomial_index(tuple(full))] += weight
            return
        for j in idx_sets[i]:
            rec(i + 1, alpha + [int(j)], weight * per_var[i][j])

    rec(0, [], 1.0 + 0.0j)


def expected_tensor_compression(handle: QuotientHandle, k: int, inner_list, basis=None):
    """Kronecker-structured compression predicted by the tensor layout."""
    sections = [
        model_space_section(eta, c) for eta, c in zip(inner_list, handle.var_caps)
    ]
    n = handle.basis.num_vars
    free_vars = n - len(inner_list)
    free_basis = enumerate_basis(free_vars, handle.free_cap, 1) if free_vars else None
    if k <= len(inner_list):
        sec = sections[k - 1]
        c = handle.var_caps[k - 1]
        one_var = enumerate_basis(1, c + 1, 1)
        embedded = np.zeros((c + 2, sec.shape[1]), dtype=complex)
        embedded[: c + 1, :] = sec
        jordan = adjoint(embedded) @ (shift(1, one_var).dense() @ embedded)
        factors = []
        if free_vars:
            factors.append(np.eye(free_basis.size))
        for i, s in enumerate(sections):
            factors.append(jordan if i == k - 1 else np.eye(s.shape[1]))
        out = factors[0]
        for f in factors[1:]:
            out = np.kron(out, f)
        return out
    # free-variable compression: truncated shift on the free block
    free_k = k - len(inner_list)
    free_shift = shift(free_k, free_basis).dense()
    factors = [free_shift] + [np.eye(s.shape[1]) for s in sections]
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def compression_double_commutation(
    handle: QuotientHandle, tol: float, slack: int = 1
) -> CommutationReport:
    """(Cross-)commutator residuals of the stored compressions, measured on
    handle columns of total degree <= safe_degree - slack."""
    col_degrees = _column_degrees(handle)
    probes = np.eye(handle.dim, dtype=complex)[:, col_degrees <= handle.safe_degree - slack]
    max_comm = 0.0
    max_cross = 0.0
    n = len(handle.compressions)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ci, cj = handle.compressions[i], handle.compressions[j]
            if i < j:
                max_comm = max(max_comm, operator_norm((ci @ cj - cj @ ci) @ probes))
            max_cross = max(
                max_cross,
                operator_norm((adjoint(ci) @ cj - cj @ adjoint(ci)) @ probes),
            )
    return CommutationReport(max_comm, max_cross, handle.safe_degree - slack, tol)


def _column_degrees(handle: QuotientHandle) -> np.ndarray:
    degs = handle.basis.flat_degrees()
    out = []
    for j in range(handle.dim):
        nz = np.abs(handle.space.basis[:, j]) > 1e-13
        out.append(int(degs[nz].max()) if nz.any() else 0)
    return np.array(out)


def quotient_from_complement(sub: SubmoduleHandle) -> QuotientHandle:
    """Orthocomplement of a submodule section, with compressions.

    The complement is taken inside the degree <= safe_degree slice so the
    quotient's adjoint-invariance holds on its own safe degrees.
    """
    basis = sub.basis
    keep = np.nonzero(basis.degree_selector(sub.safe_degree))[0]
    b = sub.space.basis
    probes = np.zeros((basis.size, keep.size), dtype=complex)
    probes[keep, np.arange(keep.size)] = 1.0
    comp = probes - b @ (adjoint(b) @ probes)
    space = orthonormalize(comp, rank_tol=1e-8)
    compressions = tuple(
        adjoint(space.basis) @ (shift(k, basis).matrix @ space.basis)
        for k in range(1, basis.num_vars + 1)
    )
    return QuotientHandle(basis, space, compressions, sub.safe_degree)


def kernel_fixed_point_residual(symbols, lam, basis: HardyBasis):
    """Residual of the kernel fixed-point mechanism for one-variable
    multiplier tuples.

    For each listed variable k with symbol f_k and mu_k = f_k(lam_k), the
    factor I - phi_{mu_k}(M_k) phi_{mu_k}(M_k)* should fix the truncated
    kernel at lam.  Returns (residual, tail_bound).
    """
    if basis.coeff_dim != 1:
        raise DimensionMismatch("kernel mechanism is scalar-valued")
    if len(symbols) > basis.num_vars:
        raise DimensionMismatch("more symbols than materialized variables")
    coords = np.asarray(getattr(lam, "coords", lam), dtype=complex).reshape(-1)
    kv = kernel_vector(lam, basis).coefficients
    v = kv.copy()
    tail = 0.0
    d = basis.max_degree
    for k, eta in enumerate(symbols, start=1):
        lam_k = coords[k - 1] if k - 1 < coords.size else 0.0j
        mu = complex(eta(lam_k))
        op = one_variable_symbol(k, eta.coefficients(d), basis)
        mat = np.asarray(op.dense())
        nrm = operator_norm(mat)
        if nrm > 1.0 + 1e-6:
            raise UnsafeDegree("truncated multiplier is not a contraction")
        if nrm > 1.0:
            mat = mat / nrm  # series truncation can overshoot by its tail
            tail = max(tail, nrm - 1.0)
        if abs(mu) >= 1.0:
            raise DimensionMismatch("symbol value lies on the boundary")
        w = mobius(mat, mu)
        v = v - w @ (adjoint(w) @ v)
        tail = max(tail, abs(lam_k) ** max(d - eta.degree, 0))
    residual = float(np.linalg.norm(v - kv))
    return residual, float(tail)


def projector_product_check(inner_list, alpha, basis: HardyBasis, handle: QuotientHandle | None = None):
    """Tensor product formula for projections of monomials.

    Evaluates the per-variable product formula and the direct projection
    onto the tensor quotient section; returns (formula, direct, distance).
    """
    if handle is None:
        handle = quotient_tensor_build(inner_list, basis)
    alpha = tuple(int(a) for a in alpha) + (0,) * (basis.num_vars - len(alpha))
    if len(alpha) > basis.num_vars:
        raise DegreeOverflow("exponent uses a variable beyond the basis")
    L = len(list(inner_list))
    free_total = sum(alpha[L:])
    if free_total > handle.free_cap:
        raise DegreeOverflow(f"free exponent weight {free_total} exceeds {handle.free_cap}")
    for i in range(L):
        if alpha[i] > handle.var_caps[i]:
            raise DegreeOverflow(
                f"exponent {alpha[i]} exceeds the section budget in slot {i}"
            )
    sections = [
        model_space_section(eta, c) for eta, c in zip(inner_list, handle.var_caps)
    ]
    per_var = []
    for i, sec in enumerate(sections):
        c = sec.shape[0] - 1
        mono = np.zeros(c + 1, dtype=complex)
        if alpha[i] <= c:
            mono[alpha[i]] = 1.0
        per_var.append(sec @ (adjoint(sec) @ mono))
    formula = np.zeros(basis.size, dtype=complex)
    gamma = alpha[L:]
    _fill_tensor_column(
        formula,
        basis,
        [v[:, None] for v in per_var],
        tuple(0 for _ in per_var),
        np.array(gamma, dtype=np.int64),
    )
    target = monomial_vector(basis, alpha).coefficients
    b = handle.space.basis
    direct = b @ (adjoint(b) @ target)
    dist = float(np.linalg.norm(formula - direct))
    return (
        HardyVector(basis, formula),
        HardyVector(basis, direct),
        dist,
    )


def minimal_degree_obstruction(handle: SubmoduleHandle):
    """Minimal homogeneous degree present in the section versus the shifted
    span: returns (k0, mass of S at k0, mass of sum zeta_k S at k0)."""
    b = handle.space.basis
    degs = handle.basis.flat_degrees()
    present = np.abs(b).max(axis=1) > 1e-12
    if not present.any():
        raise DimensionMismatch("empty section")
    k0 = int(degs[present].min())
    at_k0 = float(operator_norm(b[degs == k0, :]))
    shifted_mass = 0.0
    for k in range(1, handle.basis.num_vars + 1):
        sh = shift(k, handle.basis).matrix @ b
        sh = sh.toarray() if sp.issparse(sh) else np.asarray(sh)
        shifted_mass = max(shifted_mass, float(operator_norm(sh[degs == k0, :])))
    return k0, at_k0, shifted_mass
