"""Characteristic functions of single contractions and the quotient-model
verifier built from them.

theta(z) maps the defect space of T into the defect space of T*; it is
stored relative to rank-revealed orthonormal defect bases and evaluated by
direct resolvent solves, which is exact for |z| <= 1 under the strict
spectral-radius certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .contraction import ContractionTuple, spectral_radius_bound
from .dilation import DilationModel, canonical_embedding
from .errors import UnsafeDegree, ZeroDefect
from .hardy import enumerate_basis, one_variable_symbol
from .linops import (
    Subspace,
    adjoint,
    apply_shifted_inverse,
    hermitian_sqrt,
    operator_norm,
    orthonormalize,
)

__all__ = [
    "CharFn",
    "QuotientModelReport",
    "boundary_unitarity",
    "charfn_build",
    "charfn_eval",
    "kernel_identity_residual",
    "mult_product_residual",
    "poly_truncate",
    "projection_identity_residual",
    "quotient_model_check",
    "symbol_grammian_residual",
]

_NORM_SLACK = 1e-10
#: defect operators with norm below this are numerically zero (sqrt of
#: Gram roundoff is ~1e-8, genuine defects of strict contractions are O(1))
DEFECT_FLOOR = 1e-7


def _defect_basis(d: np.ndarray, rank_tol: float) -> Subspace:
    nrm = operator_norm(d)
    if nrm <= DEFECT_FLOOR:
        return Subspace(d.shape[0], np.zeros((d.shape[0], 0), dtype=complex))
    return orthonormalize(d, rank_tol=rank_tol * nrm)


@dataclass(frozen=True)
class CharFn:
    """Characteristic function data of a single contraction."""

    t: np.ndarray
    defect_in: Subspace
    defect_out: Subspace
    radius_estimate: float
    rank_tol: float

    @property
    def dim_in(self) -> int:
        return self.defect_in.dim

    @property
    def dim_out(self) -> int:
        return self.defect_out.dim


def charfn_build(t: np.ndarray, rank_tol: float = 1e-10) -> CharFn:
    """Rank-revealed defect bases for a strict contraction.

    A unitary (both defects trivial) yields the empty function without
    needing the stability certificate; any other spectral radius at 1 is
    rejected since boundary evaluation would be undefined.
    """
    t = np.asarray(t, dtype=complex)
    if operator_norm(t) > 1.0 + _NORM_SLACK:
        raise ValueError("matrix is not a contraction")
    eye = np.eye(t.shape[0], dtype=complex)
    d_in = hermitian_sqrt(eye - adjoint(t) @ t, tol=1e-9)
    d_out = hermitian_sqrt(eye - t @ adjoint(t), tol=1e-9)
    q_in = orthonormalize(d_in, rank_tol=rank_tol * max(operator_norm(d_in), 1e-300))
    q_out = orthonormalize(d_out, rank_tol=rank_tol * max(operator_norm(d_out), 1e-300))
    radius = spectral_radius_bound(t)
    if radius >= 1.0 and (q_in.dim or q_out.dim):
        raise ValueError(f"spectral radius estimate {radius:.6f} is not below 1")
    return CharFn(t, q_in, q_out, radius, rank_tol)


def charfn_eval(cf: CharFn, z: complex) -> np.ndarray:
    """theta(z) = compress(-T + z D_out (I - z T*)^{-1} D_in) between defect bases."""
    if cf.dim_in == 0 or cf.dim_out == 0:
        return np.zeros((cf.dim_out, cf.dim_in), dtype=complex)
    t = cf.t
    eye = np.eye(t.shape[0], dtype=complex)
    d_in = hermitian_sqrt(eye - adjoint(t) @ t, tol=1e-9)
    d_out = hermitian_sqrt(eye - t @ adjoint(t), tol=1e-9)
    inner = -t + z * d_out @ apply_shifted_inverse(adjoint(t), z, d_in)
    return adjoint(cf.defect_out.basis) @ inner @ cf.defect_in.basis


def kernel_identity_residual(cf: CharFn, a: complex, b: complex) -> float:
    """Residual of the defect-kernel factorization at an interior pair.

    Compares I - theta(b) theta(a)* with
    (1 - conj(a) b) compress(D_out (I - b T*)^{-1} (I - conj(a) T)^{-1} D_out).
    """
    if abs(a) >= 1.0 or abs(b) >= 1.0:
        raise ValueError("interior points required")
    t = cf.t
    eye = np.eye(t.shape[0], dtype=complex)
    d_out = hermitian_sqrt(eye - t @ adjoint(t), tol=1e-9)
    th_b = charfn_eval(cf, b)
    th_a = charfn_eval(cf, a)
    lhs = np.eye(cf.dim_out, dtype=complex) - th_b @ adjoint(th_a)
    core = d_out @ apply_shifted_inverse(
        adjoint(t), b, apply_shifted_inverse(t, np.conj(a), d_out)
    )
    rhs = (1.0 - np.conj(a) * b) * adjoint(cf.defect_out.basis) @ core @ cf.defect_out.basis
    return operator_norm(lhs - rhs)


def boundary_unitarity(cf: CharFn, samples: int = 32) -> float:
    """Max of ||theta(z)* theta(z) - I|| over equispaced unit-circle points."""
    worst = 0.0
    eye = np.eye(cf.dim_in, dtype=complex)
    for j in range(samples):
        z = np.exp(2j * np.pi * j / samples)
        th = charfn_eval(cf, z)
        worst = max(worst, operator_norm(adjoint(th) @ th - eye))
    return worst


def _power_norm_envelope(t: np.ndarray, max_probe: int = 256):
    """(p, q, m): ||T^k|| <= m * q^(k // p) with q < 1, by probing powers."""
    p = 1
    tp = np.asarray(t, dtype=complex)
    norms = [1.0]
    while True:
        q = operator_norm(tp)
        if q < 0.95:
            return p, max(q, 1e-300), max(norms)
        if p >= max_probe:
            raise UnsafeDegree("no power of the matrix has norm below 0.95")
        norms.append(q)
        tp = tp @ tp
        p *= 2


def poly_truncate(cf: CharFn, tol: float):
    """Power-series coefficients of theta with a certified geometric tail.

    Coefficients are compress(-T) and compress(D_out T*^(k-1) D_in); the
    returned tail bounds the operator-norm sum of all dropped ones.
    """
    t = cf.t
    eye = np.eye(t.shape[0], dtype=complex)
    d_in = hermitian_sqrt(eye - adjoint(t) @ t, tol=1e-9)
    d_out = hermitian_sqrt(eye - t @ adjoint(t), tol=1e-9)
    qi, qo = cf.defect_in.basis, cf.defect_out.basis
    coeffs = [adjoint(qo) @ (-t) @ qi]
    p, q, m = _power_norm_envelope(t)
    scale = operator_norm(d_out) * operator_norm(d_in)

    def tail_from(k):
        # sum_{j >= k} ||D_out T*^(j-1) D_in|| <= scale * sum m q^((j-1)//p)
        base = (k - 1) // p
        return scale * m * p * q**base / (1.0 - q)

    power = eye.copy()  # T*^(k-1)
    k = 1
    while tail_from(k) >= tol:
        if operator_norm(power) == 0.0:
            return coeffs, 0.0  # nilpotent: series terminates exactly
        coeffs.append(adjoint(qo) @ d_out @ power @ d_in @ qi)
        power = adjoint(t) @ power
        k += 1
        if k > 4096:
            raise UnsafeDegree("characteristic-function tail does not certify")
    return coeffs, float(tail_from(k))


def symbol_grammian_residual(eval1, eval2, pairs) -> float:
    """Max over (a, b) pairs of ||f(b) f(a)* - g(b) g(a)*||."""
    worst = 0.0
    for a, b in pairs:
        lhs = eval1(b) @ adjoint(eval1(a))
        rhs = eval2(b) @ adjoint(eval2(a))
        worst = max(worst, operator_norm(lhs - rhs))
    return worst


def mult_product_residual(op1, op2, cutoff: int) -> float:
    """||A1 A1* - A2 A2*|| on output rows/columns of degree <= cutoff."""
    sel = np.nonzero(op1.basis_out.degree_selector(cutoff))[0]
    m1 = op1.matrix
    m2 = op2.matrix
    p1 = m1 @ m1.conj().T
    p2 = m2 @ m2.conj().T
    diff = p1 - p2
    if sp.issparse(diff):
        diff = diff.toarray()
    return operator_norm(diff[np.ix_(sel, sel)])


def _component_symbol(cf: CharFn, coeffs, k: int, model: DilationModel):
    """Truncated M_theta~ of one component, output expressed in the model's
    adjoint defect coordinates; returns (matrix, inclusion residual)."""
    n = model.tuple_.num_components
    d = model.truncation_degree
    basis_in = enumerate_basis(n, d, cf.dim_in)
    basis_out = enumerate_basis(n, d, cf.dim_out)
    w = one_variable_symbol(k, coeffs, basis_in, basis_out)
    # inclusion of the joint adjoint defect space into this component's
    incl = adjoint(cf.defect_out.basis) @ model.defect_basis.basis
    incl_residual = operator_norm(adjoint(incl) @ incl - np.eye(model.defect_dim))
    n_mono = model.basis.num_monomials
    proj = sp.kron(sp.identity(n_mono), sp.csr_matrix(adjoint(incl)), "csr")
    mat = proj @ (w.matrix if sp.issparse(w.matrix) else sp.csr_matrix(w.matrix))
    return mat, incl_residual


@dataclass(frozen=True)
class QuotientModelReport:
    distance: float
    safe_cutoff: int
    symbol_degrees: tuple
    symbol_tails: tuple
    inclusion_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.distance <= self.tol


def quotient_model_check(t: ContractionTuple, d: int, tol: float) -> QuotientModelReport:
    """Distance between the complement of the embedded space and the span
    of the componentwise symbol-product ranges, on the safe-degree section.

    With P the embedding projector and B an orthonormal basis of the
    stacked symbol ranges, the projector difference of the two sides is
    I - P - B B*, evaluated on rows and columns of safe degree.
    """
    model = canonical_embedding(t, d)
    if model.defect_dim == 0:
        raise ZeroDefect("adjoint defect space is trivial")
    prepared = []  # (component index, charfn, coefficients)
    tails, degrees = [], []
    for k, comp in enumerate(t.components, start=1):
        cf = charfn_build(comp)
        if cf.dim_in == 0:
            continue  # isometric component contributes no complement range
        coeffs, tail = poly_truncate(cf, tol / 10.0)
        prepared.append((k, cf, coeffs))
        tails.append(tail)
        degrees.append(len(coeffs) - 1)
    max_deg = max(degrees, default=0)
    cutoff = d - max_deg - 1
    if cutoff < 0:
        raise UnsafeDegree(
            f"truncation degree {d} cannot absorb symbol degree {max_deg}"
        )
    incl_worst = 0.0
    range_cols = []
    for k, cf, coeffs in prepared:
        mat, incl_res = _component_symbol(cf, coeffs, k, model)
        incl_worst = max(incl_worst, incl_res)
        range_cols.append(mat.toarray() if sp.issparse(mat) else np.asarray(mat))
    basis = model.basis
    sel = np.nonzero(basis.degree_selector(cutoff))[0]
    u_hat = model.normalized_embedding()
    p_q = u_hat @ adjoint(u_hat)
    if range_cols:
        b = orthonormalize(np.concatenate(range_cols, axis=1), rank_tol=1e-8).basis
        p_r = b @ adjoint(b)
    else:
        p_r = np.zeros_like(p_q)
    diff = np.eye(basis.size, dtype=complex) - p_q - p_r
    dist = operator_norm(diff[np.ix_(sel, sel)])
    return QuotientModelReport(
        dist, cutoff, tuple(degrees), tuple(tails), incl_worst, tol
    )


def projection_identity_residual(a_matrix: np.ndarray, d: int, tol: float):
    """Residual of P_embedded = I - M_theta M_theta* on the safe section.

    Returns (residual, safe_cutoff) for a single contraction.
    """
    a = np.asarray(a_matrix, dtype=complex)
    t = ContractionTuple((a,))
    model = canonical_embedding(t, d)
    cf = charfn_build(a)
    coeffs, _ = poly_truncate(cf, tol / 10.0)
    deg = len(coeffs) - 1
    cutoff = d - deg - 1
    if cutoff < 0:
        raise UnsafeDegree(f"truncation degree {d} cannot absorb symbol degree {deg}")
    mat, _ = _component_symbol(cf, coeffs, 1, model)
    basis = model.basis
    sel = np.nonzero(basis.degree_selector(cutoff))[0]
    u_hat = model.normalized_embedding()
    p = u_hat @ adjoint(u_hat)
    ww = mat @ mat.conj().T
    ww = ww.toarray() if sp.issparse(ww) else np.asarray(ww)
    lhs = p[np.ix_(sel, sel)]
    rhs = np.eye(sel.size, dtype=complex) - ww[np.ix_(sel, sel)]
    return operator_norm(lhs - rhs), cutoff
