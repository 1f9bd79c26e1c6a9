"""Degree-truncated vector-valued Hardy space over the Hilbert multidisk.

The basis enumerates monomials of total degree <= d in the first n
variables, graded-lexicographically, tensored with a coefficient space of
dimension e.  Operators carry a degree window (lo, hi): they couple input
degree k only to output degrees in [k+lo, k+hi], so exact (safe) domains
under truncation are computable.  Coefficient layout is flat with index
monomial*e + slot.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DegreeOverflow, DimensionMismatch, NotIntertwining, SizeOverflow
from .linops import Subspace, adjoint, operator_norm, orthonormalize

__all__ = [
    "HardyBasis",
    "HardyOperator",
    "HardyVector",
    "InnerReport",
    "enumerate_basis",
    "evaluate",
    "homogeneous_component",
    "is_inner_on_truncation",
    "kernel_vector",
    "kernel_norm_sq_full",
    "mobius_partial_product",
    "mult_operator",
    "one_variable_symbol",
    "operator_from_json",
    "operator_to_json",
    "parity_shift",
    "shift",
    "symbol_from_intertwiner",
    "vector_from_json",
    "vector_to_json",
    "wandering_subspace",
]

BASIS_CAP_ENV = "HARDYMODEL_BASIS_CAP"
_DEFAULT_BASIS_CAP = 200_000
_SPARSE_DENSITY = 0.05


def basis_size_cap() -> int:
    return int(os.environ.get(BASIS_CAP_ENV, _DEFAULT_BASIS_CAP))


def _graded_lex_exponents(n: int, d: int) -> np.ndarray:
    """All exponent rows with total degree <= d, degree-major, lex within."""
    rows: list[tuple[int, ...]] = []

    def fill(prefix: list[int], remaining: int, pos: int):
        if pos == n - 1:
            rows.append(tuple(prefix + [remaining]))
            return
        for a in range(remaining, -1, -1):
            fill(prefix + [a], remaining - a, pos + 1)

    for deg in range(d + 1):
        if n == 1:
            rows.append((deg,))
        else:
            fill([], deg, 0)
    return np.array(rows, dtype=np.int64).reshape(len(rows), n)


@dataclass(frozen=True)
class HardyBasis:
    """Monomial basis of the truncated Hardy space, times coefficient slots."""

    num_vars: int
    max_degree: int
    coeff_dim: int
    exponents: np.ndarray = field(repr=False)
    index_of: dict = field(repr=False)

    @property
    def num_monomials(self) -> int:
        return self.exponents.shape[0]

    @property
    def size(self) -> int:
        return self.num_monomials * self.coeff_dim

    @property
    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    def monomial_index(self, alpha) -> int:
        return self.index_of[tuple(int(a) for a in alpha)]

    def flat_index(self, alpha, slot: int = 0) -> int:
        return self.monomial_index(alpha) * self.coeff_dim + slot

    def flat_degrees(self) -> np.ndarray:
        return np.repeat(self.degrees, self.coeff_dim)

    def degree_selector(self, cutoff: int) -> np.ndarray:
        """Boolean mask over flat indices for total degree <= cutoff."""
        return self.flat_degrees() <= cutoff

    def with_coeff_dim(self, e: int) -> "HardyBasis":
        return enumerate_basis(self.num_vars, self.max_degree, e)


_BASIS_CACHE: dict = {}


def enumerate_basis(n: int, d: int, e: int = 1) -> HardyBasis:
    """Deterministic graded-lexicographic basis of size C(n+d, d) * e."""
    if n < 1 or d < 0 or e < 1:
        raise DimensionMismatch("need n >= 1, d >= 0, e >= 1")
    total = math.comb(n + d, d) * e
    if total > basis_size_cap():
        raise SizeOverflow(f"basis size {total} exceeds cap {basis_size_cap()}")
    key = (n, d)
    cached = _BASIS_CACHE.get(key)
    if cached is None:
        exps = _graded_lex_exponents(n, d)
        index_of = {tuple(int(a) for a in row): i for i, row in enumerate(exps)}
        cached = (exps, index_of)
        if len(_BASIS_CACHE) < 64:
            _BASIS_CACHE[key] = cached
    exps, index_of = cached
    return HardyBasis(n, d, e, exps, index_of)


@dataclass(frozen=True)
class HardyVector:
    """Coefficient vector over a HardyBasis; norm is the Parseval sum."""

    basis: HardyBasis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        if c.shape[0] != self.basis.size:
            raise DimensionMismatch(
                f"expected {self.basis.size} coefficients, got {c.shape[0]}"
            )
        object.__setattr__(self, "coefficients", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def block(self, alpha) -> np.ndarray:
        """Coefficient-slot block attached to the monomial alpha."""
        i = self.basis.monomial_index(alpha)
        e = self.basis.coeff_dim
        return self.coefficients[i * e : (i + 1) * e]


def monomial_vector(basis: HardyBasis, alpha, slot: int = 0) -> HardyVector:
    c = np.zeros(basis.size, dtype=complex)
    c[basis.flat_index(alpha, slot)] = 1.0
    return HardyVector(basis, c)


@dataclass(frozen=True)
class HardyOperator:
    """Matrix over truncated Hardy bases with a degree coupling window.

    shift_lo/shift_hi bound output degree - input degree; degree_shift in
    the sense of the build contract is shift_hi.  Exact semantics hold on
    inputs of degree <= safe_input_degree.
    """

    basis_in: HardyBasis
    basis_out: HardyBasis
    matrix: object = field(repr=False)
    shift_lo: int = 0
    shift_hi: int = 0

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.basis_out.size, self.basis_in.size):
            raise DimensionMismatch(
                f"matrix shape {m.shape} does not match bases "
                f"({self.basis_out.size}, {self.basis_in.size})"
            )

    @property
    def degree_shift(self) -> int:
        return self.shift_hi

    @property
    def safe_input_degree(self) -> int:
        return self.basis_in.max_degree - max(self.shift_hi, 0)

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)

    def apply(self, v: HardyVector) -> HardyVector:
        if v.basis is not self.basis_in and v.basis != self.basis_in:
            if v.basis.size != self.basis_in.size:
                raise DimensionMismatch("vector basis does not match operator input")
        return HardyVector(self.basis_out, self.matrix @ v.coefficients)

    def apply_adjoint(self, v: HardyVector) -> HardyVector:
        m = self.matrix
        out = (m.conj().T @ v.coefficients) if sp.issparse(m) else (adjoint(m) @ v.coefficients)
        return HardyVector(self.basis_in, out)

    def adjoint(self) -> "HardyOperator":
        m = self.matrix
        madj = m.conj().T.tocsr() if sp.issparse(m) else adjoint(m)
        return HardyOperator(self.basis_out, self.basis_in, madj, -self.shift_hi, -self.shift_lo)

    def compose(self, other: "HardyOperator") -> "HardyOperator":
        """self after other; degree windows add."""
        if other.basis_out.size != self.basis_in.size:
            raise DimensionMismatch("composition bases do not match")
        return HardyOperator(
            other.basis_in,
            self.basis_out,
            _mat_mul(self.matrix, other.matrix),
            self.shift_lo + other.shift_lo,
            self.shift_hi + other.shift_hi,
        )

    def check_window(self) -> float:
        """Largest entry violating the declared degree window (tests only)."""
        m = self.dense()
        din = self.basis_in.flat_degrees()
        dout = self.basis_out.flat_degrees()
        diff = dout[:, None] - din[None, :]
        bad = (diff < self.shift_lo) | (diff > self.shift_hi)
        return float(np.abs(m[bad]).max()) if bad.any() else 0.0


def _pack(mat: sp.spmatrix) -> object:
    """Sparse when density is below the threshold, dense otherwise."""
    mat = mat.tocsr()
    size = mat.shape[0] * mat.shape[1]
    if size and mat.nnz / size >= _SPARSE_DENSITY:
        return mat.toarray()
    return mat


def _mat_mul(a, b):
    if sp.issparse(a) and not sp.issparse(b):
        return np.asarray(a @ b)
    if sp.issparse(b) and not sp.issparse(a):
        return np.asarray((b.conj().T @ a.conj().T)).conj().T
    return a @ b


def _cols(mat, sel: np.ndarray) -> np.ndarray:
    sub = mat[:, sel]
    return sub.toarray() if sp.issparse(sub) else np.asarray(sub)


def _mono_shift_matrix(basis: HardyBasis, beta: np.ndarray) -> sp.csr_matrix:
    """Monomial-level 0/1 matrix of multiplication by zeta^beta, truncated."""
    exps = basis.exponents
    target = exps + beta[None, :]
    ok = target.sum(axis=1) <= basis.max_degree
    cols = np.nonzero(ok)[0]
    rows = np.array(
        [basis.index_of[tuple(int(a) for a in target[i])] for i in cols], dtype=np.int64
    )
    data = np.ones(len(cols))
    n = basis.num_monomials
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def shift(k: int, basis: HardyBasis) -> HardyOperator:
    """Coordinate multiplication in variable k (1-based), truncated."""
    if not 1 <= k <= basis.num_vars:
        raise DimensionMismatch(f"variable index {k} out of range")
    beta = np.zeros(basis.num_vars, dtype=np.int64)
    beta[k - 1] = 1
    mono = _mono_shift_matrix(basis, beta)
    mat = mono if basis.coeff_dim == 1 else sp.kron(mono, sp.identity(basis.coeff_dim), "csr")
    return HardyOperator(basis, basis, _pack(sp.csr_matrix(mat)), 1, 1)


def mult_operator(symbol: dict, basis_in: HardyBasis, basis_out: HardyBasis | None = None) -> HardyOperator:
    """Multiplication by a matrix-valued polynomial.

    symbol maps exponent tuples (length num_vars, or shorter with implied
    zeros) to (e_out, e_in) coefficient arrays; scalars are accepted when
    both coefficient dimensions are 1.
    """
    if basis_out is None:
        basis_out = basis_in
    if (basis_in.num_vars, basis_in.max_degree) != (basis_out.num_vars, basis_out.max_degree):
        raise DimensionMismatch("bases must share variables and truncation degree")
    e_in, e_out = basis_in.coeff_dim, basis_out.coeff_dim
    n = basis_in.num_vars
    blocks = []
    lo, hi = None, None
    for beta_raw, coeff in symbol.items():
        beta = np.zeros(n, dtype=np.int64)
        braw = tuple(beta_raw)
        if len(braw) > n and any(b for b in braw[n:]):
            raise DegreeOverflow("symbol exponent uses a variable beyond the basis")
        beta[: min(len(braw), n)] = braw[: min(len(braw), n)]
        deg = int(beta.sum())
        if deg > basis_in.max_degree:
            raise DegreeOverflow(f"symbol degree {deg} exceeds truncation")
        c = np.atleast_2d(np.asarray(coeff, dtype=complex))
        if c.shape != (e_out, e_in):
            raise DimensionMismatch(
                f"coefficient block {c.shape} does not match ({e_out}, {e_in})"
            )
        if not np.any(c):
            continue
        mono = _mono_shift_matrix(basis_in, beta)
        blocks.append(sp.kron(mono, sp.csr_matrix(c), "csr") if (e_in, e_out) != (1, 1) else mono * c[0, 0])
        lo = deg if lo is None else min(lo, deg)
        hi = deg if hi is None else max(hi, deg)
    if not blocks:
        mat = sp.csr_matrix((basis_out.size, basis_in.size))
        return HardyOperator(basis_in, basis_out, mat, 0, 0)
    total = blocks[0]
    for b in blocks[1:]:
        total = total + b
    return HardyOperator(basis_in, basis_out, _pack(sp.csr_matrix(total)), lo, hi)


def one_variable_symbol(k: int, coeffs, basis_in: HardyBasis, basis_out: HardyBasis | None = None) -> HardyOperator:
    """Multiplication by theta(zeta_k) for a one-variable matrix polynomial.

    coeffs is a sequence of (e_out, e_in) arrays (scalars allowed), the
    power-series coefficients of theta.
    """
    if not 1 <= k <= basis_in.num_vars:
        raise DimensionMismatch(f"variable index {k} out of range")
    symbol = {}
    for j, c in enumerate(coeffs):
        beta = [0] * basis_in.num_vars
        beta[k - 1] = j
        symbol[tuple(beta)] = np.atleast_2d(np.asarray(c, dtype=complex))
    return mult_operator(symbol, basis_in, basis_out)


def kernel_vector(lam, basis: HardyBasis, x: np.ndarray | None = None) -> HardyVector:
    """Truncated reproducing-kernel vector K_lambda . x.

    lam is a sequence of coordinates (finitely supported, inside the open
    disk); x is a coefficient-slot vector (default: first slot).
    """
    lam_arr = np.zeros(basis.num_vars, dtype=complex)
    coords = np.asarray(getattr(lam, "coords", lam), dtype=complex).reshape(-1)
    if coords.size > basis.num_vars and np.any(coords[basis.num_vars :] != 0):
        raise DimensionMismatch("kernel point supported beyond the materialized variables")
    lam_arr[: min(coords.size, basis.num_vars)] = coords[: basis.num_vars]
    if np.any(np.abs(lam_arr) >= 1.0):
        raise DimensionMismatch("kernel point must lie inside the open multidisk")
    if x is None:
        x = np.zeros(basis.coeff_dim, dtype=complex)
        x[0] = 1.0
    x = np.asarray(x, dtype=complex).reshape(basis.coeff_dim)
    mono = np.prod(np.conj(lam_arr)[None, :] ** basis.exponents, axis=1)
    return HardyVector(basis, np.kron(mono, x))


def kernel_norm_sq_full(lam) -> float:
    """||K_lambda||^2 of the untruncated kernel: prod 1/(1-|lam_k|^2)."""
    coords = np.asarray(getattr(lam, "coords", lam), dtype=complex).reshape(-1)
    return float(np.prod(1.0 / (1.0 - np.abs(coords) ** 2)))


def evaluate(v: HardyVector, point) -> np.ndarray:
    """Pointwise value of the (polynomial) vector at a multidisk point."""
    coords = np.zeros(v.basis.num_vars, dtype=complex)
    pt = np.asarray(getattr(point, "coords", point), dtype=complex).reshape(-1)
    coords[: min(pt.size, coords.size)] = pt[: coords.size]
    mono = np.prod(coords[None, :] ** v.basis.exponents, axis=1)
    e = v.basis.coeff_dim
    return v.coefficients.reshape(-1, e).T @ mono


def homogeneous_component(v: HardyVector, k: int) -> HardyVector:
    """Restriction of the coefficients to total degree k."""
    if not 0 <= k <= v.basis.max_degree:
        raise DegreeOverflow(f"degree {k} outside [0, {v.basis.max_degree}]")
    mask = v.basis.flat_degrees() == k
    return HardyVector(v.basis, np.where(mask, v.coefficients, 0.0))


@dataclass(frozen=True)
class InnerReport:
    passed: bool
    residual: float
    safe_cutoff: int
    tol: float


def is_inner_on_truncation(op: HardyOperator, tol: float, cutoff: int | None = None) -> InnerReport:
    """||op* op - I|| on inputs of degree <= cutoff; pass iff <= tol.

    The cutoff defaults to the operator's window-derived safe degree;
    callers holding a sharper bound on the symbol's decay may widen it.
    """
    c = op.safe_input_degree if cutoff is None else cutoff
    sel = np.nonzero(op.basis_in.degree_selector(c))[0]
    if sel.size == 0:
        return InnerReport(False, float("inf"), c, tol)
    m = op.matrix
    cols = m[:, sel].toarray() if sp.issparse(m) else np.asarray(m)[:, sel]
    gram = adjoint(cols) @ cols
    residual = operator_norm(gram - np.eye(sel.size))
    return InnerReport(residual <= tol, float(residual), c, tol)


def wandering_subspace(ops, basis: HardyBasis, cutoff: int | None = None) -> Subspace:
    """Range of prod_k (I - V_k V_k*) restricted to degrees <= cutoff.

    The default cutoff subtracts each factor's window growth; callers with
    sharper knowledge of an operator's transient degrees may widen it.
    """
    if cutoff is None:
        growth = sum(max(op.shift_hi, 0) + max(-op.shift_lo, 0) for op in ops)
        cutoff = basis.max_degree - growth
    if cutoff < 0:
        raise DegreeOverflow("no safe degrees left for the wandering computation")
    sel = np.nonzero(basis.degree_selector(cutoff))[0]
    cols = np.zeros((basis.size, sel.size), dtype=complex)
    cols[sel, np.arange(sel.size)] = 1.0
    for op in ops:
        m = op.matrix
        cols = cols - m @ (m.conj().T @ cols)
    keep = basis.degree_selector(cutoff)
    cols = cols * keep[:, None]
    return orthonormalize(cols, rank_tol=1e-8)


def parity_shift(k: int, basis: HardyBasis) -> HardyOperator:
    """Isometry moving the exponent of variable k by a parity rule.

    A monomial with exponent j in variable k maps to exponent j+3 when j
    is even and j-1 when j is odd; targets beyond the truncation are
    dropped.  Its square agrees with the squared coordinate shift on safe
    degrees and its adjoint kernel is the exponent-1 slice.
    """
    if not 1 <= k <= basis.num_vars:
        raise DimensionMismatch(f"variable index {k} out of range")
    exps = basis.exponents
    jcol = exps[:, k - 1]
    target = exps.copy()
    target[:, k - 1] = np.where(jcol % 2 == 0, jcol + 3, jcol - 1)
    ok = target.sum(axis=1) <= basis.max_degree
    cols = np.nonzero(ok)[0]
    rows = np.array(
        [basis.index_of[tuple(int(a) for a in target[i])] for i in cols], dtype=np.int64
    )
    n = basis.num_monomials
    mono = sp.csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(n, n))
    mat = mono if basis.coeff_dim == 1 else sp.kron(mono, sp.identity(basis.coeff_dim), "csr")
    return HardyOperator(basis, basis, _pack(sp.csr_matrix(mat)), -1, 3)


def mobius_partial_product(lams, m: int, n: int) -> tuple[complex, float]:
    """Partial product of disk points and the closed-form Cauchy increment.

    Returns (prod_{i=m+1..n} lam_i, |prod - 1|^2 + (1 - prod |lam_i|^2)),
    the squared Hardy distance between the consecutive partial products
    of the one-variable-per-factor Moebius functions.
    """
    lams = [complex(c) for c in np.asarray(getattr(lams, "coords", lams)).reshape(-1)]
    if not 0 <= m <= n <= len(lams):
        raise IndexError(f"need 0 <= m <= n <= {len(lams)}, got ({m}, {n})")
    seg = lams[m:n]
    prod = complex(np.prod(seg)) if seg else 1.0 + 0.0j
    mod_prod = float(np.prod([abs(c) ** 2 for c in seg])) if seg else 1.0
    return prod, float(abs(prod - 1.0) ** 2 + (1.0 - mod_prod))


def symbol_from_intertwiner(op: HardyOperator, sample_points, tol: float = 1e-8):
    """Recover symbol samples from a shift-intertwining operator.

    Checks that op intertwines the coordinate shifts of its bases on safe
    degrees, then for each sample point reads the constant-term block of
    op* applied to truncated kernel vectors, one coefficient slot at a
    time.  Returns a list of (value matrix, truncation error estimate).
    """
    bi, bo = op.basis_in, op.basis_out
    if (bi.num_vars, bi.max_degree) != (bo.num_vars, bo.max_degree):
        raise DimensionMismatch("bases must share variables and truncation degree")
    cutoff = min(op.safe_input_degree - 1, bi.max_degree - 1)
    if cutoff < 0:
        raise NotIntertwining("no safe degrees to certify intertwining")
    worst = 0.0
    sel = np.nonzero(bi.degree_selector(cutoff))[0]
    for k in range(1, bi.num_vars + 1):
        left = op.compose(shift(k, bi))
        right = shift(k, bo).compose(op)
        diff = _cols(left.matrix, sel) - _cols(right.matrix, sel)
        worst = max(worst, operator_norm(diff))
    if worst > tol:
        raise NotIntertwining(f"intertwining residual {worst:.3e} exceeds {tol:.3e}")
    op_norm_bound = operator_norm(op.dense()) if bi.size <= 4096 else None
    samples = []
    e_out, e_in = bo.coeff_dim, bi.coeff_dim
    const_rows = slice(0, e_in)  # constant monomial block in the input basis
    for lam in sample_points:
        psi_star = np.zeros((e_in, e_out), dtype=complex)
        for j in range(e_out):
            x = np.zeros(e_out, dtype=complex)
            x[j] = 1.0
            kv = kernel_vector(lam, bo, x)
            pulled = op.apply_adjoint(kv)
            psi_star[:, j] = pulled.coefficients[const_rows]
        coords = np.asarray(getattr(lam, "coords", lam), dtype=complex).reshape(-1)
        tail = max(kernel_norm_sq_full(coords) - float(
            np.sum(np.abs(kernel_vector(lam, enumerate_basis(bi.num_vars, bi.max_degree, 1)).coefficients) ** 2)
        ), 0.0)
        bound = (op_norm_bound if op_norm_bound is not None else 1.0) * np.sqrt(tail)
        samples.append((adjoint(psi_star), float(bound)))
    return samples


def vector_to_json(v: HardyVector) -> dict:
    return {
        "basis": {
            "num_vars": v.basis.num_vars,
            "max_degree": v.basis.max_degree,
            "coeff_dim": v.basis.coeff_dim,
        },
        "coefficients": [[i, float(c.real), float(c.imag)] for i, c in enumerate(v.coefficients) if c != 0],
    }


def vector_from_json(payload: dict) -> HardyVector:
    b = payload["basis"]
    basis = enumerate_basis(b["num_vars"], b["max_degree"], b["coeff_dim"])
    coeffs = np.zeros(basis.size, dtype=complex)
    for i, re, im in payload["coefficients"]:
        coeffs[int(i)] = re + 1j * im
    return HardyVector(basis, coeffs)


def operator_to_json(op: HardyOperator) -> dict:
    mat = sp.coo_matrix(op.matrix)
    return {
        "basis_in": {
            "num_vars": op.basis_in.num_vars,
            "max_degree": op.basis_in.max_degree,
            "coeff_dim": op.basis_in.coeff_dim,
        },
        "basis_out": {
            "num_vars": op.basis_out.num_vars,
            "max_degree": op.basis_out.max_degree,
            "coeff_dim": op.basis_out.coeff_dim,
        },
        "shift_lo": op.shift_lo,
        "shift_hi": op.shift_hi,
        "entries": [
            [int(r), int(c), float(v.real), float(v.imag)]
            for r, c, v in zip(mat.row, mat.col, mat.data)
        ],
    }


def operator_from_json(payload: dict) -> HardyOperator:
    bi = payload["basis_in"]
    bo = payload["basis_out"]
    basis_in = enumerate_basis(bi["num_vars"], bi["max_degree"], bi["coeff_dim"])
    basis_out = enumerate_basis(bo["num_vars"], bo["max_degree"], bo["coeff_dim"])
    rows, cols, data = [], [], []
    for r, c, re, im in payload["entries"]:
        rows.append(int(r))
        cols.append(int(c))
        data.append(re + 1j * im)
    mat = sp.csr_matrix(
        (np.array(data, dtype=complex), (rows, cols)),
        shape=(basis_out.size, basis_in.size),
    )
    return HardyOperator(basis_in, basis_out, _pack(mat), payload["shift_lo"], payload["shift_hi"])
