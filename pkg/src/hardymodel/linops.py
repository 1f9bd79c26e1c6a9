"""Dense complex linear algebra kernel.

Adjoints, Hermitian PSD square roots, resolvent solves, deterministic
orthonormalization, orthogonal projectors and subspace comparison.  All
functions are pure; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NegativeEigenvalue, NotHermitian, SingularShift

__all__ = [
    "Subspace",
    "adjoint",
    "hermitian_sqrt",
    "operator_norm",
    "orthonormalize",
    "projector",
    "solve_shifted",
    "subspace_distance",
]


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def operator_norm(a) -> float:
    """Spectral norm; accepts dense arrays or scipy sparse matrices."""
    if hasattr(a, "toarray"):
        a = a.toarray()
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


@dataclass(frozen=True)
class Subspace:
    """Subspace of C^ambient_dim given by an orthonormal column basis.

    A zero-dimensional subspace has a (ambient_dim, 0) basis.
    """

    ambient_dim: int
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def __post_init__(self):
        if self.basis.shape[0] != self.ambient_dim:
            raise DimensionMismatch(
                f"basis has {self.basis.shape[0]} rows, ambient dim is {self.ambient_dim}"
            )
        if self.dim > self.ambient_dim:
            raise DimensionMismatch("more basis vectors than ambient dimension")
        gram = adjoint(self.basis) @ self.basis
        if self.dim and operator_norm(gram - np.eye(self.dim)) > 1e-12:
            raise DimensionMismatch("basis columns are not orthonormal")


def hermitian_sqrt(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Hermitian PSD square root via full eigendecomposition.

    Eigenvalues in [-tol, 0) are clamped to 0; anything below -tol raises
    NegativeEigenvalue.  Asymmetry beyond tol raises NotHermitian.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("hermitian_sqrt expects a square matrix")
    asym = operator_norm(a - adjoint(a))
    if asym > tol:
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds tol {tol:.3e}")
    w, v = np.linalg.eigh((a + adjoint(a)) / 2.0)
    if w.size and w[0] < -tol:
        raise NegativeEigenvalue(f"eigenvalue {w[0]:.3e} below -tol {-tol:.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ adjoint(v)


def solve_shifted(t: np.ndarray, z: complex, cond_cap: float = 1e12) -> np.ndarray:
    """(I - z*T)^{-1} by direct linear solve, no series truncation."""
    t = np.asarray(t, dtype=complex)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DimensionMismatch("solve_shifted expects a square matrix")
    m = np.eye(t.shape[0], dtype=complex) - z * t
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularShift(f"I - z*T has condition number {cond:.3e}")
    return scipy.linalg.solve(m, np.eye(t.shape[0], dtype=complex))


def apply_shifted_inverse(t: np.ndarray, z: complex, rhs: np.ndarray) -> np.ndarray:
    """(I - z*T)^{-1} @ rhs without forming the inverse."""
    t = np.asarray(t, dtype=complex)
    m = np.eye(t.shape[0], dtype=complex) - z * t
    try:
        return scipy.linalg.solve(m, rhs)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise SingularShift(str(exc)) from exc


def orthonormalize(vectors: np.ndarray, rank_tol: float = 1e-10) -> Subspace:
    """Deterministic pivoted span of the given columns.

    Column-pivoted QR greedily picks the largest remaining column norm
    (ties resolved by lowest index inside LAPACK, deterministically); a
    pivot is accepted while its residual norm exceeds rank_tol times the
    largest original column norm.  Zero input yields the
    zero-dimensional subspace.
    """
    v = np.array(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    ambient, ncols = v.shape
    if ncols == 0 or ambient == 0:
        return Subspace(ambient, np.zeros((ambient, 0), dtype=complex))
    scale = float(np.max(np.linalg.norm(v, axis=0)))
    if scale == 0.0:
        return Subspace(ambient, np.zeros((ambient, 0), dtype=complex))
    q, r, _ = scipy.linalg.qr(v, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rank_tol * scale))
    if rank == 0:
        return Subspace(ambient, np.zeros((ambient, 0), dtype=complex))
    return Subspace(ambient, np.ascontiguousarray(q[:, :rank]))


def projector(s: Subspace) -> np.ndarray:
    """Orthogonal projector basis @ basis*."""
    return s.basis @ adjoint(s.basis)


def subspace_distance(s1: Subspace, s2: Subspace) -> float:
    """Spectral norm of the projector difference; lies in [0, 1]."""
    if s1.ambient_dim != s2.ambient_dim:
        raise DimensionMismatch("subspaces live in different ambient spaces")
    return min(1.0, operator_norm(projector(s1) - projector(s2)))
