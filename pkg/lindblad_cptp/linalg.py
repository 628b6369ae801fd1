"""
Dense complex linear algebra used by every other module.

All matrices are ``numpy`` arrays of dtype ``complex128`` in C (row-major) order. The heavy
lifting is delegated to ``scipy.linalg``: ``expm`` (Padé scaling-and-squaring), ``qr`` with
column pivoting (LAPACK ``geqp3``), ``svd`` and ``eigh``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionError, HermiticityError, NonFiniteError

type ComplexMatrix = NDArray[np.complex128]
type RealVector = NDArray[np.float64]

HERMITIAN_TOL = 1e-8
"""Relative anti-Hermitian defect that ``hermitian_eig`` silently symmetrizes away."""


@dataclass(frozen=True, slots=True)
class PivotedQR:
    """Column-pivoted QR factors with ``q @ r == w[:, perm]``."""

    q: ComplexMatrix
    r: ComplexMatrix
    perm: NDArray[np.intp]

    def unpivoted_r(self) -> ComplexMatrix:
        """Return ``R Π^T`` so that ``q @ unpivoted_r() == w``."""
        return self.r[:, np.argsort(self.perm)]


def as_matrix(
    a: ArrayLike, *, name: str = 'matrix', allow_nonfinite: bool = False
) -> ComplexMatrix:
    """Coerce ``a`` to a finite 2-D ``complex128`` C-ordered array."""
    m = np.ascontiguousarray(np.asarray(a, dtype=np.complex128))
    if m.ndim != 2:
        raise DimensionError(f'{name} must be 2-D, got shape {m.shape}.')
    if not allow_nonfinite and not np.all(np.isfinite(m)):
        raise NonFiniteError(f'{name} has NaN or Inf entries.')
    return m


def as_square(a: ArrayLike, *, name: str = 'matrix') -> ComplexMatrix:
    m = as_matrix(a, name=name)
    if m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f'{name} must be square and non-empty, got shape {m.shape}.')
    return m


def dagger(a: ComplexMatrix) -> ComplexMatrix:
    return a.conj().T


def frobenius(a: ComplexMatrix) -> float:
    return float(np.linalg.norm(a))


def hermitian_defect(a: ComplexMatrix) -> float:
    """Frobenius norm of ``a - a†``."""
    return float(np.linalg.norm(a - a.conj().T))


def symmetrize(a: ComplexMatrix) -> ComplexMatrix:
    return 0.5 * (a + a.conj().T)


def frozen(a: ComplexMatrix) -> ComplexMatrix:
    """Mark ``a`` read-only and return it."""
    a.flags.writeable = False
    return a


def matexp(a: ArrayLike) -> ComplexMatrix:
    """Matrix exponential ``e^A`` of a square matrix."""
    return np.ascontiguousarray(la.expm(as_square(a, name='matexp input')))


def pivoted_qr(w: ArrayLike) -> PivotedQR:
    """
    Rank-revealing QR with column pivoting, ``Q R = W Π``.

    For an ``N x k`` input, ``Q`` is ``N x p`` and ``R`` is ``p x k`` with ``p = min(N, k)``;
    the diagonal of ``R`` is non-increasing in magnitude.
    """
    m = as_matrix(w, name='pivoted_qr input')
    if m.size == 0:
        raise DimensionError(f'pivoted_qr needs a non-empty matrix, got shape {m.shape}.')
    q, r, perm = la.qr(m, mode='economic', pivoting=True)
    return PivotedQR(
        q=np.ascontiguousarray(q), r=np.ascontiguousarray(r), perm=np.asarray(perm, np.intp)
    )


def svd(m: ArrayLike) -> tuple[ComplexMatrix, RealVector, ComplexMatrix]:
    """Thin SVD ``M = U diag(σ) V†`` with ``σ`` sorted descending. Returns ``(U, σ, V)``."""
    a = as_matrix(m, name='svd input')
    try:
        u, s, vh = la.svd(a, full_matrices=False)
    except la.LinAlgError:
        # gesdd occasionally fails to converge on nearly rank-deficient input
        u, s, vh = la.svd(a, full_matrices=False, lapack_driver='gesvd')
    return u, s, vh.conj().T


def hermitian_eig(a: ArrayLike, tol: float = HERMITIAN_TOL) -> tuple[RealVector, ComplexMatrix]:
    """
    Eigendecomposition ``A = U diag(λ) U†`` of a Hermitian matrix, ``λ`` ascending.

    Roundoff-level anti-Hermitian parts (``‖A - A†‖_F <= tol ‖A‖_F``) are symmetrized away;
    anything larger raises ``HermiticityError``.
    """
    m = as_square(a, name='hermitian_eig input')
    defect = hermitian_defect(m)
    scale = frobenius(m)
    if defect > tol * scale:
        raise HermiticityError(
            f'Matrix is not Hermitian: ‖A - A†‖_F = {defect:.3e} exceeds {tol:.0e}·‖A‖_F.'
        )
    lam, u = la.eigh(symmetrize(m))
    return lam, u
