"""Numerical certificates of the CPTP structure: state reports, Choi matrices, rank series."""

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import NonFiniteError
from ..linalg import ComplexMatrix, RealVector, as_square, frobenius, hermitian_eig, symmetrize
from ..models import LowRankFactor

type OneStepMap = Callable[[ComplexMatrix], ComplexMatrix]

RANK_REL_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class CPTPReport:
    trace_defect: float
    herm_defect: float
    min_eig: float
    rank_eps: int

    def passes(self, *, trace_tol: float, herm_tol: float, eig_tol: float) -> bool:
        return (
            self.trace_defect <= trace_tol
            and self.herm_defect <= herm_tol
            and self.min_eig >= -eig_tol
        )


def cptp_report(rho: ArrayLike, eps_r: float | None = None) -> CPTPReport:
    """
    Trace, Hermiticity and positivity defects of ``rho``.

    Eigenvalues come from the Hermitian part, so a non-Hermitian input is reported rather than
    rejected. ``eps_r`` defaults to ``1e-12`` times the largest eigenvalue.
    """
    r = as_square(rho, name='ρ')
    herm = r - r.conj().T
    lam, _ = hermitian_eig(symmetrize(r))
    threshold = RANK_REL_TOL * max(float(lam[-1]), 0.0) if eps_r is None else eps_r
    return CPTPReport(
        trace_defect=abs(complex(np.trace(r)) - 1.0),
        herm_defect=frobenius(herm),
        min_eig=float(lam[0]),
        rank_eps=int(np.count_nonzero(lam > threshold)),
    )


def factor_report(v: LowRankFactor, eps_r: float | None = None) -> CPTPReport:
    """``cptp_report`` of ``V V†`` using the singular values of ``V`` only."""
    s = np.linalg.svd(v.v, compute_uv=False)
    lam = s**2
    threshold = RANK_REL_TOL * float(lam[0]) if eps_r is None else eps_r
    return CPTPReport(
        trace_defect=abs(float(lam.sum()) - 1.0),
        herm_defect=0.0,
        min_eig=0.0 if v.rank < v.dim else float(lam[-1]),
        rank_eps=int(np.count_nonzero(lam > threshold)),
    )


def choi_matrix(step: OneStepMap, n: int, *, workers: int = 1) -> ComplexMatrix:
    """
    ``C = Σ_ij E_ij ⊗ step(E_ij)``; ``step`` must be linear (no renormalization).

    Block ``(i, j)`` of ``C`` is ``step(E_ij)``. The ``N²`` probes are independent and may be
    spread over ``workers`` threads.
    """

    def probe(k: int) -> ComplexMatrix:
        unit = np.zeros((n, n), dtype=np.complex128)
        unit.flat[k] = 1.0
        out = np.asarray(step(unit), dtype=np.complex128)
        if out.shape != (n, n):
            raise ValueError(f'Probed map returned shape {out.shape}, expected {(n, n)}.')
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(f'Probed map returned non-finite output on E[{divmod(k, n)}].')
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(probe, range(n * n)))
    else:
        blocks = [probe(k) for k in range(n * n)]

    c = np.empty((n * n, n * n), dtype=np.complex128)
    for k, block in enumerate(blocks):
        i, j = divmod(k, n)
        c[i * n : (i + 1) * n, j * n : (j + 1) * n] = block
    return c


def choi_spectrum(c: ArrayLike) -> RealVector:
    """Ascending eigenvalues of a Choi matrix (Hermitian part)."""
    lam, _ = hermitian_eig(symmetrize(as_square(c, name='Choi matrix')))
    return lam


def choi_hermitian_defect(c: ArrayLike) -> float:
    m = as_square(c, name='Choi matrix')
    return frobenius(m - m.conj().T) / max(frobenius(m), np.finfo(float).tiny)


def rank_series(trajectory: Iterable[LowRankFactor]) -> list[int]:
    return [v.rank for v in trajectory]
