"""
Rank truncation of Cholesky-style factors and its Kraus witness.

``truncate`` never forms ``W W†``: it takes a column-pivoted QR of the tall factor and an SVD of
the small triangular factor. ``kraus_witness`` does the same truncation on a dense PSD matrix
through its eigendecomposition and returns the projector ``P`` with ``T = P A P†``.
"""

import dataclasses
import logging

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import DimensionError, PositivityError
from ..linalg import (
    ComplexMatrix,
    RealVector,
    as_matrix,
    dagger,
    frobenius,
    hermitian_eig,
    pivoted_qr,
    svd,
)
from ..models import EpsilonRule, EpsilonRuleKind, LowRankFactor, TruncationInfo, TruncationPolicy

logger = logging.getLogger(__name__)

PSD_TOL = 1e-10
"""Relative negative eigenvalue ``kraus_witness`` still accepts as roundoff."""


def kept_rank(energies: RealVector, policy: TruncationPolicy) -> tuple[int, int, float]:
    """
    Apply the cutoff rule to descending energies ``σ_j²``.

    Returns ``(r, r_eps, discarded)`` where ``r_eps`` is the smallest ``r >= 1`` whose tail
    ``Σ_{j>r} σ_j²`` falls below ``ε²`` (a tail exactly at ``ε²`` keeps the extra vector),
    ``r = min(r_eps, rmax)`` and ``discarded`` is the tail actually dropped.
    """
    p = len(energies)
    tail = np.append(np.cumsum(energies[::-1])[::-1], 0.0)
    below = np.flatnonzero(tail[1:] < policy.epsilon**2)
    r_eps = int(below[0]) + 1 if below.size else p
    r = r_eps if policy.rmax is None else min(r_eps, policy.rmax)
    return r, r_eps, float(tail[r])


def truncate_with_info(
    w: LowRankFactor | ArrayLike, policy: TruncationPolicy
) -> tuple[LowRankFactor, TruncationInfo]:
    """Truncated factor ``Ŵ = Q Û_r Σ_r`` plus a record of what was kept."""
    m = as_matrix(w.v if isinstance(w, LowRankFactor) else w, name='truncation input')
    if m.size == 0:
        raise DimensionError(f'Cannot truncate an empty factor of shape {m.shape}.')
    if frobenius(m) == 0:
        logger.debug('Truncating an all-zero factor; returning a rank-1 zero factor')
        zero = LowRankFactor(np.zeros((m.shape[0], 1), dtype=np.complex128))
        return zero, TruncationInfo(1, 1, False, 0.0, degenerate=True)

    qr = pivoted_qr(m)
    u, s, _ = svd(qr.unpivoted_r())
    r, r_eps, discarded = kept_rank(s**2, policy)
    w_hat = qr.q @ (u[:, :r] * s[:r])
    info = TruncationInfo(
        rank=r,
        rank_eps=r_eps,
        rmax_bound=r < r_eps,
        discarded_energy=discarded,
    )
    return LowRankFactor(w_hat), info


def truncate(w: LowRankFactor | ArrayLike, policy: TruncationPolicy) -> LowRankFactor:
    return truncate_with_info(w, policy)[0]


def kraus_witness(a: ArrayLike, policy: TruncationPolicy) -> tuple[ComplexMatrix, ComplexMatrix]:
    """
    Single-operator Kraus form of the truncation of a PSD matrix ``A``.

    Returns ``(P, T)`` with ``P = U D U†`` the orthogonal projector onto the kept eigenvectors and
    ``T`` the truncated matrix, so that ``T = P A P†``.
    """
    lam, vecs = hermitian_eig(a)
    lam, vecs = lam[::-1], vecs[:, ::-1]
    scale = max(float(np.abs(lam).max()), np.finfo(float).tiny)
    if lam[-1] < -PSD_TOL * scale:
        raise PositivityError(
            f'Matrix is not positive semidefinite: smallest eigenvalue {lam[-1]:.3e}.'
        )
    r, _, _ = kept_rank(np.clip(lam, 0.0, None), policy)
    kept = vecs[:, :r]
    p = kept @ dagger(kept)
    t = (kept * lam[:r]) @ dagger(kept)
    return p, t


def resolve_policy(policy: TruncationPolicy, rule: EpsilonRule, dt: float) -> TruncationPolicy:
    """Fix ``epsilon`` for step ``dt``: unchanged for ``fixed``, ``Δt^q`` for ``dt_pow``."""
    if rule.kind == EpsilonRuleKind.FIXED:
        return policy
    assert rule.power is not None
    return dataclasses.replace(policy, epsilon=float(dt) ** rule.power)
