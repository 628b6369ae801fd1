"""Lindblad generator in standard form, effective-Hamiltonian split form and vectorized form."""

import numpy as np
from numpy.typing import ArrayLike

from ..linalg import ComplexMatrix, as_square, dagger, matexp
from ..models import EffectiveGenerator, LindbladModel, LowRankFactor


def effective_generator(model: LindbladModel) -> EffectiveGenerator:
    """``J = -i H - ½ Σ_α γ_α L_α† L_α``."""
    j = -1j * model.hamiltonian
    for jump in model.jumps:
        j = j - 0.5 * jump.rate * (dagger(jump.operator) @ jump.operator)
    return EffectiveGenerator(np.ascontiguousarray(j))


def lindblad_rhs(model: LindbladModel, rho: ArrayLike) -> ComplexMatrix:
    """``-i[H, ρ] + Σ_α γ_α (L_α ρ L_α† - ½{L_α†L_α, ρ})``."""
    r = _density(model, rho)
    h = model.hamiltonian
    out = -1j * (h @ r - r @ h)
    for jump in model.jumps:
        ll = jump.operator
        ldl = dagger(ll) @ ll
        out += jump.rate * (ll @ r @ dagger(ll) - 0.5 * (ldl @ r + r @ ldl))
    return out


def split_rhs(model: LindbladModel, rho: ArrayLike) -> ComplexMatrix:
    """Same generator written as ``J ρ + ρ J† + Σ_α γ_α L_α ρ L_α†``."""
    r = _density(model, rho)
    j = effective_generator(model).matrix
    out = j @ r + r @ dagger(j)
    for jump in model.jumps:
        out += jump.rate * (jump.operator @ r @ dagger(jump.operator))
    return out


def jump_sum(model: LindbladModel, rho: ComplexMatrix) -> ComplexMatrix:
    """``Σ_α γ_α L_α ρ L_α†``, the part of the generator the integrating factor leaves over."""
    out = np.zeros_like(rho)
    for jump in model.jumps:
        out += jump.rate * (jump.operator @ rho @ dagger(jump.operator))
    return out


def dissipator_columns(
    model: LindbladModel, v: LowRankFactor | ArrayLike, scale: float
) -> ComplexMatrix:
    """
    Blocks ``√(scale·γ_α) L_α V`` side by side, in jump-list order.

    The result ``D`` satisfies ``D D† = scale Σ_α γ_α L_α V V† L_α†``. With no jumps the result
    is ``N x 0``.
    """
    if not scale >= 0:
        raise ValueError(f'Dissipator column scale must be non-negative, got {scale}.')
    vm = model.check_operand(v.v if isinstance(v, LowRankFactor) else v, name='factor')
    if not model.jumps:
        return np.zeros((model.dim, 0), dtype=np.complex128)
    blocks = [np.sqrt(scale * jump.rate) * (jump.operator @ vm) for jump in model.jumps]
    return np.ascontiguousarray(np.hstack(blocks))


def vectorized_generator(model: LindbladModel) -> ComplexMatrix:
    """
    ``N² x N²`` matrix ``𝕃`` with ``vec(lindblad_rhs(ρ)) = 𝕃 vec(ρ)``, row-major ``vec``.

    Built column by column from ``lindblad_rhs`` on the matrix units.
    """
    n = model.dim
    out = np.empty((n * n, n * n), dtype=np.complex128)
    unit = np.zeros((n, n), dtype=np.complex128)
    for k in range(n * n):
        unit.flat[k] = 1.0
        out[:, k] = lindblad_rhs(model, unit).ravel()
        unit.flat[k] = 0.0
    return out


def exact_step(model: LindbladModel, dt: float, rho: ArrayLike) -> ComplexMatrix:
    """Exact solution ``e^{Δt 𝕃} ρ``; only sensible for small ``N``."""
    r = _density(model, rho)
    prop = matexp(dt * vectorized_generator(model))
    return (prop @ r.ravel()).reshape(r.shape)


def _density(model: LindbladModel, rho: ArrayLike) -> ComplexMatrix:
    return model.check_operand(as_square(rho, name='ρ'), name='ρ')
