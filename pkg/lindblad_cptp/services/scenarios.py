"""
Model builders and observables for the Jaynes-Cummings and stiff decoherence experiments.

Kronecker convention, fixed everywhere: the qubit is the slow index and the cavity the fast
one, so basis vector ``(q, n)`` sits at ``q * m + n`` and the excited qubit block is the second
one.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import gammaln

from ..exceptions import DimensionError
from ..linalg import ComplexMatrix, RealVector, as_matrix, dagger
from ..models import JumpOperator, LindbladModel, LowRankFactor

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=np.complex128)
"""Raises ground (index 0) to excited (index 1)."""
SIGMA_MINUS = SIGMA_PLUS.T.copy()

STIFF_GAMMA = 1e5
STIFF_OMEGA0 = 2e14
STIFF_COUPLING = 1e14
STIFF_INITIAL_LEVEL = 2


def lowering_matrix(n: int) -> ComplexMatrix:
    """``n x n`` annihilation operator: ``a[l-1, l] = √l``."""
    if n < 1:
        raise ValueError(f'Need at least one level, got {n}.')
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(np.complex128)


def coherent_amplitudes(m: int, v: float) -> RealVector:
    """Normalized ``v^n/√(n!)`` for ``n = 0 .. m-1``, computed in log space."""
    n = np.arange(m)
    if v == 0:
        amps = (n == 0).astype(float)
    else:
        log_amps = n * np.log(abs(v)) - 0.5 * gammaln(n + 1)
        amps = np.exp(log_amps - log_amps.max()) * np.sign(v) ** n
    return amps / np.linalg.norm(amps)


def mean_photon_number(amps: ArrayLike) -> float:
    a = np.asarray(amps)
    return float(np.sum(np.arange(a.size) * np.abs(a) ** 2))


def basis_factor(n: int, level: int) -> LowRankFactor:
    if not 0 <= level < n:
        raise ValueError(f'Level {level} outside 0..{n - 1}.')
    psi = np.zeros(n, dtype=np.complex128)
    psi[level] = 1.0
    return LowRankFactor.from_vector(psi)


@dataclass(frozen=True, slots=True)
class JCParams:
    """Resonant Jaynes-Cummings parameters; ``v`` defaults to ``√(m/3)``."""

    m: int
    lam: float = 1.0
    kappa: float = 0.0
    v: float | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f'Cavity needs m >= 2 levels, got {self.m}.')
        if not self.lam > 0:
            raise ValueError(f'Coupling λ must be positive, got {self.lam}.')
        if not self.kappa >= 0:
            raise ValueError(f'Cavity decay κ must be non-negative, got {self.kappa}.')
        if self.v is None:
            object.__setattr__(self, 'v', math.sqrt(self.m / 3))
        elif not self.v > 0:
            raise ValueError(f'Coherent amplitude must be positive, got {self.v}.')

    @property
    def dim(self) -> int:
        return 2 * self.m

    @property
    def amplitude(self) -> float:
        assert self.v is not None
        return self.v

    @property
    def revival_time(self) -> float:
        return revival_time(self.lam, self.amplitude)


def build_jaynes_cummings(p: JCParams) -> tuple[LindbladModel, LowRankFactor]:
    """``H = λ(b σ⁺ + b† σ⁻)``, one jump ``√κ b``, qubit excited and cavity coherent."""
    eye_q = np.eye(2)
    b = np.kron(eye_q, lowering_matrix(p.m))
    sp = np.kron(SIGMA_PLUS, np.eye(p.m))
    sm = np.kron(SIGMA_MINUS, np.eye(p.m))
    h = p.lam * (b @ sp + dagger(b) @ sm)
    model = LindbladModel(h, (JumpOperator(1.0, math.sqrt(p.kappa) * b),))
    excited = np.array([0.0, 1.0])
    v0 = LowRankFactor.from_vector(np.kron(excited, coherent_amplitudes(p.m, p.amplitude)))
    return model, v0


def total_excitation_operator(m: int) -> ComplexMatrix:
    """``σ⁺σ⁻ ⊗ I + I ⊗ b̂†b̂``, conserved by the resonant coupling."""
    bh = lowering_matrix(m)
    return np.kron(SIGMA_PLUS @ SIGMA_MINUS, np.eye(m)) + np.kron(np.eye(2), dagger(bh) @ bh)


def substitute_hamiltonian(
    n: int, omega0: float = STIFF_OMEGA0, coupling: float = STIFF_COUPLING
) -> ComplexMatrix:
    """``ω₀ diag(0..n-1) + Ω (a + a†)``, a stand-in for the stiff example's Hamiltonian."""
    a = lowering_matrix(n)
    return omega0 * np.diag(np.arange(n)).astype(np.complex128) + coupling * (a + dagger(a))


def build_stiff_decoherence(
    n: int = 6, gamma: float = STIFF_GAMMA, hamiltonian: ArrayLike | None = None
) -> LindbladModel:
    """Jumps ``Γ/√2 · a`` and ``Γ · a†a`` with unit rates, in SI seconds."""
    a = lowering_matrix(n)
    h = substitute_hamiltonian(n) if hamiltonian is None else as_matrix(hamiltonian)
    if h.shape != (n, n):
        raise DimensionError(f'Stiff model Hamiltonian must be {n}x{n}, got {h.shape}.')
    return LindbladModel(
        h,
        (
            JumpOperator(1.0, gamma / math.sqrt(2) * a),
            JumpOperator(1.0, gamma * (dagger(a) @ a)),
        ),
    )


def _check_qubit_dim(n: int, m: int):
    if n != 2 * m:
        raise DimensionError(f'Expected dimension 2m = {2 * m}, got {n}.')


def excited_population(state: ArrayLike | LowRankFactor, m: int) -> float:
    """Trace of the lower-right ``m x m`` block, or ``‖V[m:]‖_F²`` for a factor."""
    if isinstance(state, LowRankFactor):
        _check_qubit_dim(state.dim, m)
        lower = state.v[m:]
        return float(np.vdot(lower, lower).real)
    rho = as_matrix(state, name='ρ')
    _check_qubit_dim(rho.shape[0], m)
    return float(np.trace(rho[m:, m:]).real)


def revival_time(lam: float, v: float) -> float:
    """``t_r = 2π|v|/λ``."""
    if not lam > 0:
        raise ValueError(f'Coupling λ must be positive, got {lam}.')
    return 2 * math.pi * abs(v) / lam
