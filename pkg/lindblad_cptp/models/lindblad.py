from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import DimensionError, HermiticityError
from ..linalg import ComplexMatrix, as_matrix, as_square, frobenius, frozen, hermitian_defect

MODEL_HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, slots=True)
class JumpOperator:
    """One dissipation channel ``γ (L ρ L† - ½{L†L, ρ})``."""

    rate: float
    operator: ComplexMatrix

    def __post_init__(self):
        rate = float(self.rate)
        if not np.isfinite(rate) or rate < 0:
            raise ValueError(f'Jump rate must be finite and non-negative, got {self.rate}.')
        object.__setattr__(self, 'rate', rate)
        object.__setattr__(
            self, 'operator', frozen(as_square(self.operator, name='jump operator').copy())
        )


@dataclass(frozen=True, slots=True)
class LindbladModel:
    """
    Time-independent Lindblad problem: Hamiltonian ``H`` (angular frequency, ħ = 1) plus an
    ordered list of jump operators.

    The jump order is part of the contract: it fixes the column layout of
    ``dissipator_columns`` and the order of extracted Kraus operators.
    """

    hamiltonian: ComplexMatrix
    jumps: tuple[JumpOperator, ...] = field(default_factory=tuple)

    def __post_init__(self):
        h = frozen(as_square(self.hamiltonian, name='Hamiltonian').copy())
        defect = hermitian_defect(h)
        if defect > MODEL_HERMITIAN_TOL * frobenius(h):
            raise HermiticityError(f'Hamiltonian is not Hermitian (‖H - H†‖_F = {defect:.3e}).')
        jumps = tuple(
            j if isinstance(j, JumpOperator) else JumpOperator(*j) for j in self.jumps
        )
        for index, jump in enumerate(jumps):
            if jump.operator.shape != h.shape:
                raise DimensionError(
                    f'Jump operator {index} has shape {jump.operator.shape}, '
                    f'Hamiltonian has {h.shape}.'
                )
        object.__setattr__(self, 'hamiltonian', h)
        object.__setattr__(self, 'jumps', jumps)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    def with_rates(self, factor: float) -> 'LindbladModel':
        """Copy with every rate multiplied by ``factor``."""
        return LindbladModel(
            self.hamiltonian,
            tuple(JumpOperator(j.rate * factor, j.operator) for j in self.jumps),
        )

    def check_operand(self, a: ArrayLike, *, name: str = 'operand') -> ComplexMatrix:
        """Coerce ``a`` to a matrix with ``dim`` rows."""
        m = as_matrix(a, name=name)
        if m.shape[0] != self.dim:
            raise DimensionError(f'{name} has {m.shape[0]} rows, model dimension is {self.dim}.')
        return m


@dataclass(frozen=True, slots=True)
class EffectiveGenerator:
    """``J = -i H - ½ Σ γ L†L``; the factor flow solves ``dV/dt = J V``."""

    matrix: ComplexMatrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]
