from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import DimensionError
from ..linalg import ComplexMatrix, as_matrix, frozen

type DensityMatrix = ComplexMatrix
"""Hermitian PSD unit-trace ``N x N`` matrix, stored in full."""


@dataclass(frozen=True, slots=True)
class LowRankFactor:
    """Cholesky-style factor ``V`` (``N x r``, ``r <= N``) of ``ρ = V V†``."""

    v: ComplexMatrix

    def __post_init__(self):
        v = as_matrix(self.v, name='low-rank factor')
        if v.shape[1] == 0 or v.shape[1] > v.shape[0]:
            raise DimensionError(f'Factor must have 1 <= r <= N columns, got shape {v.shape}.')
        object.__setattr__(self, 'v', frozen(v if v is not self.v else v.copy()))

    @classmethod
    def from_vector(cls, psi: ArrayLike) -> 'LowRankFactor':
        """Rank-1 factor of the pure state ``|ψ⟩⟨ψ|``."""
        return cls(np.asarray(psi, dtype=np.complex128).reshape(-1, 1))

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    @property
    def rank(self) -> int:
        return self.v.shape[1]

    def trace(self) -> float:
        """``Tr(V V†) = ‖V‖_F²``."""
        return float(np.vdot(self.v, self.v).real)

    def dense(self) -> ComplexMatrix:
        return self.v @ self.v.conj().T
