"""
Flow operator ``U(τ) = e^{Jτ}`` of the factor equation ``dV/dt = J V``.

The exact variant caches one dense propagator per offset. Offsets are always rational multiples
of a step size, so the cache is keyed by ``(Δt, coefficient)`` with the coefficient held as a
``Fraction``. The Taylor variant never forms an ``N x N`` propagator.
"""

import logging
import threading
from collections.abc import Iterable
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import DimensionError
from ..linalg import ComplexMatrix, as_matrix, dagger, frozen, matexp
from ..models import EffectiveGenerator, LindbladModel
from ..models.tableau import Coefficient, to_fraction
from .generator import effective_generator

logger = logging.getLogger(__name__)

type OffsetKey = tuple[float, Fraction]


class FlowKind(StrEnum):
    EXACT = 'exact'
    TAYLOR = 'taylor'


@dataclass(frozen=True, slots=True)
class FlowMethod:
    """``exact`` or ``taylor:<k>``."""

    kind: FlowKind = FlowKind.EXACT
    order: int | None = None

    def __post_init__(self):
        if self.kind == FlowKind.TAYLOR:
            if self.order is None or self.order < 1:
                raise ValueError(f'Taylor flow needs an order >= 1, got {self.order}.')
        elif self.order is not None:
            raise ValueError('Exact flow takes no order.')

    @classmethod
    def exact(cls) -> 'FlowMethod':
        return cls()

    @classmethod
    def taylor(cls, order: int) -> 'FlowMethod':
        return cls(FlowKind.TAYLOR, order)

    @classmethod
    def parse(cls, text: str) -> 'FlowMethod':
        """Parse ``exact`` or ``taylor:<k>``."""
        name, _, order = text.strip().lower().partition(':')
        if name == FlowKind.EXACT and not order:
            return cls.exact()
        if name == FlowKind.TAYLOR and order.isdigit():
            return cls.taylor(int(order))
        raise ValueError(f'Unknown flow `{text}`; expected `exact` or `taylor:<k>`.')

    def __str__(self) -> str:
        return self.kind.value if self.order is None else f'{self.kind}:{self.order}'


class FlowOperator:
    """
    Evaluates ``V ↦ e^{Jτ} V`` with ``τ = coeff·Δt``.

    Only the exact method mutates state (its propagator cache). Cache fills are serialized
    with a lock; after ``warm_up`` every call is read-only.
    """

    def __init__(self, generator: EffectiveGenerator, method: FlowMethod | None = None):
        self.generator = generator
        self.method = method or FlowMethod.exact()
        self._cache: dict[OffsetKey, ComplexMatrix] = {}
        self._lock = threading.Lock()

    @classmethod
    def for_model(cls, model: LindbladModel, method: FlowMethod | None = None) -> 'FlowOperator':
        return cls(effective_generator(model), method)

    @property
    def dim(self) -> int:
        return self.generator.dim

    @property
    def cached_offsets(self) -> list[OffsetKey]:
        with self._lock:
            return sorted(self._cache)

    def propagator(
        self, dt: float, coeff: Coefficient = 1, *, allow_backward: bool = False
    ) -> ComplexMatrix:
        """Dense ``U(coeff·Δt)``; cached for the exact method, rebuilt from ``I`` for Taylor."""
        key = self._key(dt, coeff, allow_backward)
        if self.method.kind == FlowKind.TAYLOR:
            return self._taylor(key, np.eye(self.dim, dtype=np.complex128))
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        with self._lock:
            cached = self._cache.get(key)
            if cached is None:
                tau = key[0] * float(key[1])
                if key[1] == 0:
                    cached = np.eye(self.dim, dtype=np.complex128)
                else:
                    cached = matexp(tau * self.generator.matrix)
                cached = frozen(cached)
                self._cache[key] = cached
                logger.debug('Cached propagator for offset %s·%g', key[1], key[0])
        return cached

    def propagate(
        self, dt: float, m: ArrayLike, coeff: Coefficient = 1, *, allow_backward: bool = False
    ) -> ComplexMatrix:
        """Return ``e^{J·coeff·Δt} M`` for an ``N x r`` operand ``M``."""
        key = self._key(dt, coeff, allow_backward)
        mat = as_matrix(m, name='flow operand')
        if mat.shape[0] != self.dim:
            raise DimensionError(
                f'Flow operand has {mat.shape[0]} rows, generator dimension is {self.dim}.'
            )
        if mat.shape[1] == 0 or key[1] == 0:
            return mat.copy()
        if self.method.kind == FlowKind.TAYLOR:
            return self._taylor(key, mat)
        return self.propagator(dt, coeff, allow_backward=allow_backward) @ mat

    def conjugate(
        self, dt: float, rho: ArrayLike, coeff: Coefficient = 1, *, allow_backward: bool = False
    ) -> ComplexMatrix:
        """``Û ρ Û†`` by two one-sided applications of the flow."""
        left = self.propagate(dt, rho, coeff, allow_backward=allow_backward)
        if left.shape[0] != left.shape[1]:
            raise DimensionError(f'Conjugation needs a square operand, got shape {left.shape}.')
        return dagger(self.propagate(dt, dagger(left), coeff, allow_backward=allow_backward))

    def warm_up(self, dt: float, coeffs: Iterable[Coefficient]):
        """Fill the propagator cache for every offset a step will touch."""
        if self.method.kind != FlowKind.EXACT:
            return
        keys = {to_fraction(c) for c in coeffs}
        for coeff in sorted(keys):
            self.propagator(dt, coeff, allow_backward=True)
        logger.debug('Flow cache warmed for Δt=%g with %d offsets', dt, len(keys))

    def _key(self, dt: float, coeff: Coefficient, allow_backward: bool) -> OffsetKey:
        dt = float(dt)
        c = to_fraction(coeff)
        if not np.isfinite(dt):
            raise ValueError(f'Flow step must be finite, got {dt}.')
        if dt * float(c) < 0 and not allow_backward:
            raise ValueError(f'Negative flow offset {float(c) * dt:g} is not allowed.')
        return dt, c

    def _taylor(self, key: OffsetKey, mat: ComplexMatrix) -> ComplexMatrix:
        assert self.method.order is not None
        tau = key[0] * float(key[1])
        j = self.generator.matrix
        term = mat
        out = mat.copy()
        for m in range(1, self.method.order + 1):
            term = (tau / m) * (j @ term)
            out += term
        return out

