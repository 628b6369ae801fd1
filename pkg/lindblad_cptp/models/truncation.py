from dataclasses import dataclass
from enum import StrEnum

import numpy as np


@dataclass(frozen=True, slots=True)
class PreTruncation:
    """
    Extra truncation of the ``O(√Δt)``-scaled column blocks before they are concatenated.

    ``epsilon=None`` resolves to ``Δt^k`` at step time, ``k`` being the tableau order.
    """

    enabled: bool = False
    epsilon: float | None = None

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon >= 0:
            raise ValueError(f'Pre-truncation epsilon must be non-negative, got {self.epsilon}.')

    def resolve(self, dt: float, order: int) -> float:
        return self.epsilon if self.epsilon is not None else dt**order


@dataclass(frozen=True, slots=True)
class TruncationPolicy:
    """Energy cutoff ``epsilon`` and rank cap ``rmax`` (``None`` means unbounded)."""

    epsilon: float = 0.0
    rmax: int | None = None
    pre_truncate: PreTruncation = PreTruncation()

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f'epsilon must be finite and non-negative, got {self.epsilon}.')
        if self.rmax is not None and self.rmax < 1:
            raise ValueError(f'rmax must be >= 1 when bounded, got {self.rmax}.')

    @classmethod
    def exact(cls) -> 'TruncationPolicy':
        """No truncation at all: ``epsilon = 0``, unbounded rank."""
        return cls()


@dataclass(frozen=True, slots=True)
class TruncationInfo:
    """What a single truncation kept and threw away."""

    rank: int
    rank_eps: int
    rmax_bound: bool
    discarded_energy: float
    degenerate: bool = False


class EpsilonRuleKind(StrEnum):
    FIXED = 'fixed'
    DT_POW = 'dt_pow'


@dataclass(frozen=True, slots=True)
class EpsilonRule:
    """How ``epsilon`` is chosen for a run: as given, or ``Δt^q`` once the step is known."""

    kind: EpsilonRuleKind = EpsilonRuleKind.FIXED
    power: float | None = None

    def __post_init__(self):
        if self.kind == EpsilonRuleKind.DT_POW and not (self.power is not None and self.power > 0):
            raise ValueError(f'dt_pow needs a positive power, got {self.power}.')

    @classmethod
    def parse(cls, text: str) -> 'EpsilonRule':
        """Parse ``fixed`` or ``dt_pow:<q>``."""
        name, _, power = text.strip().lower().partition(':')
        if name == EpsilonRuleKind.FIXED and not power:
            return cls()
        if name == EpsilonRuleKind.DT_POW and power:
            try:
                return cls(EpsilonRuleKind.DT_POW, float(power))
            except ValueError:
                pass
        raise ValueError(f'Unknown epsilon policy `{text}`; expected `fixed` or `dt_pow:<q>`.')

    def __str__(self) -> str:
        return self.kind.value if self.power is None else f'{self.kind}:{self.power:g}'
