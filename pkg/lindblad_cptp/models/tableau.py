from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

import numpy as np
from numpy.typing import NDArray

from ..exceptions import TableauError

type Coefficient = Fraction | int | float | str


def to_fraction(x: Coefficient) -> Fraction:
    """Exact coefficient; floats go through ``repr`` so ``0.1`` becomes ``1/10``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not np.isfinite(x):
            raise TableauError(f'Tableau coefficient must be finite, got {x}.')
        return Fraction(repr(x))
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError) as e:
        raise TableauError(f'Malformed tableau coefficient `{x}`.') from e


@dataclass(frozen=True, slots=True)
class ButcherTableau:
    """
    Explicit Runge-Kutta method ``(A, b, c)`` with its declared order.

    ``A`` is stored row by row as exact fractions; only strictly lower-triangular tableaus
    are accepted.
    """

    name: str
    a: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    c: tuple[Fraction, ...]
    order: int

    def __post_init__(self):
        s = len(self.b)
        if s == 0:
            raise TableauError('Tableau needs at least one stage.')
        if len(self.c) != s or len(self.a) != s or any(len(row) != s for row in self.a):
            raise TableauError(
                f'Tableau `{self.name}`: A must be {s}x{s} and c must have {s} entries.'
            )
        a = tuple(tuple(to_fraction(x) for x in row) for row in self.a)
        for i, row in enumerate(a):
            if any(x != 0 for x in row[i:]):
                raise TableauError(
                    f'Tableau `{self.name}` is not explicit: row {i} has entries on or above '
                    'the diagonal.'
                )
        if self.order < 1:
            raise TableauError(f'Tableau order must be >= 1, got {self.order}.')
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', tuple(to_fraction(x) for x in self.b))
        object.__setattr__(self, 'c', tuple(to_fraction(x) for x in self.c))

    @classmethod
    def from_lower(
        cls,
        name: str,
        rows: list[list[Coefficient]],
        b: list[Coefficient],
        c: list[Coefficient],
        order: int,
    ) -> 'ButcherTableau':
        """Build from the strictly lower part, row ``i`` holding ``a_i1 ... a_i,i-1``."""
        s = len(b)
        full = [list(row) + [0] * (s - len(row)) for row in rows]
        return cls(name, tuple(tuple(r) for r in full), tuple(b), tuple(c), order)

    @property
    def stages(self) -> int:
        return len(self.b)

    def a_array(self) -> NDArray[np.float64]:
        return np.array([[float(x) for x in row] for row in self.a])

    def b_array(self) -> NDArray[np.float64]:
        return np.array([float(x) for x in self.b])

    def c_array(self) -> NDArray[np.float64]:
        return np.array([float(x) for x in self.c])

    def used_pairs(self) -> list[tuple[int, int]]:
        """Stage pairs ``(i, j)``, ``j < i``, with ``a_ij != 0``."""
        return [(i, j) for i in range(self.stages) for j in range(i) if self.a[i][j] != 0]


class ViolationKind(StrEnum):
    A = 'a'
    B = 'b'
    C = 'c'
    OFFSET = 'offset'


@dataclass(frozen=True, slots=True)
class TableauViolation:
    kind: ViolationKind
    index: tuple[int, ...]
    value: float


@dataclass(frozen=True, slots=True)
class CPValidity:
    """
    Verdict of ``validate_tableau``.

    ``violations`` lists negative ``a_ij``/``b_i`` and ``c_i`` outside ``[0, 1]``; any of those
    makes the tableau CP-invalid. Backward offsets ``c_i - c_j < 0`` on used pairs are listed
    in ``backward_offsets`` and clear ``offsets_ok``.
    """

    is_cp_valid: bool
    violations: tuple[TableauViolation, ...] = ()
    offsets_ok: bool = True
    backward_offsets: tuple[TableauViolation, ...] = ()


HALF = Fraction(1, 2)

EULER = ButcherTableau.from_lower('euler', [[]], [1], [0], order=1)

HEUN = ButcherTableau.from_lower('heun', [[], [1]], [HALF, HALF], [0, 1], order=2)

SSPRK3 = ButcherTableau.from_lower(
    'ssprk3',
    [[], [1], [Fraction(1, 4), Fraction(1, 4)]],
    [Fraction(1, 6), Fraction(1, 6), Fraction(2, 3)],
    [0, 1, HALF],
    order=3,
)

RK4 = ButcherTableau.from_lower(
    'rk4',
    [[], [HALF], [0, HALF], [0, 0, 1]],
    [Fraction(1, 6), Fraction(1, 3), Fraction(1, 3), Fraction(1, 6)],
    [0, HALF, HALF, 1],
    order=4,
)

RK4_38 = ButcherTableau.from_lower(
    'rk4-38',
    [[], [Fraction(1, 3)], [Fraction(-1, 3), 1], [1, -1, 1]],
    [Fraction(1, 8), Fraction(3, 8), Fraction(3, 8), Fraction(1, 8)],
    [0, Fraction(1, 3), Fraction(2, 3), 1],
    order=4,
)

BUILTIN_TABLEAUS: dict[str, ButcherTableau] = {
    t.name: t for t in (EULER, HEUN, SSPRK3, RK4, RK4_38)
}


def get_tableau(name: str) -> ButcherTableau:
    try:
        return BUILTIN_TABLEAUS[name.strip().lower()]
    except KeyError:
        raise TableauError(
            f'Unknown tableau `{name}`; built-ins are {sorted(BUILTIN_TABLEAUS)}.'
        ) from None
