"""
Integrating-factor Runge-Kutta steps in Kraus form, dense and low-rank, and the plain RK
reference step.

Every IF step has the form

    ρ^(i) = U(c_i Δt) ρ0 U† + Δt Σ_{j<i} a_ij U((c_i - c_j) Δt) [Σ_α γ_α L_α ρ^(j) L_α†] U†
    ρ1    = U(Δt) ρ0 U†    + Δt Σ_i   b_i  U((1 - c_i) Δt)     [Σ_α γ_α L_α ρ^(i) L_α†] U†

which is a sum of conjugations, hence completely positive whenever ``a_ij, b_i >= 0``. The
trace is renormalized once at the end of the step, never at the stages.
"""

import logging
from abc import ABC, abstractmethod
from collections.abc import Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import NonFiniteError, NormalizationError, TableauError
from ..linalg import ComplexMatrix, as_square, dagger, frobenius, symmetrize
from ..models import (
    ButcherTableau,
    CPValidity,
    LindbladModel,
    LowRankFactor,
    TableauViolation,
    TruncationInfo,
    TruncationPolicy,
    ViolationKind,
)
from .flow import FlowOperator
from .generator import dissipator_columns, jump_sum, lindblad_rhs
from .truncation import truncate, truncate_with_info

logger = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-14


def validate_tableau(tab: ButcherTableau) -> CPValidity:
    """
    CP verdict for ``tab``.

    Negative ``a_ij`` or ``b_i`` and nodes outside ``[0, 1]`` make the tableau CP-invalid.
    Used pairs with ``c_i < c_j`` are reported as backward offsets; the IF step then applies
    ``e^{-J|τ|}``, which is still a single fixed operator, so such tableaus stay CP-valid.

    Raises ``TableauError`` when ``Σ b_i != 1`` or ``c`` differs from the row sums of ``A``.
    """
    if abs(float(sum(tab.b)) - 1.0) > CONSISTENCY_TOL:
        raise TableauError(f'Tableau `{tab.name}`: weights sum to {float(sum(tab.b))}, not 1.')
    for i, row in enumerate(tab.a):
        if abs(float(sum(row) - tab.c[i])) > CONSISTENCY_TOL:
            raise TableauError(
                f'Tableau `{tab.name}`: c[{i}] = {float(tab.c[i])} differs from the row sum '
                f'{float(sum(row))}.'
            )

    violations: list[TableauViolation] = []
    for i, j in tab.used_pairs():
        if tab.a[i][j] < 0:
            violations.append(TableauViolation(ViolationKind.A, (i, j), float(tab.a[i][j])))
    violations += [
        TableauViolation(ViolationKind.B, (i,), float(b)) for i, b in enumerate(tab.b) if b < 0
    ]
    violations += [
        TableauViolation(ViolationKind.C, (i,), float(c))
        for i, c in enumerate(tab.c)
        if not 0 <= c <= 1
    ]
    backward = tuple(
        TableauViolation(ViolationKind.OFFSET, (i, j), float(tab.c[i] - tab.c[j]))
        for i, j in tab.used_pairs()
        if tab.c[i] < tab.c[j]
    )
    return CPValidity(
        # backward offsets never enter the verdict: e^{-J|τ|} is one fixed operator
        is_cp_valid=not violations,
        violations=tuple(violations),
        offsets_ok=not backward,
        backward_offsets=backward,
    )


def offset_coefficients(tab: ButcherTableau) -> set[Fraction]:
    """Every ``τ/Δt`` an IF step with ``tab`` passes to the flow."""
    coeffs = {Fraction(1), *tab.c}
    coeffs |= {tab.c[i] - tab.c[j] for i, j in tab.used_pairs()}
    coeffs |= {1 - c for b, c in zip(tab.b, tab.c, strict=True) if b != 0}
    return coeffs


def require_cp(tab: ButcherTableau, *, force: bool = False) -> CPValidity:
    """Validate ``tab`` and refuse CP-invalid tableaus unless ``force`` is set."""
    validity = validate_tableau(tab)
    if not validity.is_cp_valid:
        found = ', '.join(f'{v.kind}{list(v.index)} = {v.value:g}' for v in validity.violations)
        if not force:
            raise TableauError(f'Tableau `{tab.name}` is not CP-valid: {found}.')
        logger.debug('Running CP-invalid tableau `%s` (%s) on request', tab.name, found)
    return validity


def _require_nonnegative_weights(tab: ButcherTableau):
    if any(x < 0 for row in tab.a for x in row) or any(b < 0 for b in tab.b):
        raise TableauError(
            f'Tableau `{tab.name}` has negative weights; the low-rank step needs '
            '√(Δt·a_ij) and √(Δt·b_i).'
        )


def _check_finite(a: ComplexMatrix, what: str):
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f'{what} has NaN or Inf entries.')


def normalize_trace[T: (ComplexMatrix, LowRankFactor)](state: T) -> T:
    """
    Scale a density matrix to unit trace, or a factor to unit Frobenius norm.

    Zero or negative trace means total decay or a positivity bug and is an error.
    """
    if isinstance(state, LowRankFactor):
        norm = frobenius(state.v)
        if not (np.isfinite(norm) and norm > 0):
            raise NormalizationError(f'Cannot renormalize a factor of norm {norm}.')
        return LowRankFactor(state.v / norm)
    tr = complex(np.trace(state)).real
    if not (np.isfinite(tr) and tr > 0):
        raise NormalizationError(f'Cannot renormalize a density matrix of trace {tr}.')
    return state / tr


def if_step_dense(
    model: LindbladModel,
    flow: FlowOperator,
    tab: ButcherTableau,
    dt: float,
    rho0: ArrayLike,
    *,
    renormalize: bool = True,
    force: bool = False,
) -> ComplexMatrix:
    """
    One IF step on a dense density matrix.

    With ``renormalize=False`` this is the linear map itself, suitable for Kraus and Choi
    probing; inputs need not be Hermitian then.
    """
    require_cp(tab, force=force)
    rho0 = model.check_operand(as_square(rho0, name='ρ0'), name='ρ0')

    stages: list[ComplexMatrix] = []
    for i in range(tab.stages):
        x = flow.conjugate(dt, rho0, tab.c[i], allow_backward=True)
        for j in range(i):
            a = tab.a[i][j]
            if a == 0:
                continue
            offset = tab.c[i] - tab.c[j]
            x += dt * float(a) * flow.conjugate(
                dt, jump_sum(model, stages[j]), offset, allow_backward=True
            )
        stages.append(x)

    rho1 = flow.conjugate(dt, rho0)
    for i, b in enumerate(tab.b):
        if b == 0:
            continue
        rho1 += dt * float(b) * flow.conjugate(
            dt, jump_sum(model, stages[i]), 1 - tab.c[i], allow_backward=True
        )
    _check_finite(rho1, 'IF step result')
    return normalize_trace(rho1) if renormalize else rho1


def if_step_lowrank_with_info(
    model: LindbladModel,
    flow: FlowOperator,
    tab: ButcherTableau,
    dt: float,
    policy: TruncationPolicy,
    v0: LowRankFactor,
    *,
    stage_policy: TruncationPolicy | None = None,
    renormalize: bool = True,
    force: bool = False,
) -> tuple[LowRankFactor, TruncationInfo]:
    """``if_step_lowrank`` that also returns the record of the final truncation."""
    require_cp(tab, force=force)
    _require_nonnegative_weights(tab)
    v = model.check_operand(v0.v, name='V0')
    if frobenius(v) == 0:
        raise NormalizationError('Initial factor is zero.')
    stage_policy = stage_policy or policy
    pre = policy.pre_truncate
    pre_policy = TruncationPolicy(pre.resolve(dt, tab.order)) if pre.enabled else None

    def block(factor: ComplexMatrix, weight: Fraction, offset: Fraction) -> ComplexMatrix:
        cols = flow.propagate(
            dt, dissipator_columns(model, factor, dt * float(weight)), offset, allow_backward=True
        )
        if pre_policy is not None and cols.shape[1] > 0:
            cols = truncate(cols, pre_policy).v
        return cols

    stages: list[ComplexMatrix] = []
    for i in range(tab.stages):
        blocks = [flow.propagate(dt, v, tab.c[i], allow_backward=True)]
        for j in range(i):
            if tab.a[i][j] != 0:
                blocks.append(block(stages[j], tab.a[i][j], tab.c[i] - tab.c[j]))
        stages.append(truncate(np.hstack(blocks), stage_policy).v)

    blocks = [flow.propagate(dt, v)]
    for i, b in enumerate(tab.b):
        if b != 0:
            blocks.append(block(stages[i], b, 1 - tab.c[i]))
    w = np.hstack(blocks)
    _check_finite(w, 'Low-rank IF step columns')
    v1, info = truncate_with_info(w, policy)
    if info.degenerate:
        logger.debug('Low-rank IF step produced an all-zero factor')
    return (normalize_trace(v1) if renormalize else v1), info


def if_step_lowrank(
    model: LindbladModel,
    flow: FlowOperator,
    tab: ButcherTableau,
    dt: float,
    policy: TruncationPolicy,
    v0: LowRankFactor,
    *,
    stage_policy: TruncationPolicy | None = None,
    renormalize: bool = True,
    force: bool = False,
) -> LowRankFactor:
    """
    One IF step on a factor ``V0`` with ``ρ0 = V0 V0†``.

    Each stage stacks ``U(c_i Δt) V0`` with the propagated blocks
    ``√(Δt a_ij γ_α) U((c_i - c_j)Δt) L_α V^(j)`` and truncates the result; the final factor
    does the same with the weights ``b_i``. Zero weights contribute no columns. Stage
    truncation uses ``stage_policy`` when given, ``policy`` otherwise.
    """
    return if_step_lowrank_with_info(
        model,
        flow,
        tab,
        dt,
        policy,
        v0,
        stage_policy=stage_policy,
        renormalize=renormalize,
        force=force,
    )[0]


def rk_step_dense(
    model: LindbladModel,
    tab: ButcherTableau,
    dt: float,
    rho0: ArrayLike,
    *,
    renormalize: bool = True,
) -> ComplexMatrix:
    """
    Plain explicit RK step on ``dρ/dt = 𝓛ρ``; not CP in general.

    With ``renormalize`` the result is also symmetrized, so any remaining defect is a loss of
    positivity. Without it the raw linear map is returned.
    """
    validate_tableau(tab)
    rho0 = model.check_operand(as_square(rho0, name='ρ0'), name='ρ0')
    a = tab.a_array()
    k: list[ComplexMatrix] = []
    for i in range(tab.stages):
        x = rho0.copy()
        for j in range(i):
            if a[i, j] != 0:
                x += dt * a[i, j] * k[j]
        k.append(lindblad_rhs(model, x))
    rho1 = rho0.copy()
    for b, ki in zip(tab.b_array(), k, strict=True):
        rho1 += dt * b * ki
    _check_finite(rho1, 'RK step result')
    return normalize_trace(symmetrize(rho1)) if renormalize else rho1


@dataclass(frozen=True, slots=True)
class KrausList:
    """Operators ``K_l`` of the map ``ρ ↦ Σ_l K_l ρ K_l†``."""

    ops: tuple[ComplexMatrix, ...]

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[ComplexMatrix]:
        return iter(self.ops)


def extract_kraus(
    model: LindbladModel, flow: FlowOperator, tab: ButcherTableau, dt: float
) -> KrausList:
    """
    Kraus operators of the un-normalized IF step.

    Stage ``i`` carries ``{U(c_i Δt)}`` plus ``√(Δt a_ij γ_α) U((c_i - c_j)Δt) L_α K`` for every
    used ``j``, jump ``α`` and ``K`` of stage ``j``; the final list does the same with ``b_i``
    on top of ``U(Δt)``.
    """
    require_cp(tab)

    def branch(ops: list[ComplexMatrix], weight: Fraction, offset: Fraction):
        u = flow.propagator(dt, offset, allow_backward=True)
        return [
            np.sqrt(dt * float(weight) * jump.rate) * (u @ jump.operator @ k)
            for jump in model.jumps
            for k in ops
        ]

    stages: list[list[ComplexMatrix]] = []
    for i in range(tab.stages):
        ops = [flow.propagator(dt, tab.c[i], allow_backward=True)]
        for j in range(i):
            if tab.a[i][j] != 0:
                ops += branch(stages[j], tab.a[i][j], tab.c[i] - tab.c[j])
        stages.append(ops)

    final = [flow.propagator(dt)]
    for i, b in enumerate(tab.b):
        if b != 0:
            final += branch(stages[i], b, 1 - tab.c[i])
    return KrausList(tuple(final))


def kraus_count(tab: ButcherTableau, n_jumps: int) -> int:
    """Length of ``extract_kraus`` output, from the stage recursion alone."""
    sizes: list[int] = []
    for i in range(tab.stages):
        sizes.append(1 + n_jumps * sum(sizes[j] for j in range(i) if tab.a[i][j] != 0))
    return 1 + n_jumps * sum(n for n, b in zip(sizes, tab.b, strict=True) if b != 0)


def apply_kraus(kraus: KrausList, rho: ArrayLike) -> ComplexMatrix:
    r = as_square(rho, name='ρ')
    out = np.zeros_like(r)
    for k in kraus:
        out += k @ r @ dagger(k)
    return out


def kraus_completeness_defect(kraus: KrausList) -> float:
    """``‖Σ K†K - I‖_F``; nonzero because the un-normalized step is only approximately TP."""
    n = kraus.ops[0].shape[0]
    total = sum((dagger(k) @ k for k in kraus), np.zeros((n, n), dtype=np.complex128))
    return frobenius(total - np.eye(n))


@dataclass(slots=True)
class Stepper[S](ABC):
    """One-step map bound to a model, a tableau and a step size."""

    low_rank: ClassVar[bool] = False
    label: ClassVar[str]

    model: LindbladModel
    tableau: ButcherTableau
    dt: float
    renormalize: bool = True

    @abstractmethod
    def initial(self, v0: LowRankFactor) -> S: ...

    @abstractmethod
    def step(self, state: S) -> S: ...

    @abstractmethod
    def density(self, state: S) -> ComplexMatrix: ...

    def rank(self, state: S) -> int | None:
        """Factor width for low-rank states, ``None`` for dense ones."""
        return None


@dataclass(slots=True)
class RKStepper(Stepper[ComplexMatrix]):
    label: ClassVar[str] = 'rk'

    def initial(self, v0: LowRankFactor) -> ComplexMatrix:
        return v0.dense()

    def step(self, state: ComplexMatrix) -> ComplexMatrix:
        return rk_step_dense(
            self.model, self.tableau, self.dt, state, renormalize=self.renormalize
        )

    def density(self, state: ComplexMatrix) -> ComplexMatrix:
        return state


@dataclass(slots=True)
class DenseIFStepper(Stepper[ComplexMatrix]):
    label: ClassVar[str] = 'if-dense'

    flow: FlowOperator = field(kw_only=True)
    force: bool = field(default=False, kw_only=True)

    def __post_init__(self):
        validity = require_cp(self.tableau, force=self.force)
        if not validity.is_cp_valid:
            logger.warning(
                'Tableau `%s` is not CP-valid; positivity is not guaranteed', self.tableau.name
            )
        self.flow.warm_up(self.dt, offset_coefficients(self.tableau))

    def initial(self, v0: LowRankFactor) -> ComplexMatrix:
        return v0.dense()

    def step(self, state: ComplexMatrix) -> ComplexMatrix:
        return if_step_dense(
            self.model,
            self.flow,
            self.tableau,
            self.dt,
            state,
            renormalize=self.renormalize,
            force=self.force,
        )

    def density(self, state: ComplexMatrix) -> ComplexMatrix:
        return state


@dataclass(slots=True)
class LowRankIFStepper(Stepper[LowRankFactor]):
    low_rank: ClassVar[bool] = True
    label: ClassVar[str] = 'if-lowrank'

    flow: FlowOperator = field(kw_only=True)
    policy: TruncationPolicy = field(default_factory=TruncationPolicy, kw_only=True)
    stage_policy: TruncationPolicy | None = field(default=None, kw_only=True)
    last_info: TruncationInfo | None = field(default=None, init=False)

    def __post_init__(self):
        require_cp(self.tableau)
        self.flow.warm_up(self.dt, offset_coefficients(self.tableau))

    def initial(self, v0: LowRankFactor) -> LowRankFactor:
        return v0

    def step(self, state: LowRankFactor) -> LowRankFactor:
        v1, info = if_step_lowrank_with_info(
            self.model,
            self.flow,
            self.tableau,
            self.dt,
            self.policy,
            state,
            stage_policy=self.stage_policy,
            renormalize=self.renormalize,
        )
        if self.last_info is not None and info.rank != self.last_info.rank:
            logger.debug('Rank %d -> %d', self.last_info.rank, info.rank)
        self.last_info = info
        return v1

    def density(self, state: LowRankFactor) -> ComplexMatrix:
        return state.dense()

    def rank(self, state: LowRankFactor) -> int | None:
        return state.rank
