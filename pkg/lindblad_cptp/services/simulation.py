"""Scenarios bundle a model with its initial state and observables; ``simulate`` runs them."""

import dataclasses
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import GridError
from ..linalg import ComplexMatrix, RealVector, as_square
from ..models import (
    ButcherTableau,
    EpsilonRule,
    JumpOperator,
    LindbladModel,
    LowRankFactor,
    TruncationPolicy,
)
from .diagnostics import CPTPReport, cptp_report, factor_report
from .flow import FlowMethod, FlowOperator
from .integrators import DenseIFStepper, LowRankIFStepper, RKStepper, Stepper
from .scenarios import (
    SIGMA_MINUS,
    STIFF_INITIAL_LEVEL,
    JCParams,
    basis_factor,
    build_jaynes_cummings,
    build_stiff_decoherence,
    excited_population,
)
from .truncation import resolve_policy

logger = logging.getLogger(__name__)

type DenseObservable = Callable[[ComplexMatrix], float]
type FactorObservable = Callable[[LowRankFactor], float]
type Monitor = Callable[[int, float, CPTPReport], None]


@dataclass(frozen=True, slots=True)
class Scenario:
    name: str
    model: LindbladModel
    initial: LowRankFactor
    observable: DenseObservable
    factor_observable: FactorObservable
    observable_name: str = 'P_e'
    analytic: Callable[[float], float] | None = None
    m: int | None = None
    t_final: float | None = None
    extras: dict[str, DenseObservable] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Observable at every step ``n = 0..steps``; reports at the sampled steps only."""

    dt: float
    observable: RealVector
    sample_steps: tuple[int, ...]
    reports: tuple[CPTPReport, ...]
    sample_ranks: tuple[int, ...]
    extras: dict[str, RealVector] = field(default_factory=dict)
    ranks: tuple[int, ...] = ()
    final: ComplexMatrix | LowRankFactor | None = None

    @property
    def steps(self) -> int:
        return len(self.observable) - 1

    @property
    def times(self) -> RealVector:
        return self.dt * np.arange(self.steps + 1)

    @property
    def min_eig(self) -> float:
        return min(r.min_eig for r in self.reports)


def qubit_observables(m: int) -> tuple[DenseObservable, FactorObservable]:
    return (lambda rho: excited_population(rho, m)), (lambda v: excited_population(v, m))


def jaynes_cummings_scenario(p: JCParams) -> Scenario:
    model, v0 = build_jaynes_cummings(p)
    dense, factor = qubit_observables(p.m)
    return Scenario(
        name='jc',
        model=model,
        initial=v0,
        observable=dense,
        factor_observable=factor,
        m=p.m,
        t_final=p.revival_time,
    )


def stiff_scenario(
    n: int = 6,
    gamma: float = 1e5,
    hamiltonian: ArrayLike | None = None,
    initial_level: int = STIFF_INITIAL_LEVEL,
) -> Scenario:
    """
    Stiff decoherence model started in a pure level.

    ``P_e`` is the population outside the ground level; the start level's own population is
    an extra observable (``rho33`` for the default level 2).
    """
    model = build_stiff_decoherence(n, gamma, hamiltonian)
    level = initial_level

    def excited(rho: ComplexMatrix) -> float:
        return 1.0 - float(rho[0, 0].real) / float(np.trace(rho).real)

    def factor_excited(v: LowRankFactor) -> float:
        ground = v.v[0]
        return 1.0 - float(np.vdot(ground, ground).real) / v.trace()

    def population(rho: ComplexMatrix) -> float:
        return float(rho[level, level].real)

    return Scenario(
        name='stiff',
        model=model,
        initial=basis_factor(n, initial_level),
        observable=excited,
        factor_observable=factor_excited,
        extras={f'rho{level + 1}{level + 1}': population},
    )


def build_amplitude_damping(gamma: float = 1.0) -> Scenario:
    """``H = 0``, one jump ``σ⁻``, started excited; ``P_e(t) = e^{-γt}``."""
    model = LindbladModel(np.zeros((2, 2)), (JumpOperator(gamma, SIGMA_MINUS),))
    dense, factor = qubit_observables(1)
    return Scenario(
        name='amplitude-damping',
        model=model,
        initial=basis_factor(2, 1),
        observable=dense,
        factor_observable=factor,
        analytic=lambda t: math.exp(-gamma * t),
        m=1,
        t_final=1.0,
    )


def build_unitary_qubit(omega: float = 1.0) -> Scenario:
    """No jumps and ``H = diag(0, ω)``: the state precesses while ``P_e`` stays at ``½``."""
    model = LindbladModel(np.diag([0.0, omega]))
    dense, factor = qubit_observables(1)
    return Scenario(
        name='unitary',
        model=model,
        initial=LowRankFactor.from_vector(np.array([1.0, 1.0]) / math.sqrt(2)),
        observable=dense,
        factor_observable=factor,
        analytic=lambda t: 0.5,
        m=1,
        t_final=2 * math.pi / omega if omega else 1.0,
    )


def _dense_trace(rho: ComplexMatrix) -> float:
    return float(np.trace(as_square(rho)).real)


def custom_scenario(
    model: LindbladModel, initial: LowRankFactor | ArrayLike, m: int | None = None
) -> Scenario:
    """User-supplied model; observes ``P_e`` when ``m`` is given, else ``Tr ρ``."""
    if not isinstance(initial, LowRankFactor):
        init = np.asarray(initial, dtype=np.complex128)
        initial = LowRankFactor(init.reshape(-1, 1) if init.ndim == 1 else init)
    if m is not None:
        dense, factor = qubit_observables(m)
        name = 'P_e'
    else:
        dense, factor = _dense_trace, LowRankFactor.trace
        name = 'trace'
    return Scenario(
        name='custom',
        model=model,
        initial=initial,
        observable=dense,
        factor_observable=factor,
        observable_name=name,
        m=m,
    )


def simulate[S](
    scenario: Scenario,
    stepper: Stepper[S],
    steps: int,
    *,
    stride: int = 1,
    monitor: Monitor | None = None,
) -> Trajectory:
    """
    Advance ``stepper`` ``steps`` times from the scenario's initial state.

    The observable is recorded at every step. CPTP reports are taken at step 0, every
    ``stride`` steps and at the final step; ``monitor`` sees each one and may raise.
    """
    if steps < 1:
        raise GridError(f'Need at least one step, got {steps}.')
    if stride < 1:
        raise GridError(f'Sample stride must be >= 1, got {stride}.')

    def measure(state: S) -> float:
        if stepper.low_rank:
            return scenario.factor_observable(state)  # type: ignore[arg-type]
        return scenario.observable(state)  # type: ignore[arg-type]

    def report(state: S) -> CPTPReport:
        if stepper.low_rank:
            return factor_report(state)  # type: ignore[arg-type]
        return cptp_report(stepper.density(state))

    logger.info(
        'Simulating %s with %s: %d steps of %g', scenario.name, stepper.label, steps, stepper.dt
    )
    state = stepper.initial(scenario.initial)
    values = np.empty(steps + 1)
    extras = {name: np.empty(steps + 1) for name in scenario.extras}
    sample_steps: list[int] = []
    reports: list[CPTPReport] = []
    sample_ranks: list[int] = []
    ranks: list[int] = []

    for n in range(steps + 1):
        if n > 0:
            state = stepper.step(state)
        values[n] = measure(state)
        if extras:
            rho = stepper.density(state)
            for name, fn in scenario.extras.items():
                extras[name][n] = fn(rho)
        rank = stepper.rank(state)
        if rank is not None:
            ranks.append(rank)
        if n % stride == 0 or n == steps:
            rep = report(state)
            sample_steps.append(n)
            reports.append(rep)
            sample_ranks.append(rank if rank is not None else rep.rank_eps)
            if monitor is not None:
                monitor(n, n * stepper.dt, rep)

    logger.debug('Finished %s after %d steps', scenario.name, steps)
    return Trajectory(
        dt=stepper.dt,
        observable=values,
        sample_steps=tuple(sample_steps),
        reports=tuple(reports),
        sample_ranks=tuple(sample_ranks),
        extras=extras,
        ranks=tuple(ranks),
        final=state,  # type: ignore[arg-type]
    )


class Integrator(StrEnum):
    RK = 'rk'
    IF_DENSE = 'if-dense'
    IF_LOWRANK = 'if-lowrank'


@dataclass(frozen=True, slots=True)
class MethodSpec:
    """
    One column of a convergence table.

    Written ``rk``, ``if-dense``, ``if-lr-exact`` or ``if-lr-taylor:<k>``, optionally followed
    by ``@<epsilon>`` to override the truncation tolerance of that column.
    """

    integrator: Integrator
    flow: FlowMethod = field(default_factory=FlowMethod.exact)
    epsilon: float | None = None

    @classmethod
    def parse(cls, text: str) -> 'MethodSpec':
        body, _, eps = text.strip().lower().partition('@')
        epsilon = None
        if eps:
            try:
                epsilon = float(eps)
            except ValueError:
                raise ValueError(f'Malformed tolerance in method `{text}`.') from None
            if not epsilon >= 0:
                raise ValueError(f'Tolerance in method `{text}` must be non-negative.')
        if body in (Integrator.RK, Integrator.IF_DENSE):
            if epsilon is not None:
                raise ValueError(f'Method `{body}` takes no tolerance.')
            return cls(Integrator(body))
        if body.startswith('if-lr-'):
            return cls(Integrator.IF_LOWRANK, FlowMethod.parse(body[len('if-lr-') :]), epsilon)
        raise ValueError(
            f'Unknown method `{text}`; expected rk, if-dense, if-lr-exact or if-lr-taylor:<k>.'
        )

    @property
    def label(self) -> str:
        if self.integrator != Integrator.IF_LOWRANK:
            return self.integrator.value
        label = f'if-lr-{self.flow}'
        return label if self.epsilon is None else f'{label}@{self.epsilon:g}'


def make_stepper(
    method: MethodSpec,
    model: LindbladModel,
    tableau: ButcherTableau,
    dt: float,
    *,
    policy: TruncationPolicy | None = None,
    stage_policy: TruncationPolicy | None = None,
    rule: EpsilonRule | None = None,
    renormalize: bool = True,
    force: bool = False,
) -> Stepper:
    """Bind ``method`` to a model and step; ``epsilon`` is resolved here, once per run."""
    if method.integrator == Integrator.RK:
        return RKStepper(model, tableau, dt, renormalize)
    flow = FlowOperator.for_model(model, method.flow)
    if method.integrator == Integrator.IF_DENSE:
        return DenseIFStepper(model, tableau, dt, renormalize, flow=flow, force=force)

    policy = policy or TruncationPolicy.exact()
    if method.epsilon is not None:
        policy = dataclasses.replace(policy, epsilon=method.epsilon)
    policy = resolve_policy(policy, rule or EpsilonRule(), dt)
    logger.debug('Low-rank run at Δt=%g uses ε=%g, rmax=%s', dt, policy.epsilon, policy.rmax)
    return LowRankIFStepper(
        model,
        tableau,
        dt,
        renormalize,
        flow=flow,
        policy=policy,
        stage_policy=stage_policy,
    )
