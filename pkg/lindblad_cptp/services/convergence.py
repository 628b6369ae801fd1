"""
Convergence tables, tolerance scaling and revival studies.

Every study is a batch of independent trajectories. They are fanned out over a thread pool
(numpy/LAPACK release the GIL) and joined into results sorted by method, then step count.
"""

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import GridError
from ..linalg import RealVector
from ..models import RK4, ButcherTableau, EpsilonRule, EpsilonRuleKind, TruncationPolicy
from .flow import FlowMethod
from .scenarios import JCParams
from .simulation import (
    Integrator,
    MethodSpec,
    Monitor,
    Scenario,
    Trajectory,
    jaynes_cummings_scenario,
    make_stepper,
    simulate,
)

logger = logging.getLogger(__name__)

EXACT_TOL = 1e-12
"""Errors at or below this are treated as reference precision; no order is reported."""

REFERENCE_FACTOR = 4

type Reference = Callable[[float], float] | ArrayLike


class ReferenceKind(StrEnum):
    AUTO = 'auto'
    ANALYTIC = 'analytic'
    SELF = 'self'


def l2_time_error(series: ArrayLike, dt: float, reference: Reference) -> float:
    """
    ``√(Δt Σ_{n=1..N} (P_n - P_ref(t_n))²)`` over samples ``P_0..P_N`` at ``t_n = nΔt``.

    ``reference`` is either a function of time or a finer series on a grid that the coarse
    one subsamples (its step count a multiple of ``N``).
    """
    p = np.asarray(series, dtype=float)
    n = len(p) - 1
    if n < 1:
        raise GridError('A time series needs at least two samples.')
    if callable(reference):
        ref = np.array([reference(k * dt) for k in range(n + 1)])
    else:
        fine = np.asarray(reference, dtype=float)
        fine_steps = len(fine) - 1
        if fine_steps < n or fine_steps % n:
            raise GridError(
                f'Reference with {fine_steps} steps cannot be subsampled onto {n} steps.'
            )
        ref = fine[:: fine_steps // n]
    return math.sqrt(dt * float(np.sum((p[1:] - ref[1:]) ** 2)))


def observed_order(
    e_coarse: float, e_fine: float, steps_coarse: int, steps_fine: int
) -> float | None:
    """``log(e_coarse/e_fine) / log(steps_fine/steps_coarse)``; ``None`` at reference precision."""
    if e_coarse <= EXACT_TOL or e_fine <= EXACT_TOL:
        return None
    return math.log(e_coarse / e_fine) / math.log(steps_fine / steps_coarse)


def fit_order(dts: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(Δt)``."""
    x = np.log(np.asarray(dts, dtype=float))
    y = np.asarray(errors, dtype=float)
    keep = y > 0
    if keep.sum() < 2:
        raise GridError('Need at least two positive errors to fit an order.')
    slope, _ = np.polyfit(x[keep], np.log(y[keep]), 1)
    return float(slope)


@dataclass(frozen=True, slots=True)
class ConvergenceRow:
    method: str
    steps: int
    dt: float
    error: float
    order: float | None = None


@dataclass(frozen=True, slots=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]
    reference: str = ReferenceKind.ANALYTIC

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows))

    def for_method(self, method: str) -> list[ConvergenceRow]:
        return [r for r in self.rows if r.method == method]

    def error(self, method: str, steps: int) -> float:
        return next(r.error for r in self.rows if r.method == method and r.steps == steps)

    def final_order(self, method: str) -> float | None:
        return self.for_method(method)[-1].order


@dataclass(frozen=True, slots=True)
class StudyRun:
    """Shared settings of every trajectory in a study."""

    tableau: ButcherTableau = RK4
    policy: TruncationPolicy = field(default_factory=TruncationPolicy.exact)
    stage_policy: TruncationPolicy | None = None
    rule: EpsilonRule = field(default_factory=EpsilonRule)
    renormalize: bool = True
    force: bool = False
    workers: int = 1
    monitor: Monitor | None = None
    """Watches integrating-factor runs only; plain RK is expected to lose positivity."""

    def trajectory(
        self, scenario: Scenario, method: MethodSpec, steps: int, t_final: float
    ) -> Trajectory:
        dt = t_final / steps
        stepper = make_stepper(
            method,
            scenario.model,
            self.tableau,
            dt,
            policy=self.policy,
            stage_policy=self.stage_policy,
            rule=self.rule,
            renormalize=self.renormalize,
            force=self.force,
        )
        monitor = None if method.integrator == Integrator.RK else self.monitor
        return simulate(scenario, stepper, steps, stride=steps, monitor=monitor)

    def map[T, R](self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        if self.workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]


def _check_increasing(step_counts: Sequence[int]):
    if not step_counts or any(s < 1 for s in step_counts):
        raise GridError(f'Step counts must be positive, got {list(step_counts)}.')
    if any(b <= a for a, b in zip(step_counts, step_counts[1:], strict=False)):
        raise GridError(f'Step counts must be strictly increasing, got {list(step_counts)}.')


def _resolve_reference(scenario: Scenario, kind: ReferenceKind) -> ReferenceKind:
    if kind == ReferenceKind.AUTO:
        return ReferenceKind.ANALYTIC if scenario.analytic is not None else ReferenceKind.SELF
    if kind == ReferenceKind.ANALYTIC and scenario.analytic is None:
        raise GridError(f'Scenario `{scenario.name}` has no analytic observable.')
    return kind


def self_reference(scenario: Scenario, run: StudyRun, steps: int, t_final: float) -> Trajectory:
    """Most accurate run available: dense IF with the exact flow, renormalized."""
    logger.info('Computing self-reference with %d steps', steps)
    ref_run = StudyRun(tableau=run.tableau, workers=1)
    return ref_run.trajectory(scenario, MethodSpec(Integrator.IF_DENSE), steps, t_final)


def convergence_study(
    scenario: Scenario,
    methods: Sequence[MethodSpec],
    step_counts: Sequence[int],
    *,
    t_final: float,
    run: StudyRun | None = None,
    reference: ReferenceKind = ReferenceKind.AUTO,
    reference_steps: int | None = None,
) -> ConvergenceTable:
    """
    L2-in-time errors of the scenario observable for every method and step count.

    Orders compare consecutive step counts of the same method.
    """
    run = run or StudyRun()
    _check_increasing(step_counts)
    kind = _resolve_reference(scenario, reference)
    ref: Reference
    if kind == ReferenceKind.ANALYTIC:
        assert scenario.analytic is not None
        ref = scenario.analytic
    else:
        ref_steps = reference_steps or REFERENCE_FACTOR * max(step_counts)
        ref = self_reference(scenario, run, ref_steps, t_final).observable

    jobs = [(m, s) for m in methods for s in step_counts]

    def job(item: tuple[MethodSpec, int]) -> ConvergenceRow:
        method, steps = item
        traj = run.trajectory(scenario, method, steps, t_final)
        error = l2_time_error(traj.observable, traj.dt, ref)
        logger.debug('%s at %d steps: error %.3e', method.label, steps, error)
        return ConvergenceRow(method.label, steps, traj.dt, error)

    results = run.map(job, jobs)
    rows: list[ConvergenceRow] = []
    for method in methods:
        previous: ConvergenceRow | None = None
        for row in (r for r in results if r.method == method.label):
            order = None
            if previous is not None:
                order = observed_order(previous.error, row.error, previous.steps, row.steps)
            row = ConvergenceRow(row.method, row.steps, row.dt, row.error, order)
            rows.append(row)
            previous = row
    return ConvergenceTable(tuple(rows), reference=kind)


@dataclass(frozen=True, slots=True)
class ToleranceRow:
    flow: str
    q: float
    steps: int
    dt: float
    error: float


@dataclass(frozen=True, slots=True)
class ToleranceStudy:
    """Final-time errors under ``ε = Δt^q``; ``orders[(flow, q)]`` is the fitted slope."""

    rows: tuple[ToleranceRow, ...]
    orders: dict[tuple[str, float], float]


def tolerance_study(
    scenario: Scenario,
    flows: Sequence[FlowMethod],
    q_values: Sequence[float],
    step_counts: Sequence[int],
    *,
    t_final: float,
    run: StudyRun | None = None,
    reference: ReferenceKind = ReferenceKind.AUTO,
    reference_steps: int | None = None,
) -> ToleranceStudy:
    """Low-rank runs with ``ε = Δt^q``: final-time observable error per (flow, q, steps)."""
    run = run or StudyRun()
    _check_increasing(step_counts)
    kind = _resolve_reference(scenario, reference)
    if kind == ReferenceKind.ANALYTIC:
        assert scenario.analytic is not None
        target = scenario.analytic(t_final)
    else:
        ref_steps = reference_steps or REFERENCE_FACTOR * max(step_counts)
        target = float(self_reference(scenario, run, ref_steps, t_final).observable[-1])

    jobs = [(f, q, s) for f in flows for q in q_values for s in step_counts]

    def job(item: tuple[FlowMethod, float, int]) -> ToleranceRow:
        flow, q, steps = item
        q_run = replace(run, rule=EpsilonRule(EpsilonRuleKind.DT_POW, q))
        traj = q_run.trajectory(scenario, MethodSpec(Integrator.IF_LOWRANK, flow), steps, t_final)
        error = abs(float(traj.observable[-1]) - target)
        return ToleranceRow(str(flow), q, steps, traj.dt, error)

    rows = run.map(job, jobs)
    orders = {}
    for flow in flows:
        for q in q_values:
            group = [r for r in rows if r.flow == str(flow) and r.q == q]
            orders[(str(flow), q)] = fit_order([r.dt for r in group], [r.error for r in group])
    return ToleranceStudy(tuple(rows), orders)


@dataclass(frozen=True, slots=True)
class RevivalResult:
    """Per-ε rank and ``P_e`` series, and L2-in-time distances to the tightest ε."""

    dt: float
    epsilons: tuple[float, ...]
    ranks: dict[float, tuple[int, ...]]
    populations: dict[float, RealVector]
    differences: dict[float, float]


def revival_study(
    params: JCParams,
    epsilons: Sequence[float],
    steps: int,
    flow: FlowMethod,
    *,
    t_final: float | None = None,
    run: StudyRun | None = None,
) -> RevivalResult:
    """Low-rank Jaynes-Cummings runs at several tolerances (default ``T = 3 t_r``)."""
    if not epsilons:
        raise ValueError('Revival study needs at least one tolerance.')
    run = run or StudyRun()
    scenario = jaynes_cummings_scenario(params)
    horizon = t_final if t_final is not None else 3 * params.revival_time
    eps = tuple(sorted(set(epsilons), reverse=True))

    def job(epsilon: float) -> Trajectory:
        method = MethodSpec(Integrator.IF_LOWRANK, flow, epsilon)
        return run.trajectory(scenario, method, steps, horizon)

    trajectories = dict(zip(eps, run.map(job, eps), strict=True))
    tightest = trajectories[eps[-1]]
    return RevivalResult(
        dt=tightest.dt,
        epsilons=eps,
        ranks={e: t.ranks for e, t in trajectories.items()},
        populations={e: t.observable for e, t in trajectories.items()},
        differences={
            e: l2_time_error(t.observable, t.dt, tightest.observable)
            for e, t in trajectories.items()
        },
    )
