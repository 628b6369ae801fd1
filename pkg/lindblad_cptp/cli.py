"""
CPTP integrating-factor integrators for the Lindblad equation.

Every command reads a flat `key = value` run config. CSV goes to `--out`, the config's
`output` key, or stdout; summaries and logs go to stderr.
"""

import logging
from pathlib import Path
from typing import Annotated, NoReturn

import typer
from rich.console import Console
from rich.table import Table

from .checks import Issue, check_environment, check_trajectory, min_eig_monitor
from .common.logging import get_logger
from .exceptions import ConfigError, LindbladError
from .schemas.run_config import Mode, RunConfig, load_config
from .services.convergence import ConvergenceTable, StudyRun, convergence_study
from .services.flow import FlowOperator
from .services.integrators import validate_tableau
from .services.output import convergence_csv, spectrum_csv, trajectory_csv, write_csv
from .services.simulation import Integrator, make_stepper, simulate
from .services.verification import choi_probe, linear_step, verify_kraus
from .settings import Settings, load_settings

app = typer.Typer(
    help=__doc__,
    no_args_is_help=True,
    add_completion=False,
    rich_markup_mode='markdown',
)

logger = logging.getLogger(__name__)

ConfigAnnotation = Annotated[
    Path,
    typer.Option(
        '--config',
        '-c',
        help='Run config file (`key = value` lines).',
        exists=True,
        dir_okay=False,
        show_default=False,
    ),
]
OutAnnotation = Annotated[
    Path | None,
    typer.Option('--out', '-o', help='CSV output path. Overrides `output` in the config.'),
]
RenormalizeAnnotation = Annotated[
    bool,
    typer.Option(
        '--renormalize/--no-renormalize',
        help='Divide by the trace after every step.',
    ),
]
ForceAnnotation = Annotated[
    bool,
    typer.Option(
        '--force-tableau',
        help='Run a tableau that breaks the CP conditions anyway (dense IF only).',
    ),
]


def _console() -> Console:
    return Console(stderr=True)


def _start(config: Path, mode: Mode) -> tuple[Settings, RunConfig]:
    settings = load_settings()
    get_logger(level=settings.log_level)
    if settings.selection is not None:
        _report(check_environment(settings.selection))
    cfg = load_config(config, mode)
    logger.debug(f'Loaded `{config}` with {settings.threads} worker thread(s)')
    return settings, cfg


def _report(issues: list[Issue]) -> bool:
    """Log every issue; ``True`` when at least one is an error."""
    for issue in issues:
        hint = f' [dim]({issue.hint})[/dim]' if issue.hint else ''
        text = f'{issue.id}: {issue.msg}{hint}'
        if issue.is_error:
            logger.error(text)
        else:
            logger.warning(text)
    return any(issue.is_error for issue in issues)


def _output(out: Path | None, cfg: RunConfig) -> Path | None:
    if out is not None:
        return out
    return cfg.base_dir / cfg.output if cfg.output else None


def _fail(e: LindbladError) -> NoReturn:
    logger.error(f'{type(e).__name__}: {e}')
    raise typer.Exit(1)


@app.command(name='simulate')
def cmd_simulate(
    config: ConfigAnnotation,
    out: OutAnnotation = None,
    renormalize: RenormalizeAnnotation = True,
    force_tableau: ForceAnnotation = False,
):
    """
    Integrate one trajectory.

    Writes `t,trace_defect,herm_defect,min_eig,rank,P_e` plus any extra observables, one row
    per sampled step. Integrating-factor runs abort once `min_eig < -LK_MIN_EIG_ABORT`.
    """
    try:
        settings, cfg = _start(config, Mode.SIMULATE)
        scenario = cfg.build_scenario()
        tableau = cfg.build_tableau()
        dt, steps = cfg.time_grid(scenario)
        method = cfg.method()
        stepper = make_stepper(
            method,
            scenario.model,
            tableau,
            dt,
            policy=cfg.policy(),
            stage_policy=cfg.stage_policy(),
            rule=cfg.epsilon_rule(),
            renormalize=renormalize,
            force=force_tableau,
        )
        cp_scheme = (
            method.integrator != Integrator.RK and validate_tableau(tableau).is_cp_valid
        )
        monitor = min_eig_monitor(settings.min_eig_abort) if cp_scheme else None
        traj = simulate(scenario, stepper, steps, stride=cfg.stride, monitor=monitor)
        write_csv(_output(out, cfg), *trajectory_csv(scenario, traj))
    except LindbladError as e:
        _fail(e)

    last = traj.reports[-1]
    table = Table(title=f'{scenario.name} with {method.label}')
    for column in ('steps', 'dt', 'min eig', 'trace defect', 'rank', scenario.observable_name):
        table.add_column(column, justify='right')
    table.add_row(
        str(steps),
        f'{dt:.6g}',
        f'{traj.min_eig:.3e}',
        f'{last.trace_defect:.3e}',
        str(traj.sample_ranks[-1]),
        f'{traj.observable[-1]:.10g}',
    )
    _console().print(table)

    if _report(check_trajectory(traj, cp_scheme=cp_scheme, renormalized=renormalize)):
        raise typer.Exit(1)


def _convergence_table(table: ConvergenceTable) -> Table:
    out = Table(title=f'L2-in-time error ({table.reference} reference)')
    out.add_column('method')
    out.add_column('steps', justify='right')
    out.add_column('error', justify='right')
    out.add_column('order', justify='right')
    for row in table.rows:
        order = '' if row.order is None else f'{row.order:.2f}'
        out.add_row(row.method, str(row.steps), f'{row.error:.2e}', order)
    return out


@app.command(name='converge')
def cmd_converge(
    config: ConfigAnnotation,
    out: OutAnnotation = None,
    renormalize: RenormalizeAnnotation = True,
    force_tableau: ForceAnnotation = False,
):
    """
    Convergence table over `methods` and `step_counts`.

    Writes `method,steps,dt,error,order`; the runs are spread over `LK_THREADS` workers.
    """
    try:
        settings, cfg = _start(config, Mode.CONVERGE)
        scenario = cfg.build_scenario()
        tableau = cfg.build_tableau()
        monitor = None
        if validate_tableau(tableau).is_cp_valid:
            monitor = min_eig_monitor(settings.min_eig_abort)
        run = StudyRun(
            tableau=tableau,
            policy=cfg.policy(),
            stage_policy=cfg.stage_policy(),
            rule=cfg.epsilon_rule(),
            renormalize=renormalize,
            force=force_tableau,
            workers=settings.threads,
            monitor=monitor,
        )
        table = convergence_study(
            scenario,
            cfg.method_list(),
            cfg.step_count_list(),
            t_final=cfg.final_time(scenario),
            run=run,
            reference=cfg.reference,
            reference_steps=cfg.reference_steps,
        )
        write_csv(_output(out, cfg), *convergence_csv(table))
    except LindbladError as e:
        _fail(e)

    _console().print(_convergence_table(table))
    for method in table.methods:
        order = table.final_order(method)
        logger.info(f'{method}: observed order {"n/a" if order is None else f"{order:.2f}"}')


@app.command(name='kraus-verify')
def cmd_kraus_verify(
    config: ConfigAnnotation,
    out: OutAnnotation = None,
    renormalize: RenormalizeAnnotation = True,
    force_tableau: ForceAnnotation = False,
):
    """
    Check the Kraus form of one un-normalized IF step.

    Compares the extracted operators with the step on `samples` random states (seeded by
    `seed`) and reports the Choi matrix minimum eigenvalue. CP-invalid tableaus are rejected.
    """
    try:
        settings, cfg = _start(config, Mode.KRAUS_VERIFY)
        if cfg.integrator == Integrator.RK:
            raise ConfigError('kraus-verify needs an integrating-factor integrator.')
        if force_tableau:
            logger.warning('--force-tableau is ignored: Kraus extraction needs a CP tableau')
        scenario = cfg.build_scenario()
        dt, _ = cfg.time_grid(scenario)
        flow = FlowOperator.for_model(scenario.model, cfg.flow_method())
        result = verify_kraus(
            scenario.model,
            flow,
            cfg.build_tableau(),
            dt,
            samples=cfg.samples,
            seed=cfg.seed,
            workers=settings.threads,
        )
        if out is not None or cfg.output:
            write_csv(_output(out, cfg), *spectrum_csv(result.choi.spectrum))
    except LindbladError as e:
        _fail(e)

    table = Table(title='Kraus form', show_header=False)
    table.add_column('quantity')
    table.add_column('value', justify='right')
    table.add_row('operators', f'{result.count} (expected {result.expected_count})')
    table.add_row('max reconstruction defect', f'{result.reconstruction_defect:.3e}')
    table.add_row('completeness defect ‖ΣK†K - I‖', f'{result.completeness_defect:.3e}')
    table.add_row('Choi min eigenvalue', f'{result.choi.min_eig:.3e}')
    table.add_row('Choi min eigenvalue / ‖C‖', f'{result.choi.relative_min_eig:.3e}')
    if not renormalize:
        logger.debug('--no-renormalize has no effect on kraus-verify')
    _console().print(table)

    if not result.passed:
        logger.error('Kraus verification failed')
        raise typer.Exit(1)


@app.command(name='choi-probe')
def cmd_choi_probe(
    config: ConfigAnnotation,
    out: OutAnnotation = None,
    renormalize: RenormalizeAnnotation = True,
    force_tableau: ForceAnnotation = False,
):
    """
    Choi spectrum of the un-normalized one-step map.

    Writes `index,eigenvalue` in ascending order. Renormalization is never applied here since
    the probed map must stay linear.
    """
    try:
        settings, cfg = _start(config, Mode.CHOI_PROBE)
        scenario = cfg.build_scenario()
        tableau = cfg.build_tableau()
        dt, _ = cfg.time_grid(scenario)
        step = linear_step(
            cfg.integrator,
            scenario.model,
            tableau,
            dt,
            flow=FlowOperator.for_model(scenario.model, cfg.flow_method()),
            force=force_tableau,
        )
        probe = choi_probe(step, scenario.model.dim, workers=settings.threads)
        write_csv(_output(out, cfg), *spectrum_csv(probe.spectrum))
    except LindbladError as e:
        _fail(e)

    if not renormalize:
        logger.debug('--no-renormalize has no effect on choi-probe')
    logger.info(
        f'Choi min eigenvalue {probe.min_eig:.3e} ({probe.relative_min_eig:.3e} of ‖C‖), '
        f'Hermiticity defect {probe.herm_defect:.3e}'
    )
    cp_scheme = cfg.integrator != Integrator.RK and validate_tableau(tableau).is_cp_valid
    if cp_scheme and not probe.is_cp:
        logger.error('Choi matrix of a CP scheme has a negative eigenvalue')
        raise typer.Exit(1)


if __name__ == '__main__':
    app()
