"""
Checks done before and after a run.

Each check returns ``Issue`` records instead of raising, so the CLI can report all of them and
derive the exit status: any error-level issue makes it nonzero.
"""

from dataclasses import dataclass
from enum import StrEnum

from .common.environment import SUPPORTED_ENVIRONMENTS, EnvSelection
from .exceptions import InvariantViolation
from .services.diagnostics import CPTPReport
from .services.simulation import Monitor, Trajectory

TRACE_TOL = 1e-10
HERM_TOL = 1e-10


class Level(StrEnum):
    WARNING = 'warning'
    ERROR = 'error'


@dataclass(frozen=True, slots=True)
class Issue:
    level: Level
    msg: str
    hint: str | None = None
    id: str = ''

    @classmethod
    def warning(cls, msg: str, hint: str | None = None, id: str = '') -> 'Issue':
        return cls(Level.WARNING, msg, hint, id)

    @classmethod
    def error(cls, msg: str, hint: str | None = None, id: str = '') -> 'Issue':
        return cls(Level.ERROR, msg, hint, id)

    @property
    def is_error(self) -> bool:
        return self.level == Level.ERROR


def check_environment(selection: EnvSelection) -> list[Issue]:
    checks: list[Issue] = []

    if selection.warnings:
        checks.append(
            Issue.warning(
                '\n\n'.join(selection.warnings),
                hint='Create `.env.<env>` to override LK_* defaults, or ignore this.',
                id='W001',
            )
        )

    if selection.errors:
        if any('must be one of' in e for e in selection.errors):
            checks.append(
                Issue.error(
                    '\n'.join(selection.errors),
                    hint=f'Valid environments: {SUPPORTED_ENVIRONMENTS}',
                    id='E001',
                )
            )
        else:
            checks.append(
                Issue.error(
                    '\n'.join(selection.errors),
                    hint='Have only one `.env.<env>` file or set the `ENVIRONMENT` variable.',
                    id='E002',
                )
            )

    return checks


def check_trajectory(traj: Trajectory, *, cp_scheme: bool, renormalized: bool) -> list[Issue]:
    """CPTP verdict on the sampled reports of a finished run."""
    checks: list[Issue] = []
    worst = min(traj.reports, key=lambda r: r.min_eig)

    if worst.min_eig < -1e-12:
        if cp_scheme:
            checks.append(
                Issue.error(
                    f'Integrating-factor run reached min eigenvalue {worst.min_eig:.3e}.',
                    hint='A CP scheme cannot do this; suspect the tableau or a forced run.',
                    id='E010',
                )
            )
        else:
            checks.append(
                Issue.warning(
                    f'Plain RK run lost positivity: min eigenvalue {worst.min_eig:.3e}.',
                    id='W010',
                )
            )

    trace = max(r.trace_defect for r in traj.reports)
    if renormalized and trace > TRACE_TOL:
        checks.append(Issue.error(f'Trace defect {trace:.3e} after renormalization.', id='E011'))

    herm = max(r.herm_defect for r in traj.reports)
    if herm > HERM_TOL:
        checks.append(Issue.error(f'Hermiticity defect {herm:.3e}.', id='E012'))

    return checks


def min_eig_monitor(threshold: float) -> Monitor:
    """Abort a CP run as soon as a sampled state has ``min_eig < -threshold``."""

    def monitor(step: int, t: float, report: CPTPReport):
        if report.min_eig < -threshold:
            raise InvariantViolation(
                f'min eigenvalue {report.min_eig:.3e} < -{threshold:g} at step {step} '
                f'(t = {t:.6g}); this is an integrator bug, not physics.'
            )

    return monitor
