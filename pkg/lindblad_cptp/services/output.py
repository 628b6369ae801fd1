"""
Deterministic CSV output.

Comma separated, ``.`` decimal point, LF line endings, header first. Floats are written with
``%.17g`` so a value survives the round trip, and identical runs give byte-identical files.
"""

import csv
import logging
import sys
from collections.abc import Iterable, Sequence
from pathlib import Path

from ..linalg import RealVector
from .convergence import ConvergenceTable
from .simulation import Scenario, Trajectory

logger = logging.getLogger(__name__)

type Cell = float | int | str | None
type Row = Sequence[Cell]

SIMULATE_HEADER = ('t', 'trace_defect', 'herm_defect', 'min_eig', 'rank')
CONVERGE_HEADER = ('method', 'steps', 'dt', 'error', 'order')
SPECTRUM_HEADER = ('index', 'eigenvalue')


def format_cell(value: Cell) -> str:
    match value:
        case None:
            return ''
        case bool() | int() | str():
            return str(value)
        case _:
            return '%.17g' % value


def write_csv(path: Path | None, header: Sequence[str], rows: Iterable[Row]):
    """Write to ``path``, or to stdout when it is ``None``."""

    def dump(stream):
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(x) for x in row])

    if path is None:
        dump(sys.stdout)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as f:
        dump(f)
    logger.info(f'Wrote `{path}`')


def trajectory_csv(scenario: Scenario, traj: Trajectory) -> tuple[list[str], list[Row]]:
    """One row per sampled step; the observable and extras are read at that step."""
    header = [*SIMULATE_HEADER, scenario.observable_name, *traj.extras]
    rows: list[Row] = []
    for step, report, rank in zip(
        traj.sample_steps, traj.reports, traj.sample_ranks, strict=True
    ):
        rows.append(
            [
                step * traj.dt,
                report.trace_defect,
                report.herm_defect,
                report.min_eig,
                rank,
                float(traj.observable[step]),
                *(float(series[step]) for series in traj.extras.values()),
            ]
        )
    return header, rows


def convergence_csv(table: ConvergenceTable) -> tuple[list[str], list[Row]]:
    rows: list[Row] = [(r.method, r.steps, r.dt, r.error, r.order) for r in table.rows]
    return list(CONVERGE_HEADER), rows


def spectrum_csv(spectrum: RealVector) -> tuple[list[str], list[Row]]:
    return list(SPECTRUM_HEADER), [(k, float(x)) for k, x in enumerate(spectrum)]
