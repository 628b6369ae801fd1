#!python
"""
Testing with pytest.
"""

import os
from enum import StrEnum
from typing import Annotated

import typer

from admin import PROJECT_ROOT
from admin.utils import DryAnnotation, run

app = typer.Typer(
    help=__doc__,
    no_args_is_help=True,
    add_completion=False,
    rich_markup_mode='markdown',
)


class Suite(StrEnum):
    UNIT = 'unit'
    INTEGRATION = 'integration'


SuiteAnnotation = Annotated[
    list[Suite] | None,
    typer.Argument(
        help='One or more suites to run. If not set, all suites run.',
        show_default=False,
    ),
]


def _test_env() -> dict[str, str]:
    env = os.environ.copy()
    env.setdefault('ENVIRONMENT', 'ci')
    pythonpath = env.get('PYTHONPATH')
    project_root = str(PROJECT_ROOT)
    env['PYTHONPATH'] = (
        project_root if not pythonpath else os.pathsep.join([project_root, pythonpath])
    )
    return env


def _marker_expr(suites: list[Suite] | None, slow: bool) -> str:
    selected = list(Suite) if suites is None else suites
    expr = ' or '.join(s.value for s in selected)
    return expr if slow else f'({expr}) and not slow'


@app.command(name='run')
def test_run(
    suites: SuiteAnnotation = None,
    slow: Annotated[
        bool, typer.Option(help='Include the acceptance-scale studies marked `slow`.')
    ] = False,
    cov: Annotated[bool, typer.Option(help='Collect coverage for `lindblad_cptp`.')] = False,
    dry: DryAnnotation = False,
):
    """
    Run the test suites.

    Test configuration in `pyproject.toml`.
    """
    args = ['pytest', 'tests', '-m', _marker_expr(suites, slow)]
    if cov:
        args += ['--cov=lindblad_cptp', '--cov-report=term-missing']
    run(*args, dry=dry, env=_test_env())


@app.command(name='slow')
def test_slow(dry: DryAnnotation = False):
    """Run only the acceptance-scale studies."""
    run('pytest', 'tests', '-m', 'slow', dry=dry, env=_test_env())


if __name__ == '__main__':
    app()
