#!python
"""
Linting and static type checking.
"""

from typing import Annotated

import typer

from .utils import DryAnnotation, logger, run

app = typer.Typer(
    help=__doc__,
    no_args_is_help=True,
    add_completion=False,
    rich_markup_mode='markdown',
)

LINT_TARGETS = ('lindblad_cptp', 'admin', 'tests')

PathsAnnotation = Annotated[
    list[str] | None,
    typer.Argument(help='Files or directories. Defaults to the package, admin and tests.'),
]
CheckAnnotation = Annotated[
    bool,
    typer.Option(help='Report violations without fixing or reformatting. Use this in CI.'),
]


@app.command(name='ruff')
def lint_ruff(
    paths: PathsAnnotation = None, check: CheckAnnotation = False, dry: DryAnnotation = False
):
    targets = paths or list(LINT_TARGETS)
    if check:
        run('ruff', 'check', *targets, dry=dry)
        run('ruff', 'format', '--check', *targets, dry=dry)
    else:
        run('ruff', 'check', '--fix', *targets, dry=dry)
        run('ruff', 'format', *targets, dry=dry)


@app.command(name='mypy')
def lint_mypy(paths: PathsAnnotation = None, dry: DryAnnotation = False):
    """Type-check the package (numpy and scipy ship their own stubs)."""
    run('mypy', *(paths or ['lindblad_cptp']), dry=dry)


@app.command(name='all')
def lint_all(check: CheckAnnotation = False, dry: DryAnnotation = False):
    """
    Run ruff, then mypy.

    Both are configured in `pyproject.toml`.
    """
    lint_ruff(check=check, dry=dry)
    lint_mypy(dry=dry)

    logger.info('Done')


if __name__ == '__main__':
    app()
