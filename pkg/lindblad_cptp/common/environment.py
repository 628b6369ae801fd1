"""
Choice of the ``.env.<ENVIRONMENT>`` file that supplies the ``LK_*`` settings.

An explicit environment (argument, then the ``ENVIRONMENT`` variable) always wins; its file is
optional. Without one, the project root must hold exactly one ``.env.*`` file, not counting
``.env.example``. Problems end up in ``errors``/``warnings``; nothing here raises.
"""

import os
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

from .. import PROJECT_ROOT

ENV_FILE_PREFIX = '.env.'
TEMPLATE_SUFFIXES = frozenset({'example'})


class Environment(StrEnum):
    DEV = 'dev'
    CI = 'ci'
    PROD = 'prod'


SUPPORTED_ENVIRONMENTS = [x.value for x in Environment]


@dataclass(frozen=True, slots=True)
class EnvSelection:
    environment: Environment | None

    env_path: Path | None = None
    """Settings file to load; ``None`` means run on defaults."""

    errors: list[str] = field(default_factory=list)

    warnings: list[str] = field(default_factory=list)

    @classmethod
    def failed(cls, error: str) -> 'EnvSelection':
        return cls(environment=None, errors=[error])


def env_from_file(file: Path) -> Environment | None:
    """
    Environment named by a ``.env.<suffix>`` file.

    ``None`` for templates and for files outside the naming scheme; ``ValueError`` for an
    unsupported suffix.
    """
    suffix = file.name.removeprefix(ENV_FILE_PREFIX).lower()
    if suffix == file.name.lower() or not suffix or suffix in TEMPLATE_SUFFIXES:
        return None
    return Environment(suffix)


def file_from_env(project_root: Path, environment: Environment) -> Path:
    return project_root / f'{ENV_FILE_PREFIX}{environment}'


def _explicit(project_root: Path, environment: str | Environment) -> EnvSelection:
    try:
        env = Environment(environment.strip().lower())
    except ValueError:
        return EnvSelection.failed(
            f'Environment `{environment}` must be one of {SUPPORTED_ENVIRONMENTS} '
            '(case insensitive).'
        )
    path = file_from_env(project_root, env)
    if path.exists():
        return EnvSelection(environment=env, env_path=path)
    return EnvSelection(
        environment=env, warnings=[f'Environment file `{path}` not found; using defaults.']
    )


def _detected(project_root: Path) -> EnvSelection:
    found: dict[Path, Environment] = {}
    unknown: list[Path] = []
    for file in sorted(project_root.glob(f'{ENV_FILE_PREFIX}*')):
        try:
            env = env_from_file(file)
        except ValueError:
            unknown.append(file)
            continue
        if env is not None:
            found[file] = env

    warnings: list[str] = []
    if unknown:
        warnings.append(
            'Unknown environment file(s) found in project root:\n' + '\n'.join(map(str, unknown))
        )

    match list(found.items()):
        case []:
            warnings.append(f'No environment file found in `{project_root}`; using defaults.')
            return EnvSelection(environment=None, warnings=warnings)
        case [(path, env)]:
            return EnvSelection(environment=env, env_path=path, warnings=warnings)
        case _:
            return EnvSelection(
                environment=None,
                errors=[
                    'More than one environment file found in project root:\n'
                    + '\n'.join(map(str, found))
                ],
                warnings=warnings,
            )


def select_env(
    project_root: Path = PROJECT_ROOT, environment: str | Environment | None = None
) -> EnvSelection:
    explicit = environment or os.getenv('ENVIRONMENT', '').strip()
    if explicit:
        return _explicit(project_root, explicit)
    return _detected(project_root)
