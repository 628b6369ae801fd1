"""
Process-level settings, read from ``.env.<ENVIRONMENT>`` (python-dotenv) and the environment.

Variables already set in the environment win over the file.
"""

import logging
import os
from dataclasses import dataclass, field

from dotenv import load_dotenv

from . import PROJECT_ROOT
from .common.environment import EnvSelection, select_env
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_MIN_EIG_ABORT = 1e-6


@dataclass(frozen=True, slots=True)
class Settings:
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    log_level: str = 'INFO'
    min_eig_abort: float = DEFAULT_MIN_EIG_ABORT
    """An IF run whose sampled ``min_eig`` drops below ``-min_eig_abort`` is aborted."""

    selection: EnvSelection | None = None


def _read(name: str, cast, default):
    raw = os.getenv(name, '').strip()
    if not raw:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f'Environment variable {name}={raw!r} is malformed.') from None


def load_settings(project_root=PROJECT_ROOT, environment: str | None = None) -> Settings:
    """Select and load the env file, then read the ``LK_*`` variables."""
    selection = select_env(project_root, environment)
    if selection.env_path is not None:
        load_dotenv(dotenv_path=selection.env_path, override=False)

    threads = _read('LK_THREADS', int, os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError(f'LK_THREADS must be >= 1, got {threads}.')
    level = _read('LK_LOG_LEVEL', str.upper, 'INFO')
    if level not in logging.getLevelNamesMapping():
        raise ConfigError(f'LK_LOG_LEVEL `{level}` is not a logging level.')
    min_eig_abort = _read('LK_MIN_EIG_ABORT', float, DEFAULT_MIN_EIG_ABORT)
    if not min_eig_abort > 0:
        raise ConfigError(f'LK_MIN_EIG_ABORT must be positive, got {min_eig_abort}.')

    return Settings(
        threads=threads, log_level=level, min_eig_abort=min_eig_abort, selection=selection
    )
