"""
Pytest configuration and fixtures for the Lindblad integrators.
"""

import logging
import os

import numpy as np
import pytest

from lindblad_cptp.common.logging import PACKAGE_LOGGER
from lindblad_cptp.models import LindbladModel
from lindblad_cptp.services.flow import FlowOperator
from lindblad_cptp.services.scenarios import SIGMA_MINUS

from .factories import LindbladModelFactory


ENV_VARS = ('ENVIRONMENT', 'LK_THREADS', 'LK_LOG_LEVEL', 'LK_MIN_EIG_ABORT')


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep tests independent from host machine configuration."""
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    yield
    # load_dotenv writes straight into os.environ
    for name in ENV_VARS:
        os.environ.pop(name, None)


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Undo `get_logger` so caplog sees package records in every test."""
    yield
    package = logging.getLogger(PACKAGE_LOGGER)
    package.handlers.clear()
    package.propagate = True
    package.setLevel(logging.NOTSET)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def decay_model() -> LindbladModel:
    """Qubit amplitude damping with ``γ = 1`` plus a small splitting."""
    return LindbladModel(np.diag([0.0, 0.7]), ((1.0, SIGMA_MINUS),))


@pytest.fixture
def random_model() -> LindbladModel:
    return LindbladModelFactory(dim=4, n_jumps=2, seed=7)


@pytest.fixture
def random_flow(random_model) -> FlowOperator:
    return FlowOperator.for_model(random_model)


@pytest.fixture
def write_config(tmp_path):
    """Write a run config into ``tmp_path`` and return its path."""

    def write(text: str, name: str = 'run.cfg'):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return path

    return write
