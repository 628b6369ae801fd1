"""
Run configuration: a flat ``key = value`` file validated into ``RunConfig``.

Example::

    mode = simulate
    scenario = jc
    m = 30
    kappa = 1e-3
    steps = 800
    t_final = 1.8tr
    integrator = if-dense
"""

from enum import StrEnum
from pathlib import Path
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..exceptions import ConfigError, LindbladError
from ..linalg import ComplexMatrix
from ..models import (
    ButcherTableau,
    EpsilonRule,
    LindbladModel,
    PreTruncation,
    TruncationPolicy,
    get_tableau,
)
from ..models.tableau import Coefficient
from ..services.convergence import ReferenceKind
from ..services.flow import FlowMethod
from ..services.scenarios import (
    STIFF_COUPLING,
    STIFF_GAMMA,
    STIFF_INITIAL_LEVEL,
    STIFF_OMEGA0,
    JCParams,
    substitute_hamiltonian,
)
from ..services.simulation import (
    Integrator,
    MethodSpec,
    Scenario,
    build_amplitude_damping,
    build_unitary_qubit,
    custom_scenario,
    jaynes_cummings_scenario,
    stiff_scenario,
)

TR_SUFFIX = 'tr'


class Mode(StrEnum):
    SIMULATE = 'simulate'
    CONVERGE = 'converge'
    KRAUS_VERIFY = 'kraus-verify'
    CHOI_PROBE = 'choi-probe'


class ScenarioKind(StrEnum):
    JC = 'jc'
    STIFF = 'stiff'
    AMPLITUDE_DAMPING = 'amplitude-damping'
    UNITARY = 'unitary'
    CUSTOM = 'custom'


def read_config_lines(text: str) -> dict[str, str]:
    """
    Parse ``key = value`` lines.

    Rules:

    - Ignores blank lines and ``#`` comments (whole-line or trailing after whitespace).
    - Strips surrounding single/double quotes.
    - A line without ``=`` or a repeated key is an error naming the line.
    """
    values: dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split(' #', 1)[0].strip()
        if not line or line.startswith('#'):
            continue

        key, sep, value = line.partition('=')
        if not sep:
            raise ConfigError(f'Line {number}: expected `key = value`, got `{raw_line.strip()}`.')

        key = key.strip().lower()
        value = value.strip()
        if (value.startswith("'") and value.endswith("'")) or (
            value.startswith('"') and value.endswith('"')
        ):
            value = value[1:-1]

        if not key:
            raise ConfigError(f'Line {number}: empty key.')
        if key in values:
            raise ConfigError(f'Line {number}: duplicate key `{key}`.')
        values[key] = value

    return values


def parse_matrix_literal(text: str) -> ComplexMatrix:
    """``'1, 0; 0, -1'`` style literal: rows split by ``;``, entries by ``,``."""
    try:
        rows = [
            [complex(x.replace(' ', '')) for x in row.split(',')]
            for row in text.split(';')
            if row.strip()
        ]
    except ValueError:
        raise ConfigError(f'Malformed matrix literal `{text}`.') from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise ConfigError(f'Matrix literal `{text}` has ragged or missing rows.')
    return np.array(rows, dtype=np.complex128)


def _split_list(text: str | None) -> list[str]:
    return [x.strip() for x in (text or '').split(',') if x.strip()]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True, frozen=True)

    mode: Mode = Mode.SIMULATE
    scenario: ScenarioKind = ScenarioKind.JC

    integrator: Integrator = Integrator.IF_DENSE
    tableau: str = 'rk4'
    tableau_a: str | None = None
    tableau_b: str | None = None
    tableau_c: str | None = None
    tableau_order: int | None = Field(default=None, ge=1)
    flow: str = 'exact'

    dt: float | None = Field(default=None, gt=0)
    steps: int | None = Field(default=None, ge=1)
    t_final: str | None = None

    epsilon: float = Field(default=0.0, ge=0)
    epsilon_policy: str = 'fixed'
    rmax: int | None = Field(default=None, ge=1)
    pre_truncate: bool = False
    epsilon_pre: float | None = Field(default=None, ge=0)
    stage_epsilon: float | None = Field(default=None, ge=0)
    stage_rmax: int | None = Field(default=None, ge=1)

    stride: int = Field(default=1, ge=1)
    output: str | None = None

    methods: str | None = None
    step_counts: str | None = None
    reference: ReferenceKind = ReferenceKind.AUTO
    reference_steps: int | None = Field(default=None, ge=1)

    seed: int = 0
    samples: int = Field(default=20, ge=1)

    m: int = Field(default=30, ge=2)
    lam: float = Field(default=1.0, gt=0, alias='lambda')
    kappa: float = Field(default=0.0, ge=0)
    v: float | None = Field(default=None, gt=0)
    gamma: float | None = Field(default=None, ge=0)
    n_levels: int = Field(default=6, ge=2)
    omega0: float = STIFF_OMEGA0
    coupling: float = STIFF_COUPLING
    initial_level: int = Field(default=STIFF_INITIAL_LEVEL, ge=0)
    omega: float = 1.0
    hamiltonian: str | None = None
    hamiltonian_file: str | None = None
    jump_files: str | None = None
    jump_rates: str | None = None
    initial_file: str | None = None

    base_dir: Path = Field(default=Path('.'), exclude=True)

    @field_validator('flow')
    @classmethod
    def _check_flow(cls, value: str) -> str:
        FlowMethod.parse(value)
        return value

    @field_validator('epsilon_policy')
    @classmethod
    def _check_epsilon_policy(cls, value: str) -> str:
        EpsilonRule.parse(value)
        return value

    @field_validator('methods')
    @classmethod
    def _check_methods(cls, value: str | None) -> str | None:
        for item in _split_list(value):
            MethodSpec.parse(item)
        return value

    @field_validator('t_final')
    @classmethod
    def _check_t_final(cls, value: str | None) -> str | None:
        if value is not None:
            number = value.strip().lower().removesuffix(TR_SUFFIX).strip()
            if not float(number) > 0:
                raise ValueError(f't_final must be positive, got `{value}`.')
        return value

    @model_validator(mode='after')
    def _check_grid(self) -> Self:
        if self.dt is not None and self.steps is not None:
            raise ValueError('conflicting time grid: give either `dt` or `steps`, not both.')
        if self.t_final and self.t_final.strip().lower().endswith(TR_SUFFIX):
            if self.scenario != ScenarioKind.JC:
                raise ValueError('t_final in units of t_r is only defined for scenario = jc.')
        if self.mode == Mode.CONVERGE:
            if not self.methods or not self.step_counts:
                raise ValueError('converge mode needs `methods` and `step_counts`.')
        elif self.dt is None and self.steps is None:
            raise ValueError(f'{self.mode} mode needs `dt` or `steps`.')
        if self.mode == Mode.SIMULATE and self.t_final is None:
            raise ValueError('simulate mode needs `t_final` together with `dt` or `steps`.')
        if self.scenario == ScenarioKind.CUSTOM and not (self.hamiltonian or self.hamiltonian_file):
            raise ValueError('scenario = custom needs `hamiltonian` or `hamiltonian_file`.')
        return self

    def jc_params(self) -> JCParams:
        return JCParams(m=self.m, lam=self.lam, kappa=self.kappa, v=self.v)

    def build_scenario(self) -> Scenario:
        try:
            return self._build_scenario()
        except LindbladError:
            raise
        except ValueError as e:
            raise ConfigError(f'Scenario `{self.scenario}`: {e}') from e

    def _build_scenario(self) -> Scenario:
        match self.scenario:
            case ScenarioKind.JC:
                return jaynes_cummings_scenario(self.jc_params())
            case ScenarioKind.STIFF:
                if self._has_hamiltonian():
                    h = self._hamiltonian()
                else:
                    h = substitute_hamiltonian(self.n_levels, self.omega0, self.coupling)
                gamma = STIFF_GAMMA if self.gamma is None else self.gamma
                return stiff_scenario(self.n_levels, gamma, h, self.initial_level)
            case ScenarioKind.AMPLITUDE_DAMPING:
                return build_amplitude_damping(1.0 if self.gamma is None else self.gamma)
            case ScenarioKind.UNITARY:
                return build_unitary_qubit(self.omega)
            case ScenarioKind.CUSTOM:
                return self._custom_scenario()

    def build_tableau(self) -> ButcherTableau:
        if self.tableau_a is None and self.tableau_b is None and self.tableau_c is None:
            return get_tableau(self.tableau)
        if not (self.tableau_a and self.tableau_b and self.tableau_c and self.tableau_order):
            raise ConfigError('Inline tableau needs tableau_a, tableau_b, tableau_c and order.')
        rows: list[list[Coefficient]] = [
            list(_split_list(row)) for row in self.tableau_a.split(';')
        ]
        return ButcherTableau.from_lower(
            self.tableau,
            rows,
            list(_split_list(self.tableau_b)),
            list(_split_list(self.tableau_c)),
            self.tableau_order,
        )

    def flow_method(self) -> FlowMethod:
        return FlowMethod.parse(self.flow)

    def method(self) -> MethodSpec:
        """The single method of a simulate/verify run."""
        return MethodSpec(self.integrator, self.flow_method())

    def method_list(self) -> list[MethodSpec]:
        return [MethodSpec.parse(x) for x in _split_list(self.methods)]

    def step_count_list(self) -> list[int]:
        try:
            return [int(x) for x in _split_list(self.step_counts)]
        except ValueError:
            raise ConfigError(f'Malformed step_counts `{self.step_counts}`.') from None

    def epsilon_rule(self) -> EpsilonRule:
        return EpsilonRule.parse(self.epsilon_policy)

    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(
            epsilon=self.epsilon,
            rmax=self.rmax,
            pre_truncate=PreTruncation(enabled=self.pre_truncate, epsilon=self.epsilon_pre),
        )

    def stage_policy(self) -> TruncationPolicy | None:
        if self.stage_epsilon is None and self.stage_rmax is None:
            return None
        return TruncationPolicy(
            epsilon=self.epsilon if self.stage_epsilon is None else self.stage_epsilon,
            rmax=self.rmax if self.stage_rmax is None else self.stage_rmax,
        )

    def final_time(self, scenario: Scenario) -> float:
        """``t_final`` in model time units; ``<x>tr`` means ``x`` revival times."""
        if self.t_final is None:
            if self.dt is not None and self.steps is not None:
                return self.dt * self.steps
            if scenario.t_final is None:
                raise ConfigError(f'Scenario `{scenario.name}` needs an explicit `t_final`.')
            return scenario.t_final
        text = self.t_final.strip().lower()
        if text.endswith(TR_SUFFIX):
            return float(text.removesuffix(TR_SUFFIX)) * self.jc_params().revival_time
        return float(text)

    def time_grid(self, scenario: Scenario) -> tuple[float, int]:
        """``(dt, steps)`` of a single run."""
        if self.steps is not None:
            return self.final_time(scenario) / self.steps, self.steps
        assert self.dt is not None
        if self.t_final is None:
            return self.dt, 1
        steps = max(1, round(self.final_time(scenario) / self.dt))
        return self.dt, steps

    def _resolve(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.base_dir / path

    def _load_matrix(self, name: str) -> ComplexMatrix:
        path = self._resolve(name)
        try:
            return np.asarray(np.load(path), dtype=np.complex128)
        except OSError as e:
            raise ConfigError(f'Cannot read matrix file `{path}`: {e}') from e

    def _has_hamiltonian(self) -> bool:
        return bool(self.hamiltonian or self.hamiltonian_file)

    def _hamiltonian(self) -> ComplexMatrix:
        if self.hamiltonian_file:
            return self._load_matrix(self.hamiltonian_file)
        assert self.hamiltonian is not None
        return parse_matrix_literal(self.hamiltonian)

    def _custom_scenario(self) -> Scenario:
        h = self._hamiltonian()
        files = _split_list(self.jump_files)
        try:
            rates = [float(x) for x in _split_list(self.jump_rates)] or [1.0] * len(files)
        except ValueError:
            raise ConfigError(f'Malformed jump_rates `{self.jump_rates}`.') from None
        if len(rates) != len(files):
            raise ConfigError(f'{len(files)} jump files but {len(rates)} jump rates.')
        jumps = tuple((r, self._load_matrix(f)) for r, f in zip(rates, files, strict=True))
        model = LindbladModel(h, jumps)
        if self.initial_file:
            initial = self._load_matrix(self.initial_file)
        else:
            initial = np.zeros(model.dim, dtype=np.complex128)
            initial[0] = 1.0
        m = model.dim // 2 if model.dim % 2 == 0 else None
        return custom_scenario(model, initial, m)


def parse_config(
    text: str, base_dir: Path | None = None, mode: Mode | None = None
) -> RunConfig:
    """
    Parse and validate a config; relative matrix paths resolve against ``base_dir``.

    ``mode`` comes from the command line; a config that names another mode is rejected.
    """
    values = read_config_lines(text)
    if 'base_dir' in values:
        raise ConfigError('Invalid run config: unknown key `base_dir`.')
    if mode is not None and values.setdefault('mode', mode.value) != mode.value:
        raise ConfigError(f'Config is for mode `{values["mode"]}`, not `{mode}`.')
    try:
        return RunConfig.model_validate({**values, 'base_dir': base_dir or Path('.')})
    except ValidationError as e:
        problems = '; '.join(
            f'{".".join(map(str, err["loc"])) or "config"}: {err["msg"]}' for err in e.errors()
        )
        raise ConfigError(f'Invalid run config: {problems}') from None


def load_config(path: Path, mode: Mode | None = None) -> RunConfig:
    try:
        text = path.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f'Cannot read config `{path}`: {e}') from e
    return parse_config(text, base_dir=path.parent, mode=mode)
