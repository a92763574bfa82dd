"""Flat key = value experiment configs.

    # comment
    command = robustness
    seed = 7
    eta_grid = 0.2, 0.1, 0.05
    matrix = 0.5, 0; 0, 2

Lists are comma separated, matrix rows are separated by ';'.
``dump_config`` writes the canonical form, which parses back unchanged.
"""
import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError
from .noise import KAPPAS, TimeGrid
from .sde_bridge import NOISE_SHAPES

logger = logging.getLogger(__name__)

COMMANDS = ('ou_check', 'robustness', 'hyperbolic', 'wave')
PATH_KINDS = ('wiener', 'zero', 'linear')
MODEL_NAMES = ('additive', 'cubic', 'forced_cubic')


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = 'ou_check'
    seed: int = 0
    t_min: float = -32.0
    t_max: float = 32.0
    h: float = 0.015625
    tail_tol: float = 1e-10
    tol: float = 1e-10
    kernel_tol: float = 1e-9
    integrator_step: float = 0.015625
    margin: float = 0.1
    kappa: str = 'rational'
    path_kind: str = 'wiener'
    paths: int = 2000
    checkpoints: tuple = (-4.0, 1.0, 4.0, 16.0)
    eta_grid: tuple = (0.2, 0.1, 0.05, 0.025)
    seeds: int = 1
    workers: int = 1
    scalar_base: float = 0.5
    scalar_perturbed: float = 0.55
    rotation: float = 0.01
    matrix: Optional[tuple] = None
    perturbation: Optional[tuple] = None
    models: tuple = MODEL_NAMES
    epsilon: float = 0.0
    n_modes: int = 4
    damping: float = 1.0
    linear_coefficient: float = 1.0
    forcing: float = 0.0
    noise_shape: str = 'both'
    window: float = 4.0
    output_dir: str = ''

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_min, self.t_max, self.h)

    def matrix_array(self):
        return None if self.matrix is None else np.array(self.matrix, dtype=float)

    def perturbation_array(self):
        return None if self.perturbation is None else np.array(self.perturbation, dtype=float)

    def validate(self):
        """Raise ConfigurationError naming the first offending field."""
        for name in ('tail_tol', 'tol', 'kernel_tol', 'integrator_step', 'h', 'window'):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f'must be positive, got {getattr(self, name)}', field=name)
        choices = {'command': COMMANDS, 'kappa': tuple(KAPPAS), 'path_kind': PATH_KINDS,
                   'noise_shape': NOISE_SHAPES}
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigurationError(f"'{getattr(self, name)}' is not one of {', '.join(allowed)}",
                                         field=name)
        for model in self.models:
            if model not in MODEL_NAMES:
                raise ConfigurationError(f"unknown model '{model}'", field='models')
        for name in ('paths', 'seeds', 'workers', 'n_modes'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f'must be at least 1, got {getattr(self, name)}', field=name)
        if self.seed < 0:
            raise ConfigurationError(f'must be non-negative, got {self.seed}', field='seed')
        if not 0 <= self.margin < 1:
            raise ConfigurationError(f'must lie in [0, 1), got {self.margin}', field='margin')
        if not self.damping > 0:
            raise ConfigurationError(f'must be positive, got {self.damping}', field='damping')
        if self.epsilon < 0:
            raise ConfigurationError(f'must be non-negative, got {self.epsilon}', field='epsilon')
        if any(not 0 <= eta <= 1 for eta in self.eta_grid):
            raise ConfigurationError('every eta must lie in [0, 1]', field='eta_grid')
        if list(self.eta_grid) != sorted(self.eta_grid, reverse=True):
            raise ConfigurationError('eta grid must be sorted in descending order', field='eta_grid')
        if 0.0 in self.checkpoints:
            raise ConfigurationError('checkpoints must be non-zero', field='checkpoints')
        for name in ('matrix', 'perturbation'):
            value = getattr(self, name)
            if value is not None and any(len(row) != len(value) for row in value):
                raise ConfigurationError('matrix must be square', field=name)
        if self.perturbation is not None:
            if self.matrix is None or len(self.perturbation) != len(self.matrix):
                raise ConfigurationError('perturbation needs a matrix of the same size', field='perturbation')
        self.grid  # t_min < 0 < t_max, both multiples of h
        return self


# non-default keys of the configs shipped in configs/ and written by seed_configs
BUNDLED = {
    'ou_check': {'paths': 10000},
    'robustness': {},
    'hyperbolic': {'seeds': 5},
    'wave': {'t_min': -64.0, 't_max': 64.0, 'h': 0.03125, 'seeds': 5,
             'eta_grid': (0.2, 0.1, 0.05, 0.025, 0.0)},
}

FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_FLOAT_LISTS = {'checkpoints', 'eta_grid'}
_STRING_LISTS = {'models'}
_MATRICES = {'matrix', 'perturbation'}


def _parse_value(name, raw):
    kind = FIELDS[name].type
    if name in _MATRICES:
        rows = [tuple(float(x) for x in row.split(',')) for row in raw.split(';')]
        if any(len(row) != len(rows[0]) for row in rows):
            raise ValueError('ragged matrix rows')
        return tuple(rows)
    if name in _FLOAT_LISTS:
        return tuple(float(x) for x in raw.split(',')) if raw else ()
    if name in _STRING_LISTS:
        return tuple(x.strip() for x in raw.split(',') if x.strip())
    if kind in (int, 'int'):
        return int(raw)
    if kind in (float, 'float'):
        return float(raw)
    return raw


def parse_config(text, command=None) -> ExperimentConfig:
    """Parse and validate; ``command`` fills in a missing key and must match a present one."""
    values, lines = {}, {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError("expected 'key = value'", line=number)
        key, raw = (part.strip() for part in line.split('=', 1))
        if key not in FIELDS:
            raise ConfigurationError('unknown key', line=number, field=key)
        if key in values:
            raise ConfigurationError('duplicate key', line=number, field=key)
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigurationError(f'cannot parse {raw!r} ({exc})', line=number, field=key) from None
        lines[key] = number
    if command is not None:
        if values.setdefault('command', command) != command:
            raise ConfigurationError(f"config is for '{values['command']}', not '{command}'",
                                     line=lines['command'], field='command')
    try:
        return ExperimentConfig(**values).validate()
    except ConfigurationError as exc:
        raise ConfigurationError(exc.detail, line=lines.get(exc.field), field=exc.field) from None


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return '; '.join(', '.join(repr(float(x)) for x in row) for row in value)
        return ', '.join(repr(x) if isinstance(x, float) else str(x) for x in value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for name in FIELDS:
        value = getattr(config, name)
        if value is None or (name == 'output_dir' and not value):
            continue
        lines.append(f'{name} = {_format_value(value)}')
    return '\n'.join(lines) + '\n'


def bundled_config(command) -> ExperimentConfig:
    if command not in BUNDLED:
        raise ConfigurationError(f"no bundled config for '{command}'", field='command')
    return ExperimentConfig(command=command, **BUNDLED[command]).validate()


def load_config(path, command=None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigurationError(f'cannot read config {path}: {exc.strerror}') from None
    return parse_config(text, command)


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **overrides).validate()


def derive_seed(seed, *counters) -> int:
    """Counter-based child seed; independent of scheduling order."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(c) for c in counters))
    return int(sequence.generate_state(1)[0])
