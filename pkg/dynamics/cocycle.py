"""Linear cocycles (phi, Theta) in discrete and continuous time.

A discrete cocycle is given by its step operators A(Theta_n omega_p); a
continuous one by the generator matrix of x' = (A + B(Theta_t omega_tau)) x.
Both are evaluated along a fixed base point, so a cocycle object is also
its own evolution process t, s -> phi(t - s, Theta_s omega_p).
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import DomainError, IntegrationError
from .noise import SamplePath, TimeGrid

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1.0 / 64
SAMPLES_PER_UNIT = 64
_CACHE_LIMIT = 4096


def op_norm(matrix) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(np.atleast_2d(matrix), 2))


@dataclass(frozen=True)
class BasePoint:
    tau: float = 0.0
    path: Optional[SamplePath] = None


def _checked(matrix, dimension, what):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape != (dimension, dimension):
        raise DomainError(f'{what} has shape {matrix.shape}, expected {(dimension, dimension)}')
    if not np.all(np.isfinite(matrix)):
        raise IntegrationError(f'{what} has non-finite entries')
    return matrix


class DiscreteCocycle:
    """x_{n+1} = A(Theta_n omega_p) x_n with ``step_operator(n)`` returning A."""

    def __init__(self, step_operator, dimension, base_point=None, name='discrete'):
        self.step_operator = step_operator
        self.dimension = int(dimension)
        self.base_point = base_point or BasePoint()
        self.name = name

    def __repr__(self):
        return f'DiscreteCocycle({self.name!r}, d={self.dimension})'

    def step(self, n) -> np.ndarray:
        return _checked(self.step_operator(int(n)), self.dimension, f'step operator at n={n}')

    def shifted(self, m) -> 'DiscreteCocycle':
        return DiscreteCocycle(lambda n: self.step_operator(n + m), self.dimension,
                               self.base_point, f'{self.name} shifted by {m}')

    def perturbed(self, perturbation, name=None) -> 'DiscreteCocycle':
        return DiscreteCocycle(lambda n: self.step(n) + np.atleast_2d(perturbation(n)),
                               self.dimension, self.base_point, name or f'{self.name} + B')

    @classmethod
    def constant(cls, matrix, name='constant'):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float)).copy()
        return cls(lambda n: matrix, matrix.shape[0], name=name)

    @classmethod
    def periodic(cls, matrices, name='periodic'):
        stack = [np.atleast_2d(np.asarray(m, dtype=float)) for m in matrices]
        return cls(lambda n: stack[n % len(stack)], stack[0].shape[0], name=name)


def compose_discrete(c: DiscreteCocycle, n, start=0) -> np.ndarray:
    """phi(n, Theta_start omega_p) = A(start + n - 1) ... A(start)."""
    if n < 0:
        raise DomainError(f'composition length must be non-negative, got {n}')
    product = np.eye(c.dimension)
    for k in range(int(start), int(start) + int(n)):
        product = c.step(k) @ product
    return product


def rk4(field, t0, t1, y0, step=DEFAULT_STEP, record=False):
    """Classical fixed-step Runge-Kutta; ``y0`` may be a vector or a matrix.

    The span is cut into ceil((t1 - t0) / step) equal steps. With
    ``record`` the states at every step are returned as well.
    """
    y = np.array(y0, dtype=float)
    span = t1 - t0
    if span < 0:
        raise DomainError(f'integration runs forward only, got [{t0}, {t1}]')
    if span == 0:
        return (y, y[np.newaxis].copy()) if record else y

    n = max(1, math.ceil(span / step - 1e-9))
    dt = span / n
    states = [y] if record else None
    for i in range(n):
        t = t0 + i * dt
        k1 = field(t, y)
        k2 = field(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = field(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = field(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record:
            states.append(y)
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f'non-finite state after integrating over [{t0}, {t1}]')
    return (y, np.array(states)) if record else y


class ContinuousCocycle:
    """x' = generator(t) x along a fixed base point.

    ``generator(t)`` already includes the noise term at Theta_t omega_tau.
    Propagators are cached per (shift, duration).
    """

    def __init__(self, generator, dimension, step=DEFAULT_STEP, base_point=None,
                 name='continuous', notes=None):
        if not step > 0:
            raise DomainError(f'integrator step must be positive, got {step}')
        self.generator = generator
        self.dimension = int(dimension)
        self.step = float(step)
        self.base_point = base_point or BasePoint()
        self.name = name
        self.notes = dict(notes or {})
        self._propagators = {}

    def __repr__(self):
        return f'ContinuousCocycle({self.name!r}, d={self.dimension}, step={self.step:g})'

    def matrix(self, t) -> np.ndarray:
        return _checked(self.generator(t), self.dimension, f'generator at t={t}')

    def field(self, t, x):
        return self.matrix(t) @ x

    def perturbed(self, perturbation, name=None) -> 'ContinuousCocycle':
        return ContinuousCocycle(lambda t: self.matrix(t) + np.atleast_2d(perturbation(t)),
                                 self.dimension, self.step, self.base_point,
                                 name or f'{self.name} + B')

    @classmethod
    def constant(cls, matrix, step=DEFAULT_STEP, name='autonomous'):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float)).copy()
        return cls(lambda t: matrix, matrix.shape[0], step=step, name=name)


Cocycle = Union[DiscreteCocycle, ContinuousCocycle]


def integrate(c: ContinuousCocycle, t0, t1, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[0] != c.dimension:
        raise DomainError(f'initial state has {x0.shape[0]} components, expected {c.dimension}')
    return rk4(c.field, t0, t1, x0, c.step)


def propagator(c: ContinuousCocycle, s, t) -> np.ndarray:
    """phi(t, Theta_s omega_tau), integrated column by column from the identity."""
    if t < 0:
        raise DomainError(f'propagator duration must be non-negative, got {t}')
    if t == 0:
        return np.eye(c.dimension)
    key = (round(float(s), 12), round(float(t), 12))
    cached = c._propagators.get(key)
    if cached is None:
        if len(c._propagators) >= _CACHE_LIMIT:
            c._propagators.clear()
        cached = rk4(c.field, s, s + t, np.eye(c.dimension), c.step)
        cached.setflags(write=False)
        c._propagators[key] = cached
    return cached


def flow(c: Cocycle, s, t) -> np.ndarray:
    """phi(t, Theta_s omega_p) for either kind of cocycle."""
    if isinstance(c, DiscreteCocycle):
        if int(s) != s or int(t) != t:
            raise DomainError(f'discrete flow needs integer times, got s={s}, t={t}')
        return compose_discrete(c, int(t), start=int(s))
    return propagator(c, s, t)


@dataclass(frozen=True)
class EvolutionProcessView:
    """phi_{t,s}(omega_p) = phi(t - s, Theta_s omega_p) for t >= s."""
    cocycle: object
    base_shift: float = 0

    def __call__(self, t, s) -> np.ndarray:
        if t < s:
            raise DomainError(f'evolution process is defined for t >= s, got t={t}, s={s}')
        return flow(self.cocycle, self.base_shift + s, t - s)


def discretize(c: ContinuousCocycle) -> DiscreteCocycle:
    """The time-one maps phi_n = phi(1, Theta_n omega_p)."""
    return DiscreteCocycle(lambda n: propagator(c, float(n), 1.0), c.dimension,
                           c.base_point, f'{c.name} at integer times')


def one_step_bound(c: ContinuousCocycle, window: TimeGrid, samples_per_unit=SAMPLES_PER_UNIT,
                   alpha=0.0) -> float:
    """Sampled sup of ||phi(t, Theta_s)|| e^{alpha t} over integer s in window, t in [0, 1].

    With alpha = 0 this is L(omega_p); with the dichotomy exponent it is the
    lift factor. The value is a lower bound of the true supremum.
    """
    shifts = np.arange(math.ceil(window.t_min), math.floor(window.t_max - 1.0) + 1)
    if shifts.size == 0:
        shifts = np.array([math.floor(window.t_min)])
    step = min(c.step, 1.0 / samples_per_unit)
    best = 0.0
    for s in shifts:
        _, states = rk4(c.field, float(s), float(s) + 1.0, np.eye(c.dimension), step, record=True)
        weights = np.exp(alpha * np.linspace(0.0, 1.0, len(states)))
        best = max(best, float(np.max(np.linalg.norm(states, ord=2, axis=(1, 2)) * weights)))
    logger.debug('one-step bound of %s over %d shifts (alpha=%g): %.6g',
                 c.name, shifts.size, alpha, best)
    return best


def cocycle_law_residual(c: Cocycle, s, t, base=0.0) -> float:
    """||phi(t + s, Theta_base) - phi(t, Theta_{base+s}) phi(s, Theta_base)||."""
    whole = flow(c, base, s + t)
    split = flow(c, base + s, t) @ flow(c, base, s)
    return op_norm(whole - split)
