"""Two-sided Wiener paths, Wiener shifts and the pathwise Ornstein-Uhlenbeck value.

A path is stored on a uniform grid that contains t = 0 exactly. The forward
and backward half-lines are sampled from t = 0 outward by two independent
streams spawned from the path seed, so widening the grid never changes the
values on nodes that were already there.

The stationary Ornstein-Uhlenbeck value of a shifted path is

    z*(theta_t omega) = -int_{-inf}^0 e^s (omega(t + s) - omega(t)) ds,

evaluated by the trapezoid rule and truncated at the left edge of the
stored window once the neglected tail is provably below ``tail_tol``.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import lfilter

from .exceptions import ConfigurationError, DomainError, WindowError

logger = logging.getLogger(__name__)

DEFAULT_TAIL_TOL = 1e-10
_GRID_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    t_min: float
    t_max: float
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError(f'grid step must be positive, got {self.h}', field='h')
        if not self.t_min < 0 < self.t_max:
            raise ConfigurationError(
                f'grid must satisfy t_min < 0 < t_max, got [{self.t_min}, {self.t_max}]',
                field='t_min',
            )
        for name in ('t_min', 't_max'):
            ratio = getattr(self, name) / self.h
            if abs(ratio - round(ratio)) > _GRID_TOL * max(1.0, abs(ratio)):
                raise ConfigurationError(
                    f'{name}={getattr(self, name)} is not a multiple of h={self.h}', field=name
                )

    @property
    def i_min(self) -> int:
        return int(round(self.t_min / self.h))

    @property
    def i_max(self) -> int:
        return int(round(self.t_max / self.h))

    @property
    def size(self) -> int:
        return self.i_max - self.i_min + 1

    @property
    def origin(self) -> int:
        """Array index of t = 0."""
        return -self.i_min

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.i_min, self.i_max + 1) * self.h

    def steps(self, t) -> int:
        ratio = t / self.h
        k = int(round(ratio))
        if abs(ratio - k) > _GRID_TOL * max(1.0, abs(ratio)):
            raise DomainError(f't={t} is not a multiple of h={self.h}')
        return k

    def index(self, t) -> int:
        k = self.steps(t)
        if not self.i_min <= k <= self.i_max:
            raise WindowError(f't={t} lies outside [{self.t_min}, {self.t_max}]')
        return k - self.i_min

    def contains(self, other: 'TimeGrid') -> bool:
        return (other.t_min >= self.t_min - _GRID_TOL * self.h
                and other.t_max <= self.t_max + _GRID_TOL * self.h)

    def stride_to(self, other: 'TimeGrid') -> int:
        """How many of our steps make one step of ``other``."""
        ratio = other.h / self.h
        stride = int(round(ratio))
        if stride < 1 or abs(ratio - stride) > _GRID_TOL * ratio:
            raise ConfigurationError(
                f'window step {other.h} is not a multiple of the path step {self.h}', field='h'
            )
        return stride


def _wiener_segment(lo: int, hi: int, h: float, seed: int) -> np.ndarray:
    forward_seq, backward_seq = np.random.SeedSequence(seed).spawn(2)
    scale = math.sqrt(h)
    n_forward, n_backward = max(hi, 0), max(-lo, 0)
    forward = np.cumsum(np.random.default_rng(forward_seq).standard_normal(n_forward)) * scale
    backward = np.cumsum(np.random.default_rng(backward_seq).standard_normal(n_backward)) * scale
    full = np.concatenate((backward[::-1], [0.0], forward))
    return full[lo + n_backward:hi + n_backward + 1]


def _function_segment(lo: int, hi: int, h: float, fn) -> np.ndarray:
    return np.asarray(fn(np.arange(lo, hi + 1) * h), dtype=float)


def _shifted_segment(lo: int, hi: int, source, offset: int) -> np.ndarray:
    anchor = source(offset, offset)[0]
    return source(lo + offset, hi + offset) - anchor


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A realization of omega on ``grid``.

    ``source(lo, hi)`` regenerates the values on grid indices lo..hi and is
    what window extension uses; the stored values are read-only.
    """
    grid: TimeGrid
    values: np.ndarray
    seed: Optional[int] = None
    kind: str = 'wiener'
    extended: bool = False
    source: Optional[Callable[[int, int], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ConfigurationError(
                f'path has {values.shape} values for a grid of {self.grid.size} nodes'
            )
        if values[self.grid.origin] != 0.0:
            raise DomainError('sample path must vanish at t = 0')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def at(self, t) -> float:
        return float(self.values[self.grid.index(t)])


def sample_wiener_path(grid: TimeGrid, seed: int) -> SamplePath:
    if seed is None or int(seed) < 0:
        raise ConfigurationError(f'seed must be a non-negative integer, got {seed}', field='seed')
    seed = int(seed)
    source = partial(_wiener_segment, h=grid.h, seed=seed)
    return SamplePath(grid, source(grid.i_min, grid.i_max), seed=seed, kind='wiener', source=source)


def path_from_function(grid: TimeGrid, fn, kind='function') -> SamplePath:
    """Inject a deterministic path; ``fn`` must be vectorized and vanish at 0."""
    if float(np.asarray(fn(np.zeros(1)))[0]) != 0.0:
        raise DomainError('injected path must satisfy fn(0) = 0')
    source = partial(_function_segment, h=grid.h, fn=fn)
    return SamplePath(grid, source(grid.i_min, grid.i_max), kind=kind, source=source)


def zero_path(grid: TimeGrid) -> SamplePath:
    return path_from_function(grid, np.zeros_like, kind='zero')


def linear_path(grid: TimeGrid, slope=1.0) -> SamplePath:
    return path_from_function(grid, lambda s: slope * s, kind='linear')


def extend_path(path: SamplePath, t_min, t_max) -> SamplePath:
    """Regenerate ``path`` on a wider window; common nodes keep their values."""
    if path.source is None:
        raise WindowError('path has no source to extend from')
    grid = TimeGrid(min(t_min, path.grid.t_min), max(t_max, path.grid.t_max), path.grid.h)
    logger.debug('extending %s path to [%g, %g]', path.kind, grid.t_min, grid.t_max)
    return SamplePath(grid, path.source(grid.i_min, grid.i_max), seed=path.seed,
                      kind=path.kind, extended=True, source=path.source)


def shift_path(path: SamplePath, t, window: Optional[TimeGrid] = None, extend=False) -> SamplePath:
    """Wiener shift: (theta_t omega)(s) = omega(t + s) - omega(t) on ``window``.

    Without ``window`` the result lives on the stored window translated by -t.
    """
    grid = path.grid
    k = grid.steps(t)
    if window is None:
        if not grid.i_min < k < grid.i_max:
            raise WindowError(f'shift by {t} leaves no window around 0; pass an explicit window')
        window = TimeGrid(grid.t_min - k * grid.h, grid.t_max - k * grid.h, grid.h)
    elif grid.stride_to(window) != 1:
        raise ConfigurationError('shift window must use the path step', field='h')

    lo, hi = k + window.i_min, k + window.i_max
    extended = path.extended
    if lo < grid.i_min or hi > grid.i_max:
        missing = max(grid.i_min - lo, hi - grid.i_max, 0) * grid.h
        if not extend:
            raise WindowError(f'shift by {t} reads outside the stored window', required_extension=missing)
        path = extend_path(path, lo * grid.h, hi * grid.h)
        grid = path.grid
        extended = True

    base = path.values
    anchor = base[k - grid.i_min]
    values = base[lo - grid.i_min:hi - grid.i_min + 1] - anchor
    source = None
    if path.source is not None:
        source = partial(_shifted_segment, source=path.source, offset=k)
    return SamplePath(window, values, seed=path.seed, kind=path.kind,
                      extended=extended, source=source)


def _tail_bound(length, envelope):
    # int_{-inf}^{-length} e^s (|s| + envelope) ds
    return math.exp(-length) * (length + 1.0 + envelope)


def _check_tail(length, envelope, tail_tol):
    if _tail_bound(length, envelope) < tail_tol:
        return
    needed = length
    while _tail_bound(needed, envelope) >= tail_tol:
        needed += 1.0
    raise WindowError(
        f'left window of length {length:g} leaves an Ornstein-Uhlenbeck tail above {tail_tol:g}',
        required_extension=math.ceil(needed - length),
    )


def ou_value(path: SamplePath, t, tail_tol=DEFAULT_TAIL_TOL) -> float:
    """z*(theta_t omega) by trapezoid quadrature; error O(h^2) + tail_tol."""
    if not tail_tol > 0:
        raise DomainError(f'tail_tol must be positive, got {tail_tol}')
    grid = path.grid
    k = grid.index(t)
    segment = path.values[:k + 1] - path.values[k]
    _check_tail(k * grid.h, float(np.max(np.abs(segment))), tail_tol)
    s = np.arange(-k, 1) * grid.h
    return -float(trapezoid(np.exp(s) * segment, dx=grid.h))


def ou_series(path: SamplePath, start=None, stop=None, tail_tol=DEFAULT_TAIL_TOL):
    """z*(theta_t omega) at every node t in [start, stop].

    Uses the recursion Z_{k+1} = e^{-h} Z_k + h/2 (e^{-h} omega_k + omega_{k+1})
    for the running weighted integral, which reproduces ``ou_value`` node by
    node. ``start`` defaults to the first node with an acceptable tail.
    """
    grid = path.grid
    h = grid.h
    w = path.values
    n = grid.size
    decay = math.exp(-h)

    forcing = np.zeros(n)
    forcing[1:] = 0.5 * h * (decay * w[:-1] + w[1:])
    running = lfilter([1.0], [1.0, -decay], forcing)
    k = np.arange(n)
    weight_sum = h * (1.0 - decay ** (k + 1)) / (1.0 - decay) - 0.5 * h * (1.0 + decay ** k)
    z = weight_sum * w - running

    envelope = np.maximum(np.maximum.accumulate(w) - w, w - np.minimum.accumulate(w))
    length = k * h
    tail = np.exp(-length) * (length + 1.0 + envelope)
    valid = tail < tail_tol

    first = grid.index(start) if start is not None else int(np.argmax(valid))
    last = grid.index(stop) if stop is not None else n - 1
    if not valid[first]:
        _check_tail(length[first], envelope[first], tail_tol)
    if first > last:
        raise WindowError(f'empty Ornstein-Uhlenbeck window [{start}, {stop}]')
    return grid.times[first:last + 1], z[first:last + 1]


def ou_interpolant(path: SamplePath, start=None, stop=None, tail_tol=DEFAULT_TAIL_TOL):
    """t -> z*(theta_t omega) by linear interpolation of ``ou_series``.

    Integrators evaluate between grid nodes; times outside the computed
    range raise WindowError.
    """
    times, z = ou_series(path, start, stop, tail_tol)
    lo, hi = float(times[0]), float(times[-1])

    def z_star(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < lo - _GRID_TOL) or np.any(t > hi + _GRID_TOL):
            below = lo - float(np.min(t))
            above = float(np.max(t)) - hi
            raise WindowError(f'noise requested outside [{lo:g}, {hi:g}]',
                              required_extension=max(below, above))
        return np.interp(t, times, z)

    return z_star


def ou_ensemble(grid: TimeGrid, seeds, t=0.0, tail_tol=DEFAULT_TAIL_TOL) -> np.ndarray:
    return np.array([ou_value(sample_wiener_path(grid, s), t, tail_tol) for s in seeds])


def pathwise_ou_residual(path: SamplePath, start=None, stop=None, tail_tol=DEFAULT_TAIL_TOL) -> float:
    """Max of |dz/dt + z - d(omega)/dt| by forward differences; O(h) on smooth paths."""
    times, z = ou_series(path, start, stop, tail_tol)
    h = path.grid.h
    lo = path.grid.index(times[0])
    w = path.values[lo:lo + len(times)]
    residual = (z[1:] - z[:-1]) / h + z[:-1] - (w[1:] - w[:-1]) / h
    return float(np.max(np.abs(residual))) if residual.size else 0.0


@dataclass(frozen=True)
class KappaFn:
    """Positive time-rescaling kappa_t with its analytic derivative."""
    name: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        kappa = np.asarray(self.value(t), dtype=float)
        if np.any(kappa <= 0):
            raise DomainError(f'kappa must be positive, found {float(np.min(kappa))}')
        return kappa, np.asarray(self.derivative(t), dtype=float)

    def derivative_error(self, times, step=1e-6) -> float:
        t = np.asarray(times, dtype=float)
        numeric = (self.value(t + step) - self.value(t - step)) / (2 * step)
        return float(np.max(np.abs(numeric - self.derivative(t))))


def rational_kappa() -> KappaFn:
    return KappaFn(
        'rational',
        lambda t: 1.0 / (1.0 + t ** 2),
        lambda t: -2.0 * t / (1.0 + t ** 2) ** 2,
    )


def constant_kappa(level=1.0) -> KappaFn:
    if not level > 0:
        raise DomainError(f'constant kappa must be positive, got {level}')
    return KappaFn(
        'constant',
        lambda t: np.full_like(t, level, dtype=float),
        lambda t: np.zeros_like(t, dtype=float),
    )


KAPPAS = {
    'rational': rational_kappa,
    'constant': constant_kappa,
}


def kappa_by_name(name) -> KappaFn:
    try:
        return KAPPAS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown kappa '{name}', expected one of {', '.join(KAPPAS)}", field='kappa'
        ) from None


@dataclass(frozen=True)
class NoiseBounds:
    m1: float
    m2: float
    window: TimeGrid

    def perturbation_sup(self, eta) -> float:
        """Window sup of |eta (kappa - kappa') z*|, the size of B_eta for scalar noise."""
        return eta * self.m2


def noise_bounds(path: SamplePath, kappa: KappaFn, window: TimeGrid, eta=0.0,
                 tail_tol=DEFAULT_TAIL_TOL) -> NoiseBounds:
    # eta only scales B_eta downstream; the bounds themselves are eta-free.
    stride = path.grid.stride_to(window)
    times, z = ou_series(path, window.t_min, window.t_max, tail_tol)
    times, z = times[::stride], z[::stride]
    k, k_dot = kappa(times)
    bounds = NoiseBounds(
        m1=float(np.max(np.abs(k * z))),
        m2=float(np.max(np.abs((k - k_dot) * z))),
        window=window,
    )
    logger.debug('noise bounds on [%g, %g]: m1=%.6g m2=%.6g (eta=%g)',
                 window.t_min, window.t_max, bounds.m1, bounds.m2, eta)
    return bounds


def sublinearity_report(path: SamplePath, checkpoints, tail_tol=DEFAULT_TAIL_TOL) -> list:
    report = []
    for t in checkpoints:
        if t == 0:
            raise DomainError('sublinearity checkpoints must be non-zero')
        report.append(abs(ou_value(path, t, tail_tol)) / abs(t))
    return report


def write_path_csv(path: SamplePath, stream):
    stream.write(f'# seed={path.seed}, h={path.grid.h!r}, kind={path.kind}\n')
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(['t', 'omega'])
    for t, w in zip(path.times, path.values):
        writer.writerow([repr(float(t)), repr(float(w))])


def read_path_csv(stream) -> SamplePath:
    header = stream.readline().lstrip('#').strip()
    meta = dict(part.strip().split('=', 1) for part in header.split(','))
    try:
        h = float(meta['h'])
    except (KeyError, ValueError):
        raise ConfigurationError('path CSV header must record h', line=1, field='h') from None
    seed = None if meta.get('seed', 'None') == 'None' else int(meta['seed'])

    reader = csv.reader(stream)
    if next(reader, None) != ['t', 'omega']:
        raise ConfigurationError("expected column header 't,omega'", line=2)
    rows = [(float(t), float(w)) for t, w in reader]
    times = np.array([r[0] for r in rows])
    grid = TimeGrid(times[0], times[-1], h)
    if len(times) != grid.size or np.max(np.abs(times - grid.times)) > _GRID_TOL * max(1.0, grid.t_max):
        raise ConfigurationError('path CSV times do not form a uniform grid', field='t')
    return SamplePath(grid, np.array([r[1] for r in rows]), seed=seed, kind='imported')
