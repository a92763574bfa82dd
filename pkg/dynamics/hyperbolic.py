"""Random hyperbolic solutions near a hyperbolic equilibrium.

For y' = B y + f_eta(Theta_t omega, y) with an equilibrium y0 of the
unperturbed field, the deviation phi = y - y0 solves phi' = A phi + g_eta
with A = B + f0'(y0). The bounded deviation is the fixed point of

    I(phi)(t) = int G_A(t, s) g_eta(s, phi(s)) ds,

discretized on a uniform grid as a discrete convolution with the sampled
Green kernel of the autonomous linearization.

Field callables are batched: ``f0(y)`` and ``f_eta(eta, t, y)`` take y
of shape (..., d) and t broadcasting against y.shape[:-1].
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import linalg
from scipy.signal import fftconvolve
from scipy.stats import qmc

from .cocycle import DEFAULT_STEP, ContinuousCocycle, op_norm, rk4
from .dichotomy import DichotomyCertificate, autonomous_certificate, spectral_projection
from .exceptions import (ContractionError, ConvergenceError, DomainError, DynamicsError,
                         IntegrationError, ThresholdError, WindowError)
from .noise import TimeGrid
from .robustness import robust_dichotomy_continuous

logger = logging.getLogger(__name__)

# each of the three smallness conditions gets a sixth of beta / M
THRESHOLD_SHARE = 1.0 / 6.0
BISECTION_STEPS = 16
CONTRACTION_LIMIT = 0.9
KERNEL_TOL = 1e-9
DIFF_STEP = 1e-5
CERTIFICATION_STEP = 0.25

CERTIFIED, BOUNDED, FAILED = 'certified', 'bounded', 'failed'


def _central_jacobian(fn, y):
    """Batched central differences with step 1e-5 (1 + ||y||)."""
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    step = DIFF_STEP * (1.0 + np.linalg.norm(y, axis=-1, keepdims=True))
    columns = []
    for j in range(d):
        offset = np.zeros(d)
        offset[j] = 1.0
        columns.append((fn(y + step * offset) - fn(y - step * offset)) / (2.0 * step))
    return np.stack(columns, axis=-1)


@dataclass(frozen=True)
class SemilinearProblem:
    linear: np.ndarray
    f0: Callable
    f_eta: Callable
    equilibrium: np.ndarray
    radius: float = 1.0
    f0_jacobian: Optional[Callable] = None
    f_eta_jacobian: Optional[Callable] = None
    name: str = 'semilinear'
    tol: float = 1e-9
    notes: dict = field(default_factory=dict)
    linearization: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        linear = np.atleast_2d(np.asarray(self.linear, dtype=float))
        equilibrium = np.atleast_1d(np.asarray(self.equilibrium, dtype=float))
        object.__setattr__(self, 'linear', linear)
        object.__setattr__(self, 'equilibrium', equilibrium)
        if not self.radius > 0:
            raise DomainError(f'neighborhood radius must be positive, got {self.radius}')
        residual = float(np.linalg.norm(linear @ equilibrium + self.f0(equilibrium)))
        if residual > self.tol:
            raise DomainError(f'{self.name}: equilibrium residual {residual:.3g} exceeds {self.tol:g}')
        linearization = linear + self.jacobian0(equilibrium)
        object.__setattr__(self, 'linearization', linearization)
        spectral_projection(linearization)

    @property
    def dimension(self):
        return self.linear.shape[0]

    def jacobian0(self, y):
        if self.f0_jacobian is not None:
            return np.asarray(self.f0_jacobian(y), dtype=float)
        return _central_jacobian(self.f0, y)

    def jacobian_eta(self, eta, t, y):
        if self.f_eta_jacobian is not None:
            return np.asarray(self.f_eta_jacobian(eta, t, y), dtype=float)
        return _central_jacobian(lambda v: self.f_eta(eta, t, v), y)

    def field(self, eta, t, y):
        return y @ self.linear.T + self.f_eta(eta, t, y)

    def deviation_forcing(self, eta, t, phi):
        """g_eta(t, phi) = f_eta(t, y0 + phi) - f0(y0) - f0'(y0) phi."""
        y0 = self.equilibrium
        j0 = self.jacobian0(y0)
        return self.f_eta(eta, t, y0 + phi) - self.f0(y0) - phi @ j0.T


def ball_samples(center, radius, count=256, seed=0):
    """Quasi-random cloud in the closed ball, plus its center and axis points.

    A scrambled Halton sequence on the cube is mapped radially onto the
    ball, so cube faces land on the sphere.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.shape[0]
    cube = 2.0 * qmc.Halton(d=d, scramble=True, seed=seed).random(count) - 1.0
    sup = np.max(np.abs(cube), axis=1, keepdims=True)
    euclid = np.linalg.norm(cube, axis=1, keepdims=True)
    scale = np.divide(sup, euclid, out=np.zeros_like(sup), where=euclid > 0)
    axes = np.vstack((np.eye(d), -np.eye(d)))
    points = np.vstack((np.zeros((1, d)), axes, cube * scale))
    return center + radius * points


def _sample_times(window: TimeGrid, max_times=257):
    times = window.times
    return times[::max(1, math.ceil(len(times) / max_times))]


def lambda_eta(p: SemilinearProblem, eta, window: TimeGrid, samples=256, max_times=257) -> float:
    """Sampled sup over (t, x in U) of ||f_eta - f0|| + ||(f_eta)_x - f0'||."""
    times = _sample_times(window, max_times)[:, None]
    x = ball_samples(p.equilibrium, p.radius, samples)[None]
    value = p.f_eta(eta, times, x) - p.f0(x)
    slope = p.jacobian_eta(eta, times, x) - p.jacobian0(x)
    if not (np.all(np.isfinite(value)) and np.all(np.isfinite(slope))):
        raise IntegrationError(f'{p.name}: non-finite field values at eta={eta}')
    total = np.linalg.norm(value, axis=-1) + np.linalg.norm(slope, ord=2, axis=(-2, -1))
    return float(np.max(total))


def rho_modulus(p: SemilinearProblem, eps, samples=256, center_only=False) -> float:
    """Sampled sup_x sup_{||h|| <= eps} ||f0(x + h) - f0(x) - f0'(x) h|| / ||h||."""
    if not 0 < eps <= p.radius / 2 + 1e-12:
        raise DomainError(f'rho modulus needs 0 < eps <= r_U / 2 = {p.radius / 2:g}, got {eps}')
    d = p.dimension
    if center_only:
        x = p.equilibrium[None]
    else:
        x = ball_samples(p.equilibrium, p.radius, samples)
    h = ball_samples(np.zeros(d), eps, samples, seed=1)[1:]
    h = h[np.linalg.norm(h, axis=1) > 0]
    h = np.vstack((h, eps * h / np.linalg.norm(h, axis=1, keepdims=True)))

    xs, hs = x[:, None, :], h[None, :, :]
    linear_part = (p.jacobian0(x)[:, None] @ hs[..., None])[..., 0]
    remainder = p.f0(xs + hs) - p.f0(xs) - linear_part
    quotient = np.linalg.norm(remainder, axis=-1) / np.linalg.norm(hs, axis=-1)
    return float(np.max(quotient))


def _lipschitz_gap(p: SemilinearProblem, eps, samples=256):
    """sup_{||h|| <= eps} ||f0'(y0 + h) - f0'(y0)||."""
    h = ball_samples(np.zeros(p.dimension), eps, samples, seed=2)
    jac = p.jacobian0(p.equilibrium + h) - p.jacobian0(p.equilibrium)[None]
    return float(np.max(np.linalg.norm(jac, ord=2, axis=(-2, -1))))


def _largest_passing(test, hi, steps=BISECTION_STEPS):
    if test(hi):
        return hi
    lo = 0.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if test(mid) else (lo, mid)
    return lo


@dataclass(frozen=True)
class EpsilonThresholds:
    eps1: float
    eps2: float
    eps0: float
    share: float

    def to_dict(self):
        return {'eps1': self.eps1, 'eps2': self.eps2, 'eps0': self.eps0, 'share': self.share}


def epsilon_zero(p: SemilinearProblem, M, beta, samples=256) -> EpsilonThresholds:
    """eps1 from the derivative gap, eps2 from the remainder at y0, eps0 = min(eps1, eps2 / 2)."""
    share = THRESHOLD_SHARE * beta / M
    top = p.radius / 2
    eps1 = _largest_passing(lambda e: e == 0 or _lipschitz_gap(p, e, samples) < share, top)
    eps2 = _largest_passing(lambda e: e == 0 or rho_modulus(p, e, samples, center_only=True) < share, top)
    thresholds = EpsilonThresholds(eps1=eps1, eps2=eps2, eps0=min(eps1, eps2 / 2), share=share)
    logger.info('%s: eps1=%.6g eps2=%.6g eps0=%.6g', p.name, eps1, eps2, thresholds.eps0)
    return thresholds


def eta_epsilon(eps, M, beta, lambda_curve, thresholds: EpsilonThresholds = None,
                eta_max=1.0) -> float:
    """Largest eta on a bisected grid with lambda_curve(eta) < eps beta / (6 M)."""
    if thresholds is not None and eps > thresholds.eps0:
        which = 'eps1' if eps > thresholds.eps1 else 'eps2'
        raise ThresholdError(f'eps={eps:.6g} exceeds eps0={thresholds.eps0:.6g} ({which} binds)',
                             which=which)
    target = THRESHOLD_SHARE * eps * beta / M
    eta = _largest_passing(lambda e: lambda_curve(e) < target, eta_max)
    if eta == 0:
        logger.warning('no eta in (0, %g] keeps lambda below %.3g; eta_eps = 0', eta_max, target)
    else:
        logger.info('eta_eps=%.6g for eps=%.6g', eta, eps)
    return eta


@dataclass(frozen=True)
class HyperbolicSolutionCertificate:
    times: np.ndarray
    trajectory: np.ndarray
    equilibrium: np.ndarray
    eta: float
    epsilon: float
    sup_distance: float
    fixed_point_residual: float
    iterations: int
    contraction_factor: float
    contamination: float
    status: str
    linearization_certificate: Optional[DichotomyCertificate] = None
    notes: dict = field(default_factory=dict)

    @property
    def interior(self):
        lo, hi = self.times[0] + self.contamination, self.times[-1] - self.contamination
        return (self.times >= lo - 1e-12) & (self.times <= hi + 1e-12)

    @property
    def deviation(self):
        return self.trajectory - self.equilibrium

    def at(self, t):
        """xi*(t) by linear interpolation; held constant past the window edges."""
        t = np.asarray(t, dtype=float)
        columns = [np.interp(t, self.times, self.trajectory[:, i]) for i in range(self.trajectory.shape[1])]
        return np.stack(columns, axis=-1)

    def to_dict(self, max_samples=257):
        stride = max(1, math.ceil(len(self.times) / max_samples))
        linearization = self.linearization_certificate
        return {
            'status': self.status,
            'eta': self.eta,
            'epsilon': self.epsilon,
            'sup_distance': self.sup_distance,
            'fixed_point_residual': self.fixed_point_residual,
            'iterations': self.iterations,
            'contraction_factor': self.contraction_factor,
            'contamination': self.contamination,
            'linearization': linearization.to_dict() if linearization is not None else None,
            'notes': dict(self.notes),
            'trajectory': {
                't': self.times[::stride].tolist(),
                'y': self.trajectory[::stride].tolist(),
            },
        }

    def write_csv(self, stream):
        d = self.trajectory.shape[1]
        stream.write(','.join(['t'] + [f'y{i}' for i in range(d)]) + '\n')
        for t, y in zip(self.times, self.trajectory):
            stream.write(','.join([repr(float(t))] + [repr(float(v)) for v in y]) + '\n')


def _kernel(cert: DichotomyCertificate, A, h, tol=KERNEL_TOL):
    """Sampled Green kernel K_j = G_A(jh) for |j| <= J, and the tail length J h."""
    M, beta = cert.bound, cert.exponent
    tail = max(h, math.log(2.0 * M / (beta * tol)) / beta)
    J = math.ceil(tail / h)
    d = A.shape[0]
    stable = cert.stable(0.0)
    unstable = np.eye(d) - stable
    forward, backward = linalg.expm(A * h), linalg.expm(-A * h)
    kernel = np.zeros((2 * J + 1, d, d))
    kernel[J] = 0.5 * (stable - unstable)
    power_f, power_b = stable.copy(), unstable.copy()
    for j in range(1, J + 1):
        power_f = forward @ power_f
        power_b = backward @ power_b
        kernel[J + j] = power_f
        kernel[J - j] = -power_b
    return kernel, J * h


def _apply_kernel(kernel, values, h):
    return h * fftconvolve(values[:, None, :], kernel, mode='same', axes=0).sum(axis=-1)


def find_hyperbolic_solution(p: SemilinearProblem, eta, window: TimeGrid, tol=1e-9, epsilon=None,
                             certificate: DichotomyCertificate = None, initial=None,
                             max_iterations=200, margin=0.1,
                             kernel_tol=KERNEL_TOL) -> HyperbolicSolutionCertificate:
    """Picard iteration of the Green-integral map on ``window``."""
    cert = certificate or autonomous_certificate(p.linearization, margin)
    M, beta = cert.bound, cert.exponent
    epsilon = p.radius / 2 if epsilon is None else epsilon
    times = window.times
    h = window.h
    kernel, contamination = _kernel(cert, p.linearization, h, kernel_tol)
    if 2 * contamination >= window.t_max - window.t_min:
        raise WindowError(f'window [{window.t_min}, {window.t_max}] has no interior beyond the kernel '
                          f'tail {contamination:.3g}',
                          required_extension=2 * contamination - (window.t_max - window.t_min) + h)

    # measured Lipschitz constant of g_eta on the eps-ball
    sample_t = _sample_times(window)[:, None]
    x = ball_samples(p.equilibrium, epsilon, 64)[None]
    slope = p.jacobian_eta(eta, sample_t, x) - p.jacobian0(p.equilibrium)
    lipschitz = float(np.max(np.linalg.norm(slope, ord=2, axis=(-2, -1))))
    kernel_mass = h * float(np.sum(np.linalg.norm(kernel, ord=2, axis=(1, 2))))
    factor = kernel_mass * lipschitz

    if eta == 0:
        # g_0(t, 0) = 0: the equilibrium itself is the fixed point
        phi = np.zeros((len(times), p.dimension))
        residual, iteration, self_map = 0.0, 0, True
        logger.debug('%s eta=0: equilibrium (contraction factor %.3g)', p.name, factor)
    else:
        if factor > CONTRACTION_LIMIT:
            raise ContractionError(f'{p.name}: contraction factor {factor:.4g} exceeds {CONTRACTION_LIMIT} '
                                   f'at eta={eta}', rho=factor, threshold=CONTRACTION_LIMIT)
        phi = np.zeros((len(times), p.dimension)) if initial is None else np.array(initial, dtype=float)
        image = _apply_kernel(kernel, p.deviation_forcing(eta, times, np.zeros_like(phi)), h)
        self_map = float(np.max(np.linalg.norm(image, axis=1))) <= (1.0 - factor) * epsilon

        for iteration in range(1, max_iterations + 1):
            image = _apply_kernel(kernel, p.deviation_forcing(eta, times, phi), h)
            if not np.all(np.isfinite(image)):
                raise IntegrationError(f'{p.name}: fixed-point iterate is not finite at eta={eta}')
            residual = float(np.max(np.linalg.norm(image - phi, axis=1)))
            phi = image
            logger.debug('%s eta=%g iteration %d residual %.3g', p.name, eta, iteration, residual)
            if residual <= tol:
                break
        else:
            raise ConvergenceError(f'{p.name}: no fixed point within {max_iterations} iterations at '
                                   f'eta={eta} (residual {residual:.3g})')

    interior = (times >= window.t_min + contamination) & (times <= window.t_max - contamination)
    distance = float(np.max(np.linalg.norm(phi[interior], axis=1)))
    status = BOUNDED if distance < epsilon or distance == 0.0 else FAILED
    if status == FAILED:
        logger.warning('%s: sup distance %.4g is not below eps=%.4g at eta=%g', p.name, distance, epsilon, eta)
    return HyperbolicSolutionCertificate(
        times=times,
        trajectory=p.equilibrium + phi,
        equilibrium=p.equilibrium,
        eta=eta,
        epsilon=epsilon,
        sup_distance=distance,
        fixed_point_residual=residual,
        iterations=iteration,
        contraction_factor=factor,
        contamination=contamination,
        status=status,
        notes={'M': M, 'beta': beta, 'lipschitz': lipschitz, 'kernel_mass': kernel_mass,
               'proof_factor': 2.0 * M / beta * lipschitz, 'distance_constant': 4.0 * M / beta,
               'self_map': self_map, 'exact_equilibrium': eta == 0},
    )


def linearize_along(p: SemilinearProblem, cert: HyperbolicSolutionCertificate,
                    step=DEFAULT_STEP) -> ContinuousCocycle:
    """x' = (A + B_eta(t)) x with B_eta = (f_eta)_y(t, xi*(t)) - f0'(y0)."""
    A = p.linearization
    j0 = p.jacobian0(p.equilibrium)
    eta = cert.eta

    def perturbation(t):
        return p.jacobian_eta(eta, np.asarray(t, dtype=float), cert.at(t)) - j0

    interior = cert.interior
    sampled = perturbation(cert.times[interior])
    sup = float(np.max(np.linalg.norm(sampled, ord=2, axis=(-2, -1)))) if sampled.size else 0.0
    return ContinuousCocycle(lambda t: A + perturbation(t), p.dimension, step=step,
                             name=f'{p.name} linearized at eta={eta:g}',
                             notes={'perturbation_sup': sup})


def certify_hyperbolic(p: SemilinearProblem, cert: HyperbolicSolutionCertificate, half_width=4.0,
                       tol=1e-10, margin=0.1, step=DEFAULT_STEP) -> HyperbolicSolutionCertificate:
    """Attach a dichotomy for the linearization; failures downgrade, never raise."""
    if cert.status == FAILED:
        return cert
    base_cert = autonomous_certificate(p.linearization, margin)
    base = ContinuousCocycle.constant(p.linearization, step=step, name=f'{p.name} at y0')
    linearized = linearize_along(p, cert, step)
    window = TimeGrid(-half_width, half_width, CERTIFICATION_STEP)
    notes = dict(cert.notes, perturbation_sup=linearized.notes['perturbation_sup'])
    try:
        dichotomy = robust_dichotomy_continuous(base, base_cert, linearized, window, tol)
    except DynamicsError as exc:
        logger.warning('%s: hyperbolicity unverified at eta=%g: %s', p.name, cert.eta, exc)
        notes['unverified'] = str(exc)
        if getattr(exc, 'threshold', None) is not None:
            notes['threshold'] = exc.threshold
        return replace(cert, status=BOUNDED, notes=notes)

    passed = dichotomy.verification is not None and dichotomy.verification.passed
    if not passed:
        notes['unverified'] = 'linearized dichotomy failed verification'
    status = CERTIFIED if passed else BOUNDED
    logger.info('%s eta=%g: %s (M=%.4g, alpha~=%.4g)', p.name, cert.eta, status,
                dichotomy.bound, dichotomy.exponent)
    return replace(cert, status=status, linearization_certificate=dichotomy, notes=notes)


def pullback_trajectory(p: SemilinearProblem, eta, t0, times, start=None, step=None) -> np.ndarray:
    """Integrate the full field forward from (t0, start) and sample at ``times``."""
    times = np.asarray(times, dtype=float)
    if times[0] < t0:
        raise DomainError(f'pullback start {t0} must precede the sampled times')
    y = p.equilibrium.copy() if start is None else np.asarray(start, dtype=float)
    step = step or (times[1] - times[0] if len(times) > 1 else DEFAULT_STEP)

    def field_at(t, v):
        return p.field(eta, t, v)

    _, states = rk4(field_at, t0, float(times[-1]), y, step, record=True)
    dt = (times[-1] - t0) / (len(states) - 1)
    index = np.rint((times - t0) / dt).astype(int)
    return states[index]


def global_solution_residual(p: SemilinearProblem, cert: HyperbolicSolutionCertificate,
                             span=1.0, samples=16, step=None) -> float:
    """max over sampled interior s of ||flow(s -> s + span) xi*(s) - xi*(s + span)||."""
    times = cert.times[cert.interior]
    starts = times[times <= times[-1] - span]
    if starts.size == 0:
        raise WindowError('interior window is shorter than the requested span', required_extension=span)
    starts = starts[::max(1, math.ceil(len(starts) / samples))]
    step = step or (cert.times[1] - cert.times[0])
    worst = 0.0
    for s in starts:
        end = rk4(lambda t, v: p.field(cert.eta, t, v), float(s), float(s) + span, cert.at(s), step)
        worst = max(worst, float(np.linalg.norm(end - cert.at(s + span))))
    return worst


def additive_model(signal, name='additive', radius=1.0) -> SemilinearProblem:
    """y' = -y + eta g(t) for a scalar signal g."""
    def f_eta(eta, t, y):
        return np.zeros_like(y) + eta * np.asarray(signal(t), dtype=float)[..., None]

    def zero_jacobian(*args):
        return np.zeros(np.shape(args[-1]) + (1,))

    return SemilinearProblem(
        linear=[[-1.0]],
        f0=np.zeros_like,
        f_eta=f_eta,
        equilibrium=[0.0],
        radius=radius,
        f0_jacobian=zero_jacobian,
        f_eta_jacobian=zero_jacobian,
        name=name,
    )


def cubic_model(signal, name='cubic', radius=1.0) -> SemilinearProblem:
    """y' = -y + y^3 + eta c(t) y."""
    def f_eta(eta, t, y):
        return y ** 3 + eta * np.asarray(signal(t), dtype=float)[..., None] * y

    def f_eta_jacobian(eta, t, y):
        return (3.0 * y ** 2 + eta * np.asarray(signal(t), dtype=float)[..., None])[..., None]

    return SemilinearProblem(
        linear=[[-1.0]],
        f0=lambda y: y ** 3,
        f_eta=f_eta,
        equilibrium=[0.0],
        radius=radius,
        f0_jacobian=lambda y: (3.0 * y ** 2)[..., None],
        f_eta_jacobian=f_eta_jacobian,
        name=name,
    )


def forced_cubic_model(signal, name='forced_cubic', radius=1.0) -> SemilinearProblem:
    """y' = -y + y^3 + eta c(t)."""
    def f_eta(eta, t, y):
        return y ** 3 + eta * np.asarray(signal(t), dtype=float)[..., None]

    def f_eta_jacobian(eta, t, y):
        return (3.0 * y ** 2)[..., None]

    return SemilinearProblem(
        linear=[[-1.0]],
        f0=lambda y: y ** 3,
        f_eta=f_eta,
        equilibrium=[0.0],
        radius=radius,
        f0_jacobian=lambda y: (3.0 * y ** 2)[..., None],
        f_eta_jacobian=f_eta_jacobian,
        name=name,
    )


MODELS = {
    'additive': additive_model,
    'cubic': cubic_model,
    'forced_cubic': forced_cubic_model,
}
