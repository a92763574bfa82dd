"""Robustness of exponential dichotomies under small perturbations.

The discrete pipeline measures the perturbation size against the base
certificate, recovers the perturbed projections from impulse responses,
evaluates the explicit perturbed constants and verifies the result. The
continuous pipeline discretizes at integer times, runs the discrete one
and lifts the certificate back to real times.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.integrate import cumulative_trapezoid

from .cocycle import (ContinuousCocycle, DiscreteCocycle, compose_discrete, discretize,
                      one_step_bound, op_norm, rk4)
from .dichotomy import (DichotomyCertificate, LiftedProjections, TabulatedProjections,
                        autonomous_certificate, verify_dichotomy)
from .exceptions import DomainError, RobustnessHypothesisError, WindowError
from .greens import impulse_projections
from .noise import TimeGrid

logger = logging.getLogger(__name__)

SAFETY = 0.9
DISCRETE_SLACK = 1.1
CONTINUOUS_SLACK = 1.2
RATE_SLACK = 0.05


def delta_threshold(alpha) -> float:
    """(1 - e^{-alpha}) / (1 + e^{-alpha}), the admissible size of K sup ||B||."""
    if not alpha > 0:
        raise DomainError(f'threshold needs a positive exponent, got {alpha}')
    q = math.exp(-alpha)
    return (1.0 - q) / (1.0 + q)


def gronwall_constants(a, delta, D=1.0):
    """Decay rates (a~, b~) of the discrete Gronwall inequality.

    a~ = -ln(cosh a - sqrt(cosh^2 a - 1 - 2 delta sinh a)),
    b~ = a~ + ln(1 + 2 delta D sinh a).
    """
    if not a > 0:
        raise DomainError(f'Gronwall rate must be positive, got {a}')
    if delta < 0:
        raise DomainError(f'delta must be non-negative, got {delta}')
    limit = delta_threshold(a) / D
    if not delta < limit:
        raise DomainError(f'Gronwall rates need delta < (1 - e^-a) / (D (1 + e^-a)) = {limit:.6g}, '
                          f'got {delta:.6g}')
    if delta == 0:
        return a, a
    radicand = math.cosh(a) ** 2 - 1.0 - 2.0 * delta * math.sinh(a)
    if radicand < 0:
        raise DomainError(f'Gronwall radicand is negative ({radicand:.3g})')
    a_tilde = -math.log(math.cosh(a) - math.sqrt(radicand))
    return a_tilde, a_tilde + math.log(1.0 + 2.0 * delta * D * math.sinh(a))


@dataclass(frozen=True)
class RobustConstants:
    delta: float
    rho: float
    alpha_tilde: float
    beta_tilde: float
    d1: float
    d2: float
    bound: float
    base_bound: float
    base_exponent: float
    threshold: float

    def to_dict(self):
        return {
            'delta': self.delta,
            'threshold': self.threshold,
            'rho': self.rho,
            'alpha_tilde': self.alpha_tilde,
            'beta_tilde': self.beta_tilde,
            'D1': self.d1,
            'D2': self.d2,
            'M': self.bound,
            'K': self.base_bound,
            'alpha': self.base_exponent,
        }


def robust_constants(K, alpha, delta) -> RobustConstants:
    """Perturbed dichotomy constants for a base (K, alpha) and perturbation size delta."""
    if not K >= 1:
        raise DomainError(f'base bound must be >= 1, got {K}')
    threshold = delta_threshold(alpha)
    if delta < 0:
        raise DomainError(f'delta must be non-negative, got {delta}')
    if not delta < threshold:
        raise RobustnessHypothesisError(
            f'delta {delta:.6g} is not below the threshold {threshold:.6g}',
            delta=delta, threshold=threshold,
        )
    q = math.exp(-alpha)
    rho = delta * (1.0 + q) / (1.0 - q)
    alpha_tilde, beta_tilde = gronwall_constants(alpha, delta)
    first = delta * q / (1.0 - math.exp(-alpha - alpha_tilde))
    second = delta * math.exp(-beta_tilde) / (1.0 - math.exp(-alpha - beta_tilde))
    if first >= 1 or second >= 1:
        raise DomainError(f'perturbed constants undefined for delta={delta:.6g}')
    d1, d2 = 1.0 / (1.0 - first), 1.0 / (1.0 - second)
    bound = K * (1.0 + delta / ((1.0 - rho) * (1.0 - q))) * max(d1, d2)
    return RobustConstants(
        delta=delta, rho=rho, alpha_tilde=alpha_tilde, beta_tilde=beta_tilde,
        d1=d1, d2=d2, bound=bound, base_bound=K, base_exponent=alpha, threshold=threshold,
    )


def constants_scan(K, alpha, deltas) -> list:
    """robust_constants over a delta grid, in the order given."""
    return [robust_constants(K, alpha, delta) for delta in deltas]


def _integer_nodes(window: TimeGrid):
    return list(range(math.ceil(window.t_min), math.floor(window.t_max) + 1))


def measured_delta(base: DiscreteCocycle, perturbed: DiscreteCocycle, K, window: TimeGrid) -> float:
    """Window sup of K ||psi(1, Theta_n) - phi(1, Theta_n)||."""
    return max(K * op_norm(perturbed.step(n) - base.step(n)) for n in _integer_nodes(window))


def robust_dichotomy_discrete(base: DiscreteCocycle, base_cert: DichotomyCertificate,
                              perturbed: DiscreteCocycle, window: TimeGrid, tol=1e-10,
                              slack=DISCRETE_SLACK, verify=True) -> DichotomyCertificate:
    if perturbed.dimension != base.dimension:
        raise DomainError('perturbed cocycle has a different dimension')
    K, alpha = base_cert.bound, base_cert.exponent
    threshold = delta_threshold(alpha)
    delta = measured_delta(base, perturbed, K, window)
    if delta > SAFETY * threshold:
        raise RobustnessHypothesisError(
            f'measured delta {delta:.6g} exceeds {SAFETY} x threshold {threshold:.6g}',
            delta=delta, threshold=threshold,
        )
    constants = robust_constants(K, alpha, delta)

    def perturbation(n):
        return perturbed.step(n) - base.step(n)

    nodes = _integer_nodes(window)
    table = impulse_projections(base, base_cert, perturbation, nodes, tol)
    cert = DichotomyCertificate(
        bound=constants.bound,
        exponent=constants.alpha_tilde,
        projections=TabulatedProjections({m: pair[0] for m, pair in table.items()}),
        discrete=True,
        constants=constants,
        notes={'delta_eff': delta, 'threshold': threshold, 'safety': SAFETY,
               'window': [window.t_min, window.t_max]},
    )
    logger.info('discrete robustness: delta_eff=%.4g (threshold %.4g) M=%.6g alpha~=%.6g',
                delta, threshold, constants.bound, constants.alpha_tilde)
    if verify:
        cert = cert.with_verification(verify_dichotomy(perturbed, cert, window, slack))
    return cert


def discretize_certificate(cert: DichotomyCertificate) -> DichotomyCertificate:
    """A continuous dichotomy restricted to integer times, same K and alpha."""
    if cert.discrete:
        return cert
    return DichotomyCertificate(
        bound=cert.bound, exponent=cert.exponent, projections=cert.projections,
        discrete=True, constants=cert.constants, notes=dict(cert.notes, discretized=True),
    )


def lift_certificate(cocycle: ContinuousCocycle, cert: DichotomyCertificate,
                     window: TimeGrid) -> DichotomyCertificate:
    """Continuous certificate from a discrete one on the time-one maps.

    The bound is M sup_{0<=t<=1} ||psi(t)|| e^{alpha~ t}; the factor with the
    base exponent, K sup ||psi(t)|| e^{alpha t}, is reported alongside.
    """
    nodes = _integer_nodes(window)
    table = TabulatedProjections({n: cert.stable(n) for n in nodes})
    factor = one_step_bound(cocycle, window, alpha=cert.exponent)
    notes = dict(cert.notes, lift_factor=factor, m_hat=cert.bound * factor)
    if cert.constants is not None:
        base_factor = one_step_bound(cocycle, window, alpha=cert.constants.base_exponent)
        notes['k_hat'] = cert.constants.base_bound * base_factor
    return DichotomyCertificate(
        bound=max(1.0, cert.bound * factor),
        exponent=cert.exponent,
        projections=LiftedProjections(cocycle, table),
        discrete=False,
        constants=cert.constants,
        notes=notes,
    )


def one_step_distance(base: ContinuousCocycle, perturbed: ContinuousCocycle, window: TimeGrid,
                      samples_per_unit=64) -> float:
    """Sampled sup of ||psi(t, Theta_n) - phi(t, Theta_n)|| over integer n, t in [0, 1]."""
    step = min(base.step, perturbed.step, 1.0 / samples_per_unit)
    shifts = _integer_nodes(window)[:-1] or [math.floor(window.t_min)]
    worst = 0.0
    for s in shifts:
        _, phi = rk4(base.field, float(s), s + 1.0, np.eye(base.dimension), step, record=True)
        _, psi = rk4(perturbed.field, float(s), s + 1.0, np.eye(base.dimension), step, record=True)
        worst = max(worst, float(np.max(np.linalg.norm(psi - phi, ord=2, axis=(1, 2)))))
    return worst


def robust_dichotomy_continuous(base: ContinuousCocycle, base_cert: DichotomyCertificate,
                                perturbed: ContinuousCocycle, window: TimeGrid, tol=1e-10,
                                slack=CONTINUOUS_SLACK, verify=True) -> DichotomyCertificate:
    K, alpha = base_cert.bound, base_cert.exponent
    threshold = delta_threshold(alpha)
    distance = one_step_distance(base, perturbed, window)
    if K * distance > SAFETY * threshold:
        raise RobustnessHypothesisError(
            f'one-step distance {distance:.6g} times K={K:g} exceeds {SAFETY} x threshold '
            f'{threshold:.6g}',
            delta=K * distance, threshold=threshold,
        )
    discrete = robust_dichotomy_discrete(discretize(base), discretize_certificate(base_cert),
                                         discretize(perturbed), window, tol, verify=False)
    cert = lift_certificate(perturbed, discrete, window)
    cert = DichotomyCertificate(
        bound=cert.bound, exponent=cert.exponent, projections=cert.projections,
        constants=cert.constants, notes=dict(cert.notes, one_step_distance=distance),
    )
    logger.info('continuous robustness: distance=%.4g M^=%.6g alpha~=%.6g',
                distance, cert.bound, cert.exponent)
    if verify:
        cert = cert.with_verification(verify_dichotomy(perturbed, cert, window, slack))
    return cert


@dataclass(frozen=True)
class PerturbationCheck:
    epsilon_measured: float
    epsilon_cutoff: float
    lipschitz: float
    bound: float
    exponent: float

    @property
    def satisfied(self):
        return self.epsilon_measured < self.epsilon_cutoff

    @property
    def verdict(self):
        return 'satisfied' if self.satisfied else 'hypothesis not satisfied'

    def to_dict(self):
        return {
            'epsilon_measured': self.epsilon_measured,
            'epsilon_cutoff': self.epsilon_cutoff,
            'lipschitz': self.lipschitz,
            'K': self.bound,
            'alpha': self.exponent,
            'verdict': self.verdict,
        }


def _epsilon_cutoff(K, lipschitz, threshold, steps=60):
    # largest eps with K eps L (L e^{L eps}) < SAFETY * threshold
    def fits(eps):
        return K * eps * lipschitz ** 2 * math.exp(lipschitz * eps) < SAFETY * threshold

    lo, hi = 0.0, 1.0
    while fits(hi):
        lo, hi = hi, 2 * hi
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if fits(mid) else (lo, mid)
    return lo


def linear_random_perturbation_check(A, perturbation, window: TimeGrid, samples_per_unit=64,
                                     margin=0.1) -> PerturbationCheck:
    """Integral smallness of B against the cutoff implied by the continuous threshold.

    ``perturbation(t)`` returns B(Theta_t omega_tau) as a d x d matrix.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    cert = autonomous_certificate(A, margin)
    d = A.shape[0]
    fractions = np.linspace(0.0, 1.0, samples_per_unit + 1)
    lipschitz = max(op_norm(linalg.expm(A * t)) for t in fractions)

    epsilon = 0.0
    for s in _integer_nodes(window)[:-1]:
        values = np.array([np.broadcast_to(np.asarray(perturbation(s + t), dtype=float), (d, d))
                           for t in fractions])
        integrals = cumulative_trapezoid(values, fractions, axis=0, initial=0.0)
        epsilon = max(epsilon, float(np.max(np.linalg.norm(integrals, ord=2, axis=(1, 2)))))

    check = PerturbationCheck(
        epsilon_measured=epsilon,
        epsilon_cutoff=_epsilon_cutoff(cert.bound, lipschitz, delta_threshold(cert.exponent)),
        lipschitz=lipschitz,
        bound=cert.bound,
        exponent=cert.exponent,
    )
    logger.info('integral perturbation check: eps=%.4g cutoff=%.4g (%s)',
                check.epsilon_measured, check.epsilon_cutoff, check.verdict)
    return check


def power_iteration_projection(cocycle: DiscreteCocycle, node, steps=64) -> np.ndarray:
    """Stable projection at ``node`` from long products, independent of any certificate.

    The unstable range is the dominant subspace of forward products arriving
    at ``node``; the stable range is the dominant subspace of inverse
    products run back to ``node``. Both are tracked by QR re-orthonormalization.
    """
    d = cocycle.dimension
    node = int(node)
    q = np.eye(d)
    growth = np.zeros(d)
    for n in range(node - steps, node):
        q, r = np.linalg.qr(cocycle.step(n) @ q)
        growth += np.log(np.abs(np.diag(r)))
    unstable_dim = int(np.sum(growth > 0))
    unstable_basis = q[:, :unstable_dim]

    q = np.eye(d)
    for n in range(node + steps - 1, node - 1, -1):
        q, _ = np.linalg.qr(np.linalg.solve(cocycle.step(n), q))
    stable_basis = q[:, :d - unstable_dim]

    frame = np.hstack((stable_basis, unstable_basis))
    selector = np.diag([1.0] * (d - unstable_dim) + [0.0] * unstable_dim)
    return frame @ selector @ np.linalg.inv(frame)


def projection_transport_residual(cocycle: DiscreteCocycle, cert: DichotomyCertificate, nodes) -> float:
    """max over nodes m of ||Pi(m + 1) psi(m) - psi(m) Pi(m)||."""
    worst = 0.0
    for m in nodes:
        try:
            later = cert.stable(int(m) + 1)
        except WindowError:
            continue
        step = cocycle.step(int(m))
        worst = max(worst, op_norm(later @ step - step @ cert.stable(int(m))))
    return worst


@dataclass(frozen=True)
class DecompositionDiagnostics:
    forward_rate: float
    backward_rate: float
    alpha_tilde: float
    beta_tilde: float

    @property
    def passed(self):
        forward_ok = math.isnan(self.forward_rate) or self.forward_rate >= (1 - RATE_SLACK) * self.alpha_tilde
        backward_ok = math.isnan(self.backward_rate) or self.backward_rate >= (1 - RATE_SLACK) * self.beta_tilde
        return forward_ok and backward_ok

    def to_dict(self):
        return {
            'forward_rate': self.forward_rate,
            'backward_rate': self.backward_rate,
            'alpha_tilde': self.alpha_tilde,
            'beta_tilde': self.beta_tilde,
            'passed': self.passed,
        }


def _fitted_rate(norms):
    """Decay rate of a norm sequence by log-linear least squares."""
    norms = np.asarray(norms)
    keep = norms > 1e-300
    if np.count_nonzero(keep) < 2:
        return math.inf
    slope, _ = np.polyfit(np.arange(len(norms))[keep], np.log(norms[keep]), 1)
    return -float(slope)


def decomposition_diagnostics(cocycle: DiscreteCocycle, cert: DichotomyCertificate, node,
                              horizon=24) -> DecompositionDiagnostics:
    """Decay fits for the columns of Pi^s (forward) and Pi^u (backward) at ``node``.

    Backward orbits stay on the unstable ranges by re-projecting at every
    node, so they are limited to nodes where the certificate has projections.
    """
    node = int(node)
    constants = cert.constants
    alpha_tilde = constants.alpha_tilde if constants is not None else cert.exponent
    beta_tilde = constants.beta_tilde if constants is not None else cert.exponent

    forward_rates = []
    stable = cert.stable(node)
    for column in stable.T:
        if np.linalg.norm(column) < 1e-12:
            continue
        norms = [np.linalg.norm(compose_discrete(cocycle, k, node) @ column) for k in range(horizon + 1)]
        forward_rates.append(_fitted_rate(norms))

    backward_rates = []
    unstable = cert.unstable(node)
    for column in unstable.T:
        if np.linalg.norm(column) < 1e-12:
            continue
        norms, x = [np.linalg.norm(column)], column
        for k in range(1, horizon + 1):
            try:
                projection = cert.unstable(node - k)
            except WindowError:
                break
            x = projection @ np.linalg.solve(cocycle.step(node - k), x)
            norms.append(np.linalg.norm(x))
        backward_rates.append(_fitted_rate(norms))

    return DecompositionDiagnostics(
        forward_rate=min(forward_rates) if forward_rates else math.nan,
        backward_rate=min(backward_rates) if backward_rates else math.nan,
        alpha_tilde=alpha_tilde,
        beta_tilde=beta_tilde,
    )
