"""Exponential dichotomy certificates, their numerical verification, Green kernels.

A certificate bundles a projection family Pi^s, a bound K >= 1 and an
exponent alpha > 0. ``verify_dichotomy`` checks the four defining
properties on a window: invariance of the splitting, forward decay on
the stable range, backward decay of the restricted inverse on the
unstable range, and invertibility of the flow between unstable ranges.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import linalg

from .cocycle import DiscreteCocycle, flow, op_norm, propagator
from .exceptions import DomainError, IsomorphismError, NonHyperbolicError, WindowError
from .noise import TimeGrid

logger = logging.getLogger(__name__)

GAP_TOL = 1e-8
DEFAULT_MARGIN = 0.1
CONDITION_LIMIT = 1e12
DISCRETE_LAGS = (1, 2, 3, 4, 6, 8)
CONTINUOUS_LAGS = (0.25, 0.5, 1.0, 2.0, 3.0)


def _split_projector(matrix, sort):
    """Projector onto the leading Schur block along the trailing one."""
    n = matrix.shape[0]
    t, z, k = linalg.schur(matrix, output='real', sort=sort)
    if k == 0:
        return np.zeros((n, n)), 0
    if k == n:
        return np.eye(n), n
    coupling = linalg.solve_sylvester(t[:k, :k], -t[k:, k:], t[:k, k:])
    block = np.zeros((n, n))
    block[:k, :k] = np.eye(k)
    block[:k, k:] = coupling
    return z @ block @ z.T, k


def spectral_projection(A, gap_tol=GAP_TOL):
    """Pi^u onto generalized eigenvectors with Re(lambda) > 0, and the spectral gap.

    Real Schur form ordered by the sign of the real part, then a Sylvester
    solve decouples the two invariant subspaces.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    gap = float(np.min(np.abs(np.linalg.eigvals(A).real)))
    if gap < gap_tol:
        raise NonHyperbolicError(
            f'eigenvalue within {gap:.3g} of the imaginary axis (tolerance {gap_tol:g})', gap=gap
        )
    unstable, _ = _split_projector(A, 'rhp')
    return unstable, gap


def riesz_projection(A, center, radius, nodes=512):
    """(1/2 pi i) times the contour integral of (lambda - A)^{-1} over a circle."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    total = np.zeros((n, n), dtype=complex)
    for theta in 2 * np.pi * np.arange(nodes) / nodes:
        offset = radius * np.exp(1j * theta)
        total += offset * np.linalg.inv((center + offset) * np.eye(n) - A)
    return (total / nodes).real


class ProjectionFamily:
    """Stable projections Pi^s along the base orbit; Pi^u = Id - Pi^s."""

    def stable(self, t) -> np.ndarray:
        raise NotImplementedError

    def unstable(self, t) -> np.ndarray:
        stable = self.stable(t)
        return np.eye(stable.shape[0]) - stable

    @property
    def span(self):
        """Closed interval of times where ``stable`` is defined."""
        return -math.inf, math.inf


class ConstantProjections(ProjectionFamily):
    def __init__(self, stable):
        self.matrix = np.atleast_2d(np.asarray(stable, dtype=float)).copy()
        self.matrix.setflags(write=False)

    def stable(self, t):
        return self.matrix


class TabulatedProjections(ProjectionFamily):
    """Projections known at integer nodes only."""

    def __init__(self, table):
        self.table = {int(n): np.asarray(p, dtype=float) for n, p in table.items()}
        if not self.table:
            raise DomainError('projection table is empty')

    @property
    def span(self):
        return min(self.table), max(self.table)

    def stable(self, t):
        n = int(round(t))
        if abs(t - n) > 1e-9:
            raise DomainError(f'tabulated projections exist at integer nodes only, got {t}')
        try:
            return self.table[n]
        except KeyError:
            lo, hi = self.span
            raise WindowError(f'no projection at node {n}; table covers [{lo}, {hi}]') from None


class LiftedProjections(ProjectionFamily):
    """Pi(t) = psi(t - n, Theta_n) Pi(n) psi(t - n, Theta_n)^{-1} with n = floor(t)."""

    def __init__(self, cocycle, nodes: TabulatedProjections):
        self.cocycle = cocycle
        self.nodes = nodes

    @property
    def span(self):
        return self.nodes.span

    def stable(self, t):
        n = math.floor(t + 1e-9)
        rest = t - n
        base = self.nodes.stable(n)
        if rest <= 1e-9:
            return base
        phi = propagator(self.cocycle, float(n), rest)
        return np.linalg.solve(phi.T, (phi @ base).T).T


@dataclass(frozen=True)
class DichotomyCertificate:
    bound: float
    exponent: float
    projections: ProjectionFamily
    discrete: bool = False
    constants: object = None
    verification: Optional['VerificationReport'] = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.bound >= 1:
            raise DomainError(f'dichotomy bound must be >= 1, got {self.bound}')
        if not self.exponent > 0:
            raise DomainError(f'dichotomy exponent must be positive, got {self.exponent}')

    def stable(self, t):
        return self.projections.stable(t)

    def unstable(self, t):
        return self.projections.unstable(t)

    def with_verification(self, report):
        return replace(self, verification=report)

    def to_dict(self):
        return {
            'kind': 'discrete' if self.discrete else 'continuous',
            'bound': self.bound,
            'exponent': self.exponent,
            'constants': self.constants.to_dict() if self.constants is not None else None,
            'verification': self.verification.to_dict() if self.verification is not None else None,
            'notes': dict(self.notes),
        }


def _ceil_significant(value, digits=3):
    if value <= 1.0:
        return 1.0
    exponent = math.floor(math.log10(value))
    shift = digits - 1 - exponent
    if shift >= 0:
        return max(1.0, math.ceil(value * 10 ** shift * (1 - 1e-9)) / 10 ** shift)
    return max(1.0, math.ceil(value / 10 ** -shift * (1 - 1e-9)) * 10 ** -shift)


def _scan_bound(forward, backward, stable, unstable, rate, steps, exponent_step):
    """max over n <= steps of ||F^n Pi^s|| e^{rate n} and ||B^n Pi^u|| e^{rate n}.

    Each power is re-projected so rounding cannot leak into the other range.
    """
    v, w = stable.copy(), unstable.copy()
    best = max(op_norm(v), op_norm(w))
    for n in range(1, steps + 1):
        v = stable @ (forward @ v)
        w = unstable @ (backward @ w)
        weight = math.exp(rate * n * exponent_step)
        best = max(best, op_norm(v) * weight, op_norm(w) * weight)
    return best


def autonomous_certificate(A, margin=DEFAULT_MARGIN, gap_tol=GAP_TOL) -> DichotomyCertificate:
    """Certificate for x' = A x: beta = gap (1 - margin), M from a dense scan."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    unstable, gap = spectral_projection(A, gap_tol)
    stable = np.eye(n) - unstable
    beta = gap * (1.0 - margin)

    radius = float(np.max(np.abs(np.linalg.eigvals(A))))
    scan_step = min(1.0 / 16, 0.5 / max(1.0, radius))
    horizon = 30.0 / (gap * max(margin, DEFAULT_MARGIN))
    steps = math.ceil(horizon / scan_step)
    measured = _scan_bound(linalg.expm(A * scan_step), linalg.expm(-A * scan_step), stable,
                           unstable, beta, steps, scan_step)
    bound = _ceil_significant(measured)
    logger.info('autonomous certificate: gap=%.6g beta=%.6g M=%.6g (scan %d steps of %.4g)',
                gap, beta, bound, steps, scan_step)
    return DichotomyCertificate(
        bound=bound,
        exponent=beta,
        projections=ConstantProjections(np.eye(n) - unstable),
        notes={'gap': gap, 'margin': margin, 'scan_step': scan_step, 'scan_horizon': horizon,
               'scan_max': measured},
    )


def discrete_autonomous_certificate(A, margin=DEFAULT_MARGIN, gap_tol=GAP_TOL) -> DichotomyCertificate:
    """Certificate for x_{n+1} = A x_n split by |lambda| against 1."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    moduli = np.abs(np.linalg.eigvals(A))
    with np.errstate(divide='ignore'):
        logs = np.abs(np.log(moduli))
    gap = float(np.min(logs))
    if gap < gap_tol:
        raise NonHyperbolicError(f'eigenvalue modulus within {gap:.3g} of the unit circle', gap=gap)
    alpha = gap * (1.0 - margin)

    unstable, k = _split_projector(A, 'ouc')
    stable = np.eye(n) - unstable
    inverse = np.zeros_like(A)
    if k:
        t, z, _ = linalg.schur(A, output='real', sort='ouc')
        basis = z[:, :k]
        inverse = basis @ np.linalg.inv(t[:k, :k]) @ basis.T @ unstable
    steps = math.ceil(30.0 / (gap * max(margin, DEFAULT_MARGIN)))
    measured = _scan_bound(A, inverse, stable, unstable, alpha, steps, 1.0)
    bound = _ceil_significant(measured)
    logger.info('discrete certificate: gap=%.6g alpha=%.6g K=%.6g', gap, alpha, bound)
    return DichotomyCertificate(
        bound=bound,
        exponent=alpha,
        projections=ConstantProjections(stable),
        discrete=True,
        notes={'gap': gap, 'margin': margin, 'scan_max': measured},
    )


def _range_basis(projection):
    u, singular, _ = np.linalg.svd(projection)
    return u[:, :int(np.sum(singular > 0.5))]


def restricted_inverse(phi, unstable_start, unstable_end):
    """Inverse of phi from range(Pi^u(start)) onto range(Pi^u(end)), composed with Pi^u(end).

    Returns the matrix and the condition number of the restricted map.
    """
    basis = _range_basis(unstable_start)
    n = phi.shape[0]
    if basis.shape[1] == 0:
        return np.zeros((n, n)), 1.0
    image = phi @ basis
    singular = np.linalg.svd(image, compute_uv=False)
    condition = math.inf if singular[-1] == 0 else float(singular[0] / singular[-1])
    return basis @ np.linalg.pinv(image) @ unstable_end, condition


@dataclass(frozen=True)
class AxiomResult:
    name: str
    max_residual: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    axioms: tuple
    slack: float
    bound: float
    exponent: float
    nodes: int
    pairs: int
    isomorphism_violation: bool = False

    @property
    def passed(self):
        return all(a.passed for a in self.axioms)

    def axiom(self, name) -> AxiomResult:
        for a in self.axioms:
            if a.name == name:
                return a
        raise KeyError(name)

    def failed_axioms(self):
        return [a.name for a in self.axioms if not a.passed]

    def to_dict(self):
        return {
            'passed': self.passed,
            'slack': self.slack,
            'bound': self.bound,
            'exponent': self.exponent,
            'nodes': self.nodes,
            'pairs': self.pairs,
            'isomorphism_violation': self.isomorphism_violation,
            'axioms': {a.name: {'max_residual': a.max_residual, 'passed': a.passed}
                       for a in self.axioms},
        }


def _window_nodes(cocycle, window: TimeGrid, max_nodes):
    if isinstance(cocycle, DiscreteCocycle):
        nodes = np.arange(math.ceil(window.t_min), math.floor(window.t_max) + 1)
    else:
        nodes = window.times
    stride = max(1, math.ceil(len(nodes) / max_nodes))
    return nodes[::stride]


def verify_dichotomy(cocycle, cert: DichotomyCertificate, window: TimeGrid, slack=1.05,
                     lags=None, tol=1e-6, max_nodes=33) -> VerificationReport:
    """Check the dichotomy properties of ``cert`` for ``cocycle`` on ``window``.

    Decay ratios are measured against K e^{-alpha t} and pass when at most
    ``slack``; commutation and invertibility residuals are relative and pass
    below ``tol``. A singular restricted map is reported, not raised.
    """
    discrete = isinstance(cocycle, DiscreteCocycle)
    if lags is None:
        lags = DISCRETE_LAGS if discrete else CONTINUOUS_LAGS
    nodes = _window_nodes(cocycle, window, max_nodes)
    last = window.t_max
    identity = np.eye(cocycle.dimension)

    idempotence = commutation = forward = backward = invertibility = 0.0
    violation = False
    pairs = 0
    for s in nodes:
        s = int(s) if discrete else float(s)
        stable_s = cert.stable(s)
        unstable_s = identity - stable_s
        idempotence = max(idempotence, op_norm(stable_s @ stable_s - stable_s))
        for lag in lags:
            if s + lag > last + 1e-9:
                continue
            pairs += 1
            phi = flow(cocycle, s, lag)
            stable_t = cert.stable(s + lag)
            unstable_t = identity - stable_t
            envelope = cert.bound * math.exp(-cert.exponent * lag)

            commutation = max(commutation,
                              op_norm(stable_t @ phi - phi @ stable_s) / (1.0 + op_norm(phi)))
            forward = max(forward, op_norm(phi @ stable_s) / envelope)

            inverse, condition = restricted_inverse(phi, unstable_s, unstable_t)
            if not condition < CONDITION_LIMIT:
                violation = True
                invertibility = math.inf
                continue
            backward = max(backward, op_norm(inverse) / envelope)
            invertibility = max(invertibility,
                                op_norm(phi @ inverse - unstable_t) / (1.0 + op_norm(unstable_t)))

    report = VerificationReport(
        axioms=(
            AxiomResult('projection', idempotence, idempotence <= tol),
            AxiomResult('commutation', commutation, commutation <= tol),
            AxiomResult('forward_decay', forward, forward <= slack),
            AxiomResult('backward_decay', backward, backward <= slack),
            AxiomResult('invertibility', invertibility, invertibility <= tol and not violation),
        ),
        slack=slack,
        bound=cert.bound,
        exponent=cert.exponent,
        nodes=len(nodes),
        pairs=pairs,
        isomorphism_violation=violation,
    )
    if report.passed:
        logger.debug('dichotomy verified on %d pairs (K=%.4g, alpha=%.4g)', pairs, cert.bound, cert.exponent)
    else:
        logger.warning('dichotomy verification failed: %s', ', '.join(report.failed_axioms()))
    return report


class GreenKernel:
    """G(t, s) = phi_{t,s} Pi^s(s) for t >= s, -phi_{t,s} Pi^u(s) for t < s."""

    def __init__(self, cocycle, certificate: DichotomyCertificate):
        self.cocycle = cocycle
        self.certificate = certificate

    def forward(self, t, s):
        return flow(self.cocycle, s, t - s) @ self.certificate.stable(s)

    def backward(self, t, s):
        phi = flow(self.cocycle, t, s - t)
        inverse, condition = restricted_inverse(
            phi, self.certificate.unstable(t), self.certificate.unstable(s)
        )
        if not condition < CONDITION_LIMIT:
            raise IsomorphismError(f'flow from {t} to {s} is singular on the unstable range')
        return -inverse

    def __call__(self, t, s):
        return self.forward(t, s) if t >= s else self.backward(t, s)


def green_eval(g: GreenKernel, t, s) -> np.ndarray:
    return g(t, s)


def projection_distance(cert_a: DichotomyCertificate, cert_b: DichotomyCertificate,
                        window: TimeGrid, max_nodes=257) -> float:
    """sup over window nodes of ||Pi^s_A - Pi^s_B||."""
    if cert_a.discrete or cert_b.discrete:
        nodes = np.arange(math.ceil(window.t_min), math.floor(window.t_max) + 1)
    else:
        nodes = window.times
    lo = max(cert_a.projections.span[0], cert_b.projections.span[0])
    hi = min(cert_a.projections.span[1], cert_b.projections.span[1])
    if nodes[0] < lo or nodes[-1] > hi:
        raise WindowError(f'projections are defined on [{lo:g}, {hi:g}] but the window needs '
                          f'[{nodes[0]:g}, {nodes[-1]:g}]',
                          required_extension=float(max(lo - nodes[0], nodes[-1] - hi)))
    nodes = nodes[::max(1, math.ceil(len(nodes) / max_nodes))]
    distance = 0.0
    for t in nodes:
        t = int(t) if cert_a.discrete or cert_b.discrete else float(t)
        distance = max(distance, op_norm(cert_a.stable(t) - cert_b.stable(t)))
    return distance


def projection_distance_bound(alpha_a, alpha_b, epsilon) -> float:
    """epsilon (e^{-alpha_a} + e^{-alpha_b}) / (1 - e^{-(alpha_a + alpha_b)})."""
    if not (alpha_a > 0 and alpha_b > 0):
        raise DomainError('projection bound needs positive exponents')
    return epsilon * (math.exp(-alpha_a) + math.exp(-alpha_b)) / (1.0 - math.exp(-(alpha_a + alpha_b)))
