"""Stratonovich equations with bounded multiplicative noise as random ODEs.

    dy = B y dt + f(y) dt + eta kappa_t D y o dW_t,    D = diag(mask)

becomes, with v = exp(-eta kappa_t z*(theta_t omega) D) y,

    v' = B v + e^{-S} f(e^{S} v) + (e^{-S} B e^{S} - B) v + eta (kappa_t - kappa'_t) z* D v

where S = eta kappa_t z* D. D is a 0/1 diagonal, so every exponential is
taken entrywise. The Stratonovich equation itself is never integrated.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .dichotomy import autonomous_certificate
from .exceptions import ConfigurationError, DomainError, DynamicsError
from .hyperbolic import (CERTIFIED, FAILED, SemilinearProblem, certify_hyperbolic, epsilon_zero,
                         find_hyperbolic_solution)
from .noise import DEFAULT_TAIL_TOL, KappaFn, SamplePath, TimeGrid, ou_interpolant, sample_wiener_path

logger = logging.getLogger(__name__)

NOISE_SHAPES = ('both', 'position', 'velocity')
# left margin for the OU tail plus the right margin for integrator half steps
PATH_MARGIN = (64.0, 8.0)


@dataclass(frozen=True)
class StratonovichSpec:
    linear: np.ndarray
    f: Callable
    eta: float
    kappa: KappaFn
    mask: np.ndarray = None
    f_jacobian: Optional[Callable] = None
    equilibrium: np.ndarray = None
    name: str = 'stratonovich'

    def __post_init__(self):
        linear = np.atleast_2d(np.asarray(self.linear, dtype=float))
        d = linear.shape[0]
        mask = np.ones(d) if self.mask is None else np.asarray(self.mask, dtype=float)
        if mask.shape != (d,) or not np.all((mask == 0) | (mask == 1)):
            raise DomainError(f'noise mask must be a 0/1 vector of length {d}')
        if not 0 <= self.eta <= 1:
            raise DomainError(f'noise intensity must lie in [0, 1], got {self.eta}')
        equilibrium = np.zeros(d) if self.equilibrium is None else np.asarray(self.equilibrium, dtype=float)
        object.__setattr__(self, 'linear', linear)
        object.__setattr__(self, 'mask', mask)
        object.__setattr__(self, 'equilibrium', equilibrium)


@dataclass(frozen=True)
class RandomODESpec:
    """The transformed equation, closed over one path and kappa."""
    spec: StratonovichSpec
    z_star: Callable
    notes: dict = field(default_factory=dict)

    @property
    def linear(self):
        return self.spec.linear

    def exponent(self, t, eta=None):
        """Diagonal of S(t) = eta kappa_t z*(theta_t omega) D, shape t.shape + (d,)."""
        eta = self.spec.eta if eta is None else eta
        t = np.asarray(t, dtype=float)
        kappa, _ = self.spec.kappa(t)
        return (eta * kappa * self.z_star(t))[..., None] * self.spec.mask

    def perturbation(self, t, eta=None):
        """B_eta(t) = eta (kappa_t - kappa'_t) z* D as a batch of diagonal matrices."""
        eta = self.spec.eta if eta is None else eta
        t = np.asarray(t, dtype=float)
        kappa, kappa_dot = self.spec.kappa(t)
        scale = (eta * (kappa - kappa_dot) * self.z_star(t))[..., None] * self.spec.mask
        return scale[..., None] * np.eye(len(self.spec.mask))

    def nonlinear(self, eta, t, v):
        """Everything beyond B v: the conjugated f, the commutator and B_eta v."""
        s = self.exponent(t, eta)
        grow, shrink = np.exp(s), np.exp(-s)
        conjugated = shrink * self.spec.f(grow * v)
        commutator = (shrink[..., :, None] * self.linear * grow[..., None, :] - self.linear)
        drift = (commutator @ v[..., None])[..., 0]
        noise = (self.perturbation(t, eta) @ v[..., None])[..., 0]
        return conjugated + drift + noise

    def nonlinear_jacobian(self, eta, t, v):
        if self.spec.f_jacobian is None:
            raise DomainError('transformed Jacobian needs the Jacobian of f')
        s = self.exponent(t, eta)
        grow, shrink = np.exp(s), np.exp(-s)
        inner = self.spec.f_jacobian(grow * v)
        conjugated = shrink[..., :, None] * inner * grow[..., None, :]
        commutator = shrink[..., :, None] * self.linear * grow[..., None, :] - self.linear
        return conjugated + commutator + self.perturbation(t, eta)

    def f_eta(self, t, v):
        return self.nonlinear(self.spec.eta, t, v)

    def field(self, t, v):
        return v @ self.linear.T + self.f_eta(t, v)


def transform(spec: StratonovichSpec, path: SamplePath, start=None, stop=None,
              tail_tol=DEFAULT_TAIL_TOL) -> RandomODESpec:
    """The random ODE for v; z* is evaluated on [start, stop] of the stored path."""
    z_star = ou_interpolant(path, start, stop, tail_tol)
    return RandomODESpec(spec=spec, z_star=z_star,
                         notes={'seed': path.seed, 'kappa': spec.kappa.name, 'mask': spec.mask.tolist()})


def inverse_transform(v_traj, times, ode: RandomODESpec):
    """y(t) = exp(eta kappa_t z* D) v(t), pointwise."""
    return np.exp(ode.exponent(times)) * np.asarray(v_traj, dtype=float)


def forward_transform(y_traj, times, ode: RandomODESpec):
    """v(t) = exp(-eta kappa_t z* D) y(t), pointwise."""
    return np.exp(-ode.exponent(times)) * np.asarray(y_traj, dtype=float)


def stratonovich_problem(spec: StratonovichSpec, path: SamplePath, start=None, stop=None,
                         radius=1.0, tail_tol=DEFAULT_TAIL_TOL):
    """(SemilinearProblem in v, RandomODESpec) for the transformed equation."""
    ode = transform(spec, path, start, stop, tail_tol)
    problem = SemilinearProblem(
        linear=spec.linear,
        f0=spec.f,
        f_eta=ode.nonlinear,
        equilibrium=spec.equilibrium,
        radius=radius,
        f0_jacobian=spec.f_jacobian,
        f_eta_jacobian=ode.nonlinear_jacobian if spec.f_jacobian is not None else None,
        name=f'{spec.name} (transformed)',
    )
    return problem, ode


def linear_example_solution(a, eta, kappa: KappaFn, path: SamplePath, t0, y0=1.0):
    """Scalar dy = a y dt + eta kappa_t y o dW on the path grid from t0.

    y(t) = y0 exp(a (t - t0) + eta int_{t0}^t kappa d(omega)), with the
    Stieltjes integral by the trapezoid rule; exact calculus on smooth paths.
    """
    grid = path.grid
    first = grid.index(t0)
    times = grid.times[first:]
    omega = path.values[first:]
    k, _ = kappa(times)
    stieltjes = np.concatenate(([0.0], np.cumsum(0.5 * (k[1:] + k[:-1]) * np.diff(omega))))
    return times, y0 * np.exp(a * (times - t0) + eta * stieltjes)


def _collocation(n_modes):
    q = n_modes + 2
    nodes = (1.0 - np.cos((2 * np.arange(1, q + 1) - 1) * math.pi / (2 * q))) / 2.0
    k = np.arange(1, n_modes + 1)
    basis = math.sqrt(2.0) * np.sin(math.pi * np.outer(nodes, k))
    return nodes, basis, np.linalg.pinv(basis)


def build_wave_system(n_modes, damping, f, f_prime, forcing=0.0, radius=1.0) -> SemilinearProblem:
    """Galerkin truncation of u_tt + damping u_t = u_xx + f(u) + forcing on (0, 1).

    Dirichlet eigenmodes sqrt(2) sin(k pi x) with eigenvalues (k pi)^2;
    the state is (modal positions, modal velocities). f is evaluated at
    n_modes + 2 Chebyshev collocation points and projected back by least
    squares, which truncates the cubic mode coupling.
    """
    if n_modes < 1:
        raise ConfigurationError(f'need at least one mode, got {n_modes}', field='n_modes')
    if not damping > 0:
        raise ConfigurationError(f'damping must be positive, got {damping}', field='damping')
    N = int(n_modes)
    k = np.arange(1, N + 1)
    eigenvalues = (k * math.pi) ** 2
    nodes, basis, projector = _collocation(N)
    forcing_modes = math.sqrt(2.0) * (1.0 - np.cos(k * math.pi)) / (k * math.pi) * forcing

    linear = np.zeros((2 * N, 2 * N))
    linear[:N, N:] = np.eye(N)
    linear[N:, :N] = -np.diag(eigenvalues)
    linear[N:, N:] = -damping * np.eye(N)

    def nonlinearity(y):
        y = np.asarray(y, dtype=float)
        physical = y[..., :N] @ basis.T
        modal = f(physical) @ projector.T + forcing_modes
        return np.concatenate((np.zeros_like(modal), modal), axis=-1)

    def jacobian(y):
        y = np.asarray(y, dtype=float)
        slope = f_prime(y[..., :N] @ basis.T)
        block = (projector * slope[..., None, :]) @ basis
        out = np.zeros(y.shape[:-1] + (2 * N, 2 * N))
        out[..., N:, :N] = block
        return out

    equilibrium = np.zeros(2 * N)
    if forcing != 0.0 or np.any(f(np.zeros(len(nodes))) != 0.0):
        solution = optimize.root(
            lambda a: -eigenvalues * a + projector @ f(basis @ a) + forcing_modes,
            np.zeros(N),
            jac=lambda a: -np.diag(eigenvalues) + (projector * f_prime(basis @ a)) @ basis,
        )
        if not solution.success:
            raise DomainError(f'no wave equilibrium found: {solution.message}')
        equilibrium[:N] = solution.x

    problem = SemilinearProblem(
        linear=linear,
        f0=nonlinearity,
        f_eta=lambda eta, t, y: nonlinearity(y),
        equilibrium=equilibrium,
        radius=radius,
        f0_jacobian=jacobian,
        f_eta_jacobian=lambda eta, t, y: jacobian(y),
        name=f'wave N={N}',
        notes={'eigenvalues': eigenvalues.tolist(), 'collocation_nodes': nodes.tolist(),
               'damping': damping, 'forcing': forcing},
    )
    logger.info('wave system: N=%d damping=%g, equilibrium norm %.3g', N, damping,
                float(np.linalg.norm(equilibrium)))
    return problem


def noise_mask(n_modes, noise_shape):
    ones, zeros = np.ones(n_modes), np.zeros(n_modes)
    masks = {
        'both': np.concatenate((ones, ones)),
        'position': np.concatenate((ones, zeros)),
        'velocity': np.concatenate((zeros, ones)),
    }
    try:
        return masks[noise_shape]
    except KeyError:
        raise ConfigurationError(f"unknown noise shape '{noise_shape}', expected one of "
                                 f"{', '.join(NOISE_SHAPES)}", field='noise_shape') from None


def wave_noise_spec(problem: SemilinearProblem, kappa: KappaFn, eta, noise_shape='both') -> StratonovichSpec:
    n_modes = problem.dimension // 2
    return StratonovichSpec(
        linear=problem.linear, f=problem.f0, eta=eta, kappa=kappa,
        mask=noise_mask(n_modes, noise_shape), f_jacobian=problem.f0_jacobian,
        equilibrium=problem.equilibrium, name=problem.name,
    )


@dataclass(frozen=True)
class WaveRow:
    eta: float
    sup_dist_v: float
    sup_dist_y: float
    certified: bool
    alpha_tilde: float
    M_bound: float
    seed: int
    sup_B: float
    status: str
    error: str = ''
    epsilon: float = math.nan

    def to_dict(self):
        return {
            'eta': self.eta,
            'sup_dist_v': self.sup_dist_v,
            'sup_dist_y': self.sup_dist_y,
            'certified': self.certified,
            'alpha_tilde': self.alpha_tilde,
            'M_bound': self.M_bound,
            'seed': self.seed,
            'sup_B': self.sup_B,
            'status': self.status,
            'error': self.error,
            'epsilon': self.epsilon,
        }


WAVE_COLUMNS = ('eta', 'sup_dist_v', 'sup_dist_y', 'certified', 'alpha_tilde', 'M_bound', 'seed', 'sup_B',
                'epsilon')


def wave_path(window: TimeGrid, seed) -> SamplePath:
    left, right = PATH_MARGIN
    return sample_wiener_path(TimeGrid(window.t_min - left, window.t_max + right, window.h), seed)


def run_wave_demo(problem: SemilinearProblem, eta_grid, seed, window: TimeGrid, kappa: KappaFn,
                  noise_shape='both', tol=1e-9, half_width=4.0, margin=0.1, epsilon=None,
                  path: SamplePath = None) -> list:
    """One WaveRow per eta, in the order of ``eta_grid``; failures become rows.

    Without an explicit ``epsilon`` the ball radius is eps0 of the autonomous
    problem.
    """
    path = path if path is not None else wave_path(window, seed)
    if epsilon is None:
        base = autonomous_certificate(problem.linearization, margin)
        epsilon = epsilon_zero(problem, base.bound, base.exponent).eps0
    rows = []
    for eta in eta_grid:
        spec = wave_noise_spec(problem, kappa, eta, noise_shape)
        try:
            transformed, ode = stratonovich_problem(spec, path, radius=problem.radius)
            solution = find_hyperbolic_solution(transformed, eta, window, tol, epsilon=epsilon, margin=margin)
            solution = certify_hyperbolic(transformed, solution, half_width, margin=margin)
        except DynamicsError as exc:
            logger.warning('wave eta=%g seed=%s failed: %s', eta, seed, exc)
            rows.append(WaveRow(eta, math.nan, math.nan, False, math.nan, math.nan, seed, math.nan,
                                FAILED, str(exc), epsilon))
            continue
        interior = solution.interior
        times = solution.times[interior]
        y = inverse_transform(solution.trajectory[interior], times, ode)
        dichotomy = solution.linearization_certificate
        rows.append(WaveRow(
            eta=eta,
            sup_dist_v=solution.sup_distance,
            sup_dist_y=float(np.max(np.linalg.norm(y - problem.equilibrium, axis=1))),
            certified=solution.status == CERTIFIED,
            alpha_tilde=dichotomy.exponent if dichotomy is not None else math.nan,
            M_bound=dichotomy.bound if dichotomy is not None else math.nan,
            seed=seed,
            sup_B=solution.notes.get('perturbation_sup', math.nan),
            status=solution.status,
            epsilon=solution.epsilon,
        ))
    return rows
