"""Bounded solutions of x_{n+1} = (A + B)(Theta_n omega_p) x_n + f_n.

The solution is the fixed point of

    (Gamma_f x)(n) = sum_k G(n, k + 1) (B_k x_k + f_k)

on a finite window of integer nodes. The Green kernel of the unperturbed
cocycle is tabulated once as a band of half-width L, where L is chosen so
that the neglected geometric tail stays below ``TRUNCATION_TOL``.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .cocycle import DiscreteCocycle
from .dichotomy import CONDITION_LIMIT, DichotomyCertificate, restricted_inverse
from .exceptions import (ContractionError, ConvergenceError, DomainError, IsomorphismError,
                         WindowError)

logger = logging.getLogger(__name__)

TRUNCATION_TOL = 1e-10
CONTRACTION_MARGIN = 0.9


def _perturbation_threshold(alpha):
    return (1.0 - math.exp(-alpha)) / (1.0 + math.exp(-alpha))


def _sup_norm(values):
    """max over nodes (and columns) of the Euclidean norm of x_n."""
    if values.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(values, axis=1)))


@dataclass(frozen=True)
class ForcingSequence:
    """f_n on the integer window [n_min, n_min + len(values) - 1], zero outside.

    ``values`` has shape (nodes, d) or (nodes, d, columns) for several
    right-hand sides solved together.
    """
    n_min: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim not in (2, 3):
            raise DomainError(f'forcing must have shape (nodes, d[, columns]), got {values.shape}')
        if not np.all(np.isfinite(values)):
            raise DomainError('forcing has non-finite entries')
        object.__setattr__(self, 'n_min', int(self.n_min))
        object.__setattr__(self, 'values', values)

    @property
    def n_max(self):
        return self.n_min + self.values.shape[0] - 1

    @property
    def dimension(self):
        return self.values.shape[1]

    @property
    def nodes(self):
        return np.arange(self.n_min, self.n_max + 1)

    def sup_norm(self):
        return _sup_norm(self.values)

    @classmethod
    def zeros(cls, n_min, n_max, dimension, columns=None):
        shape = (n_max - n_min + 1, dimension) + ((columns,) if columns else ())
        return cls(n_min, np.zeros(shape))

    @classmethod
    def impulse(cls, n_min, n_max, node, vector):
        vector = np.atleast_1d(np.asarray(vector, dtype=float))
        if not n_min <= node <= n_max:
            raise WindowError(f'impulse node {node} outside [{n_min}, {n_max}]')
        forcing = cls.zeros(n_min, n_max, vector.shape[0])
        forcing.values[node - n_min] = vector
        return forcing


@dataclass(frozen=True)
class BoundedSolution:
    n_min: int
    values: np.ndarray
    residual: float
    iterations: int
    contamination: int
    rho: float
    a_priori_bound: float

    @property
    def n_max(self):
        return self.n_min + self.values.shape[0] - 1

    @property
    def nodes(self):
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def interior(self):
        """Nodes at least ``contamination`` away from both window edges."""
        nodes = self.nodes
        return (nodes >= self.n_min + self.contamination) & (nodes <= self.n_max - self.contamination)

    def at(self, n):
        if not self.n_min <= n <= self.n_max:
            raise WindowError(f'node {n} outside [{self.n_min}, {self.n_max}]')
        return self.values[n - self.n_min]

    def sup_norm(self):
        return _sup_norm(self.values)

    def equation_residual(self, cocycle: DiscreteCocycle, perturbation, forcing: ForcingSequence):
        """max over interior n of ||x_{n+1} - (A + B)_n x_n - f_n||."""
        worst = 0.0
        mask = self.interior
        for i, n in enumerate(self.nodes[:-1]):
            if not (mask[i] and mask[i + 1]):
                continue
            step = cocycle.step(n) + _perturbation_at(perturbation, n, cocycle.dimension)
            gap = self.values[i + 1] - np.einsum('ij,j...->i...', step, self.values[i]) - forcing.values[i]
            worst = max(worst, float(np.max(np.linalg.norm(gap.reshape(gap.shape[0], -1), axis=0))))
        return worst

    def write_csv(self, stream):
        stream.write(f'# residual={self.residual!r}, iterations={self.iterations}, '
                     f'contamination={self.contamination}\n')
        d = self.values.shape[1]
        stream.write(','.join(['n'] + [f'x{i}' for i in range(d)]) + '\n')
        for n, x in zip(self.nodes, self.values):
            stream.write(','.join([str(n)] + [repr(float(v)) for v in np.ravel(x)]) + '\n')


def _perturbation_at(perturbation, n, dimension):
    if perturbation is None:
        return np.zeros((dimension, dimension))
    return np.atleast_2d(np.asarray(perturbation(int(n)), dtype=float))


def truncation_length(alpha, sup_bound, tol) -> int:
    """Smallest N >= 0 with sup_bound e^{-alpha N} / (1 - e^{-alpha}) <= tol."""
    if not alpha > 0:
        raise DomainError(f'truncation needs a positive exponent, got {alpha}')
    if not tol > 0:
        raise DomainError(f'truncation tolerance must be positive, got {tol}')
    denominator = 1.0 - math.exp(-alpha)

    def fits(n):
        return sup_bound * math.exp(-alpha * n) / denominator <= tol

    if fits(0):
        return 0
    n = max(0, math.ceil(math.log(sup_bound / (tol * denominator)) / alpha))
    while n > 0 and fits(n - 1):
        n -= 1
    while not fits(n):
        n += 1
    return n


class GreenBand:
    """G(n, j) for window nodes n, j with |n - j| <= length, stored by offset.

    ``forward[o, i]`` holds G(n_min + i + o, n_min + i) and
    ``backward[m - 1, i]`` holds G(n_min + i - m, n_min + i).
    """

    def __init__(self, cocycle: DiscreteCocycle, cert: DichotomyCertificate, n_min, n_max, length):
        if n_max < n_min:
            raise WindowError(f'empty window [{n_min}, {n_max}]')
        self.n_min, self.n_max, self.length = int(n_min), int(n_max), int(length)
        size = self.size
        d = cocycle.dimension
        nodes = np.arange(self.n_min, self.n_max + 1)
        steps = np.array([cocycle.step(n) for n in nodes])
        stable = np.array([cert.stable(int(n)) for n in nodes])
        unstable = np.eye(d) - stable

        self.forward = np.zeros((self.length + 1, size, d, d))
        current = stable.copy()
        for o in range(self.length + 1):
            self.forward[o, :size - o] = current[:size - o]
            count = size - o - 1
            if count <= 0:
                break
            current[:count] = np.einsum('sij,sjk->sik', steps[o:o + count], current[:count])

        # inverse of A(n - 1) from the unstable range at n - 1 to the one at n
        inverses = np.zeros((size, d, d))
        for i in range(1, size):
            inverse, condition = restricted_inverse(steps[i - 1], unstable[i - 1], unstable[i])
            if not condition < CONDITION_LIMIT:
                raise IsomorphismError(
                    f'step at n={nodes[i - 1]} is singular on the unstable range (cond {condition:.3g})'
                )
            inverses[i] = inverse
        self.backward = np.zeros((self.length, size, d, d))
        current = inverses.copy()
        for m in range(1, self.length + 1):
            if m >= size:
                break
            self.backward[m - 1, m:] = -current[m:]
            if m + 1 < size:
                current[m + 1:] = np.einsum('sij,sjk->sik', inverses[1:size - m], current[m + 1:])

    @property
    def size(self):
        return self.n_max - self.n_min + 1

    def apply(self, sources):
        """sum_j G(n, j) u_j for sources u indexed by window node j."""
        out = np.zeros_like(sources)
        size = self.size
        for o in range(min(self.length + 1, size)):
            out[o:] += np.einsum('sij,sj...->si...', self.forward[o, :size - o], sources[:size - o])
        for m in range(1, min(self.length + 1, size)):
            out[:size - m] += np.einsum('sij,sj...->si...', self.backward[m - 1, m:], sources[m:])
        return out


def _band_length(cert):
    return truncation_length(cert.exponent, cert.bound, TRUNCATION_TOL)


def _perturbation_stack(perturbation, n_min, n_max, dimension):
    return np.array([_perturbation_at(perturbation, n, dimension) for n in range(n_min, n_max + 1)])


def _sources(perturbations, forcing_values, x):
    """u_j = B_{j-1} x_{j-1} + f_{j-1}; the value at the last node feeds beyond the window."""
    sources = np.zeros_like(forcing_values)
    sources[1:] = np.einsum('sij,sj...->si...', perturbations[:-1], x[:-1]) + forcing_values[:-1]
    return sources


def gamma_apply(cocycle: DiscreteCocycle, cert: DichotomyCertificate, perturbation,
                forcing: ForcingSequence, x, band: GreenBand = None) -> np.ndarray:
    """(Gamma_f x)(n) at every node of the forcing window."""
    x = np.asarray(x, dtype=float)
    if x.shape != forcing.values.shape:
        raise WindowError(f'candidate of shape {x.shape} does not match the forcing window '
                          f'{forcing.values.shape}')
    if band is None:
        band = GreenBand(cocycle, cert, forcing.n_min, forcing.n_max, _band_length(cert))
    elif (band.n_min, band.n_max) != (forcing.n_min, forcing.n_max):
        raise WindowError(f'Green band covers [{band.n_min}, {band.n_max}], forcing covers '
                          f'[{forcing.n_min}, {forcing.n_max}]')
    perturbations = _perturbation_stack(perturbation, forcing.n_min, forcing.n_max, cocycle.dimension)
    return band.apply(_sources(perturbations, forcing.values, x))


def contraction_factor(cert: DichotomyCertificate, delta):
    """rho = delta K (1 + e^{-alpha}) / (1 - e^{-alpha}) for sup ||B|| = delta."""
    q = math.exp(-cert.exponent)
    return delta * cert.bound * (1.0 + q) / (1.0 - q)


def bounded_solution(cocycle: DiscreteCocycle, cert: DichotomyCertificate, perturbation,
                     forcing: ForcingSequence, tol=1e-10, initial=None) -> BoundedSolution:
    """Picard iteration of Gamma_f from ``initial`` (zero by default)."""
    d = cocycle.dimension
    if forcing.dimension != d:
        raise WindowError(f'forcing has {forcing.dimension} components, cocycle has {d}')
    perturbations = _perturbation_stack(perturbation, forcing.n_min, forcing.n_max, d)
    delta = float(max(np.linalg.norm(b, 2) for b in perturbations))
    rho = contraction_factor(cert, delta)
    if rho > CONTRACTION_MARGIN:
        threshold = _perturbation_threshold(cert.exponent)
        raise ContractionError(
            f'contraction factor {rho:.4g} exceeds {CONTRACTION_MARGIN}; sup ||B|| K = '
            f'{delta * cert.bound:.4g} against the threshold {threshold:.4g}',
            rho=rho, threshold=threshold,
        )

    length = _band_length(cert)
    band = GreenBand(cocycle, cert, forcing.n_min, forcing.n_max, length)
    f_norm = forcing.sup_norm()
    if rho > 0:
        budget = math.ceil(math.log(tol * (1.0 - rho) / max(f_norm, tol)) / math.log(rho)) + 10
    else:
        budget = 3
    budget = max(budget, 3)

    x = np.zeros_like(forcing.values) if initial is None else np.array(initial, dtype=float)
    if x.shape != forcing.values.shape:
        raise WindowError(f'initial guess of shape {x.shape} does not match {forcing.values.shape}')
    for iteration in range(1, budget + 1):
        image = band.apply(_sources(perturbations, forcing.values, x))
        residual = _sup_norm(image - x)
        x = image
        if residual <= tol:
            break
    else:
        raise ConvergenceError(f'Gamma_f did not converge in {budget} iterations '
                               f'(residual {residual:.3g}, rho {rho:.3g})')

    q = math.exp(-cert.exponent)
    a_priori = cert.bound * f_norm * (1.0 + q) / ((1.0 - q) * (1.0 - rho))
    solution = BoundedSolution(
        n_min=forcing.n_min, values=x, residual=residual, iterations=iteration,
        contamination=length, rho=rho, a_priori_bound=a_priori,
    )
    if solution.sup_norm() > a_priori * (1 + 1e-9) + 2 * tol:
        raise ConvergenceError(f'solution norm {solution.sup_norm():.6g} exceeds the a-priori '
                               f'bound {a_priori:.6g}')
    logger.debug('bounded solution on [%d, %d]: %d iterations, residual %.3g, rho %.4g',
                 forcing.n_min, forcing.n_max, iteration, residual, rho)
    return solution


def impulse_projections(cocycle: DiscreteCocycle, cert: DichotomyCertificate, perturbation,
                        nodes, tol=1e-10) -> dict:
    """Perturbed projections at ``nodes`` from impulse responses.

    With f_{m-1} = e_j and no other forcing, the bounded solution at m is
    the j-th column of the perturbed stable projection. All nodes and basis
    vectors are solved together as columns of one forcing array, on a
    window reaching one band length past the outermost nodes.
    """
    nodes = sorted(int(m) for m in nodes)
    if not nodes:
        return {}
    d = cocycle.dimension
    length = _band_length(cert)
    n_min, n_max = nodes[0] - length - 1, nodes[-1] + length
    columns = len(nodes) * d
    forcing = ForcingSequence.zeros(n_min, n_max, d, columns)
    for i, m in enumerate(nodes):
        forcing.values[m - 1 - n_min, :, i * d:(i + 1) * d] = np.eye(d)
    solution = bounded_solution(cocycle, cert, perturbation, forcing, tol)

    table = {}
    for i, m in enumerate(nodes):
        stable = solution.values[m - n_min, :, i * d:(i + 1) * d].copy()
        table[m] = (stable, np.eye(d) - stable)
    logger.debug('impulse projections at %d nodes (%d iterations)', len(nodes), solution.iterations)
    return table


def impulse_response_projection(cocycle: DiscreteCocycle, cert: DichotomyCertificate,
                                perturbation, node, tol=1e-10):
    """(stable, unstable) perturbed projections at a single node."""
    return impulse_projections(cocycle, cert, perturbation, [node], tol)[int(node)]
