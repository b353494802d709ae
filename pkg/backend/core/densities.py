"""
Distribution functions and test functions fed to the collision operators
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .energy_law import EnergyLaw
from .equilibrium import Maxwellian
from .exceptions import ArgumentError, DomainError

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]

PROFILES = ('gaussian', 'bump')


@dataclass(frozen=True)
class DensityFunction:
    """
    Vectorized f(v, I) >= 0 with v of shape (..., 3) and I of shape (...).

    ``support_hint`` = (velocity radius, energy cutoff): values outside are
    treated as zero. ``log_safe`` marks densities strictly positive on their
    support, for which ``log`` is finite there. ``reference`` is a Maxwellian
    close to f, used as the importance-sampling proposal.
    """
    evaluator: Evaluator
    support_hint: Tuple[float, float] = (np.inf, np.inf)
    log_safe: bool = False
    label: str = 'density'
    log_evaluator: Optional[Evaluator] = None
    reference: Optional[Maxwellian] = None

    def inside(self, v, I) -> np.ndarray:
        radius, cutoff = self.support_hint
        speed = np.linalg.norm(np.asarray(v, dtype=float), axis=-1)
        return (speed <= radius) & (np.asarray(I, dtype=float) <= cutoff)

    def __call__(self, v, I):
        v = np.asarray(v, dtype=float)
        I = np.asarray(I, dtype=float)
        values = np.asarray(self.evaluator(v, I), dtype=float)
        if np.isfinite(self.support_hint).any():
            values = np.where(self.inside(v, I), values, 0.0)
        return values

    def log(self, v, I):
        """log f on the support, -inf outside"""
        if not self.log_safe:
            raise ArgumentError(f"density '{self.label}' is not strictly positive, log f is undefined")
        v = np.asarray(v, dtype=float)
        I = np.asarray(I, dtype=float)
        if self.log_evaluator is not None:
            values = np.asarray(self.log_evaluator(v, I), dtype=float)
        else:
            with np.errstate(divide='ignore'):
                values = np.log(np.asarray(self.evaluator(v, I), dtype=float))
        return np.where(self.inside(v, I), values, -np.inf)


ZERO = DensityFunction(lambda v, I: np.zeros(np.broadcast(v[..., 0], I).shape), label='zero')


def maxwellian_density(M: Maxwellian) -> DensityFunction:
    return DensityFunction(M.eval, log_safe=M.n > 0, label='maxwellian',
                           log_evaluator=M.log_eval, reference=M)


def mixture_density(components: Sequence[Tuple[float, Maxwellian]],
                    label: str = 'mixture') -> DensityFunction:
    """Positive combination sum_j w_j M_j, evaluated through logsumexp"""
    if not components:
        raise ArgumentError("a mixture needs at least one component")
    weights = np.array([float(w) for w, _ in components])
    if np.any(weights <= 0):
        raise DomainError("mixture weights must be positive")
    maxwellians = [M for _, M in components]
    log_weights = np.log(weights)

    def log_eval(v, I):
        logs = np.stack([lw + M.log_eval(v, I) for lw, M in zip(log_weights, maxwellians)])
        return logsumexp(logs, axis=0)

    return DensityFunction(lambda v, I: np.exp(log_eval(v, I)), log_safe=True, label=label,
                           log_evaluator=log_eval, reference=moment_matched(components, inflation=1.5))


def moment_matched(components: Sequence[Tuple[float, Maxwellian]], inflation: float = 1.0) -> Maxwellian:
    """
    Maxwellian with the density, bulk velocity and temperatures of a mixture,
    temperatures widened by ``inflation``
    """
    weights = np.array([w * M.n for w, M in components])
    total = float(weights.sum())
    maxwellians = [M for _, M in components]
    first = maxwellians[0]
    u = sum(wt * np.asarray(M.u) for wt, M in zip(weights, maxwellians)) / total
    # kinetic temperature includes the spread of the bulk velocities
    kinetic = sum(wt * (3.0 * M.kT_k + np.sum((np.asarray(M.u) - u) ** 2))
                  for wt, M in zip(weights, maxwellians)) / (3.0 * total)
    internal = sum(wt * M.law.mean_internal_energy(M.T_i, M.k_B) for wt, M in zip(weights, maxwellians)) / total
    # invert the mean internal energy for T_i (exact for power laws)
    T_i = internal / (first.law.mean_internal_energy(1.0, first.k_B) or 1.0)
    return Maxwellian(n=total, u=tuple(u), T_k=inflation * kinetic * first.mass / first.k_B,
                      T_i=inflation * max(T_i, 1e-12),
                      law=first.law, k_B=first.k_B, mass=first.mass)


def perturbed_density(M: Maxwellian, epsilon: float, h: Callable, h_bound: float = 1.0,
                      label: str = 'perturbed') -> DensityFunction:
    """
    f = M (1 + epsilon h). ``h_bound`` is sup |h|; f is log-safe when
    epsilon * h_bound < 1.
    """
    safe = abs(epsilon) * h_bound < 1.0

    def evaluator(v, I):
        return M.eval(v, I) * (1.0 + epsilon * h(v, I))

    def log_eval(v, I):
        return M.log_eval(v, I) + np.log1p(epsilon * h(v, I))

    return DensityFunction(evaluator, log_safe=safe, label=label,
                           log_evaluator=log_eval if safe else None, reference=M)


def random_positive_family(rng: np.random.Generator, count: int, law: EnergyLaw,
                           components: int = 2) -> List[DensityFunction]:
    """Mixtures of Maxwellians with random densities, drifts and temperatures"""
    family = []
    for k in range(count):
        parts = []
        for _ in range(components):
            parts.append((float(rng.uniform(0.3, 1.0)),
                          Maxwellian(n=1.0, u=tuple(rng.uniform(-1.0, 1.0, 3)),
                                     T_k=float(rng.uniform(0.5, 2.0)), T_i=float(rng.uniform(0.5, 2.0)),
                                     law=law)))
        family.append(mixture_density(parts, label=f'random_mixture_{k}'))
    return family


# Test functions g(v, I) = A(|v - c|) B(I)

def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True)
class ProductTestFunction:
    """
    Separable test function amplitude * A(|v - center| / width) * B(I).

    ``gaussian``: A(s) = exp(-s^2/2), B(I) = exp(-energy_rate I).
    ``bump``: compactly supported A(s) = bump(s), B(I) = bump(energy_rate I).
    """
    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    width: float = 1.0
    energy_rate: float = 0.5
    amplitude: float = 1.0
    profile: str = 'gaussian'
    _center: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ArgumentError(f"unknown test-function profile '{self.profile}'")
        if self.width <= 0 or self.energy_rate <= 0:
            raise DomainError("width and energy rate must be positive")
        center = np.asarray(self.center, dtype=float).reshape(3)
        object.__setattr__(self, 'center', tuple(float(c) for c in center))
        object.__setattr__(self, '_center', center)

    @property
    def isotropic(self) -> bool:
        return not np.any(self._center)

    def radial(self, s):
        s = np.asarray(s, dtype=float) / self.width
        if self.profile == 'gaussian':
            return np.exp(-0.5 * s * s)
        return _bump(s)

    def energy_factor(self, I):
        I = np.asarray(I, dtype=float)
        if self.profile == 'gaussian':
            return np.exp(-self.energy_rate * I)
        return _bump(self.energy_rate * I)

    def velocity_factor(self, v):
        return self.radial(np.linalg.norm(np.asarray(v, dtype=float) - self._center, axis=-1))

    def __call__(self, v, I):
        return self.amplitude * self.velocity_factor(v) * self.energy_factor(I)

    @property
    def support_radius(self) -> float:
        if self.profile == 'bump':
            return float(np.linalg.norm(self._center)) + self.width
        return np.inf

    @property
    def energy_cutoff(self) -> float:
        return 1.0 / self.energy_rate if self.profile == 'bump' else np.inf

    def as_density(self) -> DensityFunction:
        return DensityFunction(self.__call__, support_hint=(self.support_radius, self.energy_cutoff),
                               label=f'test_{self.profile}')


def random_test_functions(rng: np.random.Generator, count: int, radius: float = 3.0) -> List[ProductTestFunction]:
    """Gaussian test functions with centers drawn uniformly in the ball of the given radius"""
    functions = []
    for _ in range(count):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        center = radius * rng.random() ** (1.0 / 3.0) * direction
        functions.append(ProductTestFunction(center=tuple(center), width=1.0,
                                             energy_rate=float(rng.uniform(0.25, 1.0))))
    return functions


def sqrt_maxwellian(M: Maxwellian) -> Callable:
    """g = M^{1/2}, the collision-invariant direction of the linearized operator"""
    return M.sqrt_eval
