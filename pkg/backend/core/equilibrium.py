"""
Two-temperature Maxwellian equilibria
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy import special

from .energy_law import EnergyLaw, PowerLaw
from .exceptions import ArgumentError, DomainError
from .kinematics import State
from .reports import VerificationReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Maxwellian:
    """
    M(v, I) = n / q(T_i) (m / (2 pi k_B T_k))^{3/2}
              exp(-m |v - u|^2 / (2 k_B T_k) - I / (k_B T_i))
    """
    n: float = 1.0
    u: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    T_k: float = 1.0
    T_i: float = 1.0
    law: EnergyLaw = field(default_factory=PowerLaw)
    k_B: float = 1.0
    mass: float = 1.0
    _partition: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"number density must be non-negative, got {self.n}")
        if self.T_k <= 0 or self.T_i <= 0:
            raise DomainError("temperatures must be positive")
        if self.k_B <= 0 or self.mass <= 0:
            raise DomainError("k_B and the particle mass must be positive")
        u = tuple(float(x) for x in np.asarray(self.u, dtype=float).reshape(3))
        object.__setattr__(self, 'u', u)
        object.__setattr__(self, '_partition', self.law.partition(self.T_i, self.k_B))

    @property
    def kT_k(self) -> float:
        return self.k_B * self.T_k / self.mass

    @property
    def kT_i(self) -> float:
        return self.k_B * self.T_i

    @property
    def partition(self) -> float:
        return self._partition

    @property
    def constant(self) -> float:
        """Prefactor c with M = c exp(-|v-u|^2/(2 kT_k)) exp(-I/kT_i)"""
        return self.n / self._partition * (2.0 * np.pi * self.kT_k) ** -1.5

    def log_eval(self, v, I):
        v = np.asarray(v, dtype=float)
        I = np.asarray(I, dtype=float)
        w = v - np.asarray(self.u)
        with np.errstate(divide='ignore'):
            log_c = np.log(self.constant)
        return log_c - np.sum(w * w, axis=-1) / (2.0 * self.kT_k) - I / self.kT_i

    def eval(self, v, I):
        """Vectorized over leading axes of v (..., 3) and I (...)"""
        if np.any(np.asarray(I) < 0):
            raise DomainError("internal energy must be non-negative")
        if self.n == 0:
            return np.zeros(np.broadcast(np.asarray(v)[..., 0], np.asarray(I)).shape)[()]
        return np.exp(self.log_eval(v, I))

    def sqrt_eval(self, v, I):
        if self.n == 0:
            return np.zeros(np.broadcast(np.asarray(v)[..., 0], np.asarray(I)).shape)[()]
        return np.exp(0.5 * self.log_eval(v, I))

    def velocity_part(self, v):
        """Normalized Gaussian (2 pi kT_k)^{-3/2} exp(-|v-u|^2/(2 kT_k))"""
        w = np.asarray(v, dtype=float) - np.asarray(self.u)
        return (2.0 * np.pi * self.kT_k) ** -1.5 * np.exp(-np.sum(w * w, axis=-1) / (2.0 * self.kT_k))

    def internal_part(self, I):
        """Gibbs factor exp(-I/kT_i) / q(T_i)"""
        return np.exp(-np.asarray(I, dtype=float) / self.kT_i) / self._partition

    def with_density(self, n: float) -> 'Maxwellian':
        return replace(self, n=n)

    def centered(self) -> 'Maxwellian':
        return replace(self, u=(0.0, 0.0, 0.0))

    def sample(self, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Velocities (count, 3) from the Gaussian and energies from exp(-I/kT_i) dmu"""
        if count < 1:
            raise ArgumentError("count must be >= 1")
        if self.n <= 0:
            raise DomainError("cannot sample a Maxwellian with zero density")
        v = np.asarray(self.u) + np.sqrt(self.kT_k) * rng.standard_normal((count, 3))
        I = self.law.sample_internal(self.T_i, count, rng, self.k_B)
        return v, I

    def sample_states(self, count: int, rng: np.random.Generator) -> List[State]:
        v, I = self.sample(count, rng)
        return [State(vk, float(Ik)) for vk, Ik in zip(v, I)]

    def to_dict(self) -> Dict[str, Any]:
        return {'n': self.n, 'u': list(self.u), 'T_k': self.T_k, 'T_i': self.T_i,
                'k_B': self.k_B, 'law': self.law.to_dict()}


def maxwellian_from_dict(data: Dict[str, Any], law: EnergyLaw, k_B: float = 1.0) -> Maxwellian:
    """Build a Maxwellian from a config section; a 'k_B' entry wins over the argument"""
    return Maxwellian(n=float(data.get('n', 1.0)), u=tuple(data.get('u', (0.0, 0.0, 0.0))),
                      T_k=float(data.get('T_k', 1.0)), T_i=float(data.get('T_i', 1.0)),
                      law=law, k_B=float(data.get('k_B', k_B)))


def evaluate(M: Maxwellian, v, I):
    return M.eval(v, I)


def sample(M: Maxwellian, count: int, rng: np.random.Generator) -> List[State]:
    return M.sample_states(count, rng)


def total_density(M: Maxwellian, velocity_order: int = 24) -> float:
    """
    int M dv dmu(I) by a Gauss-Hermite product rule in velocity and the law's
    adaptive integration in I; equals n up to quadrature error.
    """
    x, w = special.roots_hermite(velocity_order)
    # exp(-x^2) weight with v = u + sqrt(2 kT_k) x
    s = np.sqrt(2.0 * M.kT_k)
    X, Y, Z = np.meshgrid(x, x, x, indexing='ij')
    W = np.einsum('i,j,k->ijk', w, w, w) * np.exp(X ** 2 + Y ** 2 + Z ** 2) * s ** 3
    v = np.asarray(M.u) + s * np.stack([X, Y, Z], axis=-1)
    velocity = np.sum(W * M.velocity_part(v))
    internal = M.law.integrate(lambda I: float(M.internal_part(I)), T_ref=M.T_i, k_B=M.k_B,
                               rel_tol=1e-11).value
    return float(M.n * velocity * internal)


def sampling_check(M: Maxwellian, count: int, rng: np.random.Generator,
                   n_sigma: float = 4.0) -> VerificationReport:
    """Empirical moments of Maxwellian draws against their exact values"""
    report = VerificationReport('maxwellian-sampling')
    v, I = M.sample(count, rng)
    root = np.sqrt(count)
    w = v - np.asarray(M.u)
    sd = np.sqrt(M.kT_k)
    for axis in range(3):
        mean = float(w[:, axis].mean())
        report.add_check(f'mean_velocity_{axis}', mean, sd / root, n_sigma * sd / root,
                         abs(mean) <= n_sigma * sd / root, kind='statistical')

    energy = np.sum(w * w, axis=1) / 3.0
    energy_sd = M.kT_k * np.sqrt(2.0 / 3.0)
    report.add_statistical('kinetic_temperature', float(energy.mean()), energy_sd / root, M.kT_k, n_sigma)

    mean_I = M.law.mean_internal_energy(M.T_i, M.k_B)
    report.add_statistical('internal_mean', float(I.mean()), float(I.std(ddof=1)) / root, mean_I, n_sigma)

    correlation = float(np.corrcoef(np.sum(w * w, axis=1), I)[0, 1])
    report.add_check('independence', correlation, 1.0 / root, n_sigma / root,
                     abs(correlation) <= n_sigma / root, kind='statistical')
    return report


def normalization_check(M: Maxwellian, tolerance: float = 1e-6) -> VerificationReport:
    report = VerificationReport('maxwellian-normalization')
    total = total_density(M)
    error = abs(total / M.n - 1.0) if M.n > 0 else abs(total)
    report.add_check('total_density', total, error, tolerance, error < tolerance)
    return report
