"""
Resonant collision rules, conservation diagnostics and the (z, A) change of variables
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .exceptions import ArgumentError, DegenerateConfigurationError, DomainError, SingularityError
from .montecarlo import MonteCarloConfig, estimate_columns
from .reports import VerificationReport

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class State:
    v: np.ndarray
    I: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(3)
        if not np.all(np.isfinite(v)):
            raise DomainError("velocity must be finite")
        if not (np.isfinite(self.I) and self.I >= 0):
            raise DomainError(f"internal energy must be non-negative, got {self.I}")
        object.__setattr__(self, 'v', v)


@dataclass(frozen=True)
class CollisionParams:
    sigma: np.ndarray
    I_prime: float

    def __post_init__(self):
        object.__setattr__(self, 'sigma', check_unit(self.sigma, 'sigma'))


@dataclass(frozen=True)
class ZAPoint:
    z: np.ndarray
    A: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).reshape(3)
        norm = np.linalg.norm(z)
        if not (0.0 < norm < 1.0):
            raise DegenerateConfigurationError(f"|z| must lie in (0, 1), got {norm}")
        object.__setattr__(self, 'z', z)
        object.__setattr__(self, 'A', float(np.mod(self.A, 2.0 * np.pi)))


def check_unit(vector, name: str = 'vector', tol: float = UNIT_TOL) -> np.ndarray:
    vector = np.asarray(vector, dtype=float)
    norms = np.linalg.norm(vector, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise ArgumentError(f"{name} must be a unit vector (|{name}| = {np.max(norms)})")
    return vector


# Collision rules

def post_velocities(v, v_star, sigma) -> Tuple[np.ndarray, np.ndarray]:
    """
    v' = (v + v*)/2 + |v - v*|/2 sigma and v'* = (v + v*)/2 - |v - v*|/2 sigma.

    Works on single 3-vectors or on stacks of shape (n, 3).
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = check_unit(sigma, 'sigma')
    center = 0.5 * (v + v_star)
    half = 0.5 * np.linalg.norm(v - v_star, axis=-1)[..., None]
    return center + half * sigma, center - half * sigma


def post_energies(I, I_star, I_prime):
    """I'* = I + I* - I' for I' in [0, I + I*]"""
    I, I_star, I_prime = (np.asarray(x, dtype=float) for x in (I, I_star, I_prime))
    total = I + I_star
    if np.any(I < 0) or np.any(I_star < 0):
        raise DomainError("internal energies must be non-negative")
    if np.any(I_prime < 0) or np.any(I_prime > total):
        raise DomainError("I_prime must lie in [0, I + I_star]")
    result = total - I_prime
    return float(result) if result.ndim == 0 else result


def conservation_residuals(pre: Tuple[State, State], params: CollisionParams) -> Tuple[float, float, float]:
    """Absolute residuals of momentum, kinetic energy and internal energy"""
    first, second = pre
    v_post, v_star_post = post_velocities(first.v, second.v, params.sigma)
    I_star_post = post_energies(first.I, second.I, params.I_prime)

    momentum = float(np.linalg.norm((v_post + v_star_post) - (first.v + second.v)))
    kinetic = abs((v_post @ v_post + v_star_post @ v_star_post) - (first.v @ first.v + second.v @ second.v))
    internal = abs((params.I_prime + I_star_post) - (first.I + second.I))
    return momentum, float(kinetic), float(internal)


def batch_residuals(v, v_star, sigma, I, I_star, I_prime) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized conservation residuals for stacks of collisions"""
    v_post, v_star_post = post_velocities(v, v_star, sigma)
    I_star_post = post_energies(I, I_star, I_prime)
    momentum = np.linalg.norm((v_post + v_star_post) - (v + v_star), axis=-1)
    kinetic = np.abs(np.sum(v_post ** 2 + v_star_post ** 2, axis=-1) - np.sum(v ** 2 + v_star ** 2, axis=-1))
    internal = np.abs((I_prime + I_star_post) - (I + I_star))
    return momentum, kinetic, internal


# (z, A) change of variables

def _plane_basis(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orthonormal basis (e1, e2) of the plane orthogonal to z, built by Gram-Schmidt
    against the coordinate axis least aligned with z.
    """
    z = np.asarray(z, dtype=float)
    zhat = z / np.linalg.norm(z, axis=-1, keepdims=True)
    helper = np.eye(3)[np.argmin(np.abs(zhat), axis=-1)]
    e1 = helper - np.sum(helper * zhat, axis=-1, keepdims=True) * zhat
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(zhat, e1)
    return e1, e2


def za_forward(Theta, sigma) -> ZAPoint:
    """Midpoint z = (Theta + sigma)/2 and the angle A of Theta - z in {z}-perp"""
    Theta = check_unit(Theta, 'Theta')
    sigma = check_unit(sigma, 'sigma')
    if np.linalg.norm(Theta - sigma) < DEGENERACY_TOL or np.linalg.norm(Theta + sigma) < DEGENERACY_TOL:
        raise DegenerateConfigurationError("sigma must differ from +-Theta")
    z = 0.5 * (Theta + sigma)
    perp = Theta - z
    e1, e2 = _plane_basis(z)
    A = np.arctan2(perp @ e2, perp @ e1)
    return ZAPoint(z, A)


def za_inverse(point: ZAPoint) -> Tuple[np.ndarray, np.ndarray]:
    """Theta = z + z_perp(A), sigma = z - z_perp(A) with |z_perp| = sqrt(1 - |z|^2)"""
    z = point.z
    radius = np.sqrt(max(0.0, 1.0 - z @ z))
    e1, e2 = _plane_basis(z)
    perp = radius * (np.cos(point.A) * e1 + np.sin(point.A) * e2)
    return z + perp, z - perp


def za_inverse_batch(z: np.ndarray, A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized za_inverse for z of shape (n, 3) and A of shape (n,)"""
    z = np.asarray(z, dtype=float)
    norms = np.linalg.norm(z, axis=-1)
    if np.any(norms <= 0) or np.any(norms >= 1):
        raise DegenerateConfigurationError("every |z| must lie in (0, 1)")
    radius = np.sqrt(1.0 - norms ** 2)[:, None]
    e1, e2 = _plane_basis(z)
    perp = radius * (np.cos(A)[:, None] * e1 + np.sin(A)[:, None] * e2)
    return z + perp, z - perp


def za_jacobian(z) -> float:
    """Jacobian 4/|z| of the map (z, A) -> (Theta, sigma)"""
    norm = float(np.linalg.norm(np.asarray(z, dtype=float)))
    if norm == 0.0:
        raise SingularityError("the (z, A) Jacobian is singular at z = 0")
    if norm > 1.0 + UNIT_TOL:
        raise DomainError(f"|z| must not exceed 1, got {norm}")
    return 4.0 / norm


def sphere_cap_area(r: float) -> float:
    """Area of {sigma in S^2 : e3 . sigma > 2 r^2 - 1}"""
    if not (0.0 < r < 1.0):
        raise DomainError(f"r must lie in (0, 1), got {r}")
    return 2.0 * np.pi * (2.0 - 2.0 * r * r)


# Sampling

def sample_sphere(rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform points on S^2 from normalized Gaussian draws"""
    draws = rng.standard_normal((count, 3))
    return draws / np.linalg.norm(draws, axis=1, keepdims=True)


def sample_ball(rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform points in the open unit ball"""
    directions = sample_sphere(rng, count)
    radii = rng.random(count) ** (1.0 / 3.0)
    return directions * radii[:, None]


def sample_circle(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * np.pi, size=count)


# Monte Carlo oracles used by the kinematics suites

def random_collisions(rng: np.random.Generator, count: int, speed: float = 1.0,
                      energy: float = 1.0):
    v = rng.normal(0.0, speed, size=(count, 3))
    v_star = rng.normal(0.0, speed, size=(count, 3))
    sigma = sample_sphere(rng, count)
    I = rng.exponential(energy, size=count)
    I_star = rng.exponential(energy, size=count)
    I_prime = rng.random(count) * (I + I_star)
    return v, v_star, sigma, I, I_star, I_prime


def conservation_check(rng: np.random.Generator, count: int = 100_000,
                       tolerance: float = 1e-12) -> VerificationReport:
    """Residuals of momentum, kinetic and internal energy over random collisions"""
    report = VerificationReport('conservation')
    v, v_star, sigma, I, I_star, I_prime = random_collisions(rng, count)
    momentum, kinetic, internal = batch_residuals(v, v_star, sigma, I, I_star, I_prime)

    # residuals relative to the magnitudes involved, capped at the absolute target
    scale_p = np.maximum(1.0, np.linalg.norm(v + v_star, axis=-1))
    scale_e = np.maximum(1.0, np.sum(v ** 2 + v_star ** 2, axis=-1))
    scale_i = np.maximum(1.0, I + I_star)
    for name, residual, scale in (('momentum', momentum, scale_p),
                                  ('kinetic_energy', kinetic, scale_e),
                                  ('internal_energy', internal, scale_i)):
        worst = float(np.max(residual / scale))
        report.add_check(name, worst, float(np.max(residual)), tolerance, worst < tolerance)

    v_post, v_star_post = post_velocities(v, v_star, sigma)
    speed_change = np.abs(np.linalg.norm(v_post - v_star_post, axis=-1) - np.linalg.norm(v - v_star, axis=-1))
    worst = float(np.max(speed_change / np.maximum(1.0, np.linalg.norm(v - v_star, axis=-1))))
    report.add_check('relative_speed', worst, worst, tolerance, worst < tolerance)
    report.add_metric('collisions', count)
    return report


def za_roundtrip_check(rng: np.random.Generator, count: int = 100_000,
                       tolerance: float = 1e-12) -> VerificationReport:
    """Round trips (Theta, sigma) -> (z, A) -> (Theta, sigma) and orthogonality of z and Theta - z"""
    report = VerificationReport('za-roundtrip')
    Theta = sample_sphere(rng, count)
    sigma = sample_sphere(rng, count)
    keep = (np.linalg.norm(Theta - sigma, axis=1) > DEGENERACY_TOL) & \
           (np.linalg.norm(Theta + sigma, axis=1) > DEGENERACY_TOL)
    Theta, sigma = Theta[keep], sigma[keep]

    z = 0.5 * (Theta + sigma)
    e1, e2 = _plane_basis(z)
    perp = Theta - z
    A = np.arctan2(np.sum(perp * e2, axis=1), np.sum(perp * e1, axis=1))
    Theta_back, sigma_back = za_inverse_batch(z, A)

    error = float(max(np.max(np.abs(Theta_back - Theta)), np.max(np.abs(sigma_back - sigma))))
    report.add_check('roundtrip', error, error, tolerance, error < tolerance)

    orthogonality = float(np.max(np.abs(np.sum(z * perp, axis=1))))
    report.add_check('orthogonality', orthogonality, orthogonality, tolerance, orthogonality < tolerance)

    Theta_swap, sigma_swap = za_inverse_batch(z, A + np.pi)
    swap = float(max(np.max(np.abs(Theta_swap - sigma)), np.max(np.abs(sigma_swap - Theta))))
    report.add_check('swap_symmetry', swap, swap, tolerance, swap < tolerance)

    unit = float(max(np.max(np.abs(np.linalg.norm(Theta_back, axis=1) - 1.0)),
                     np.max(np.abs(np.linalg.norm(sigma_back, axis=1) - 1.0))))
    report.add_check('unit_outputs', unit, unit, tolerance, unit < tolerance)
    return report


# Test functions for the pushforward identity on (S^2)^2
PUSHFORWARD_FUNCTIONS = {
    'theta_dot_sigma_sq': lambda T, s: np.sum(T * s, axis=1) ** 2,
    'theta1_plus_sigma3': lambda T, s: (T[:, 0] + s[:, 2]) ** 2,
    'cap_indicator': lambda T, s: (np.sum(T * s, axis=1) > 0.5).astype(float),
}


def jacobian_check(mc: MonteCarloConfig, radii: Sequence[float] = (0.25, 0.5, 0.75)) -> VerificationReport:
    """
    Volume of {(Theta, sigma) : |Theta + sigma|/2 <= r} against 16 pi^2 r^2 and
    the pushforward identity for the test functions on (S^2)^2.
    """
    report = VerificationReport('jacobian', seed=mc.seed)
    radii = np.asarray(radii, dtype=float)
    pair_volume = (4.0 * np.pi) ** 2

    def cap_counts(rng, n):
        Theta = sample_sphere(rng, n)
        sigma = sample_sphere(rng, n)
        half = 0.5 * np.linalg.norm(Theta + sigma, axis=1)
        return pair_volume * (half[:, None] <= radii[None, :])

    estimates = estimate_columns(cap_counts, mc, 'jacobian-volume', columns=radii.size)
    rows = []
    for r, est in zip(radii, estimates):
        exact = 16.0 * np.pi ** 2 * r ** 2
        report.add_statistical(f'volume_r{r:g}', est.value, est.std_err, exact, mc.n_sigma)
        rows.append((r, est.value, est.std_err, exact, est.value / exact))
    report.add_table('volume', ['r', 'estimate', 'std_err', 'exact', 'ratio'], rows)

    names = list(PUSHFORWARD_FUNCTIONS)

    def direct(rng, n):
        Theta = sample_sphere(rng, n)
        sigma = sample_sphere(rng, n)
        return np.column_stack([pair_volume * PUSHFORWARD_FUNCTIONS[k](Theta, sigma) for k in names])

    za_volume = (4.0 * np.pi / 3.0) * 2.0 * np.pi

    def pushed(rng, n):
        z = sample_ball(rng, n)
        A = sample_circle(rng, n)
        Theta, sigma = za_inverse_batch(z, A)
        weight = za_volume * 4.0 / np.linalg.norm(z, axis=1)
        return np.column_stack([weight * PUSHFORWARD_FUNCTIONS[k](Theta, sigma) for k in names])

    lhs = estimate_columns(direct, mc, 'pushforward-direct', columns=len(names))
    rhs = estimate_columns(pushed, mc, 'pushforward-za', columns=len(names))
    for name, left, right in zip(names, lhs, rhs):
        diff = left - right
        report.add_statistical(f'pushforward_{name}', diff.value, diff.std_err, 0.0, mc.n_sigma,
                               direct=left.value, change_of_variables=right.value)
    return report


def sphere_cap_check(mc: MonteCarloConfig, radii: Sequence[float] = (0.5, 0.75)) -> VerificationReport:
    """Cap areas by counting uniform points of S^2 above the cap height"""
    report = VerificationReport('sphere-cap', seed=mc.seed)
    radii = np.asarray(radii, dtype=float)
    heights = 2.0 * radii ** 2 - 1.0

    def counts(rng, n):
        sigma = sample_sphere(rng, n)
        return 4.0 * np.pi * (sigma[:, 2:3] > heights[None, :])

    for r, est in zip(radii, estimate_columns(counts, mc, 'sphere-cap', columns=radii.size)):
        report.add_statistical(f'cap_r{r:g}', est.value, est.std_err, sphere_cap_area(r), mc.n_sigma)
    return report
