"""
Quadrature helpers: adaptive scipy quadrature with convergence reporting and the
fixed Gauss rules used by the kernel evaluations
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, special

from .exceptions import ConvergenceError

logger = logging.getLogger(__name__)

# QUADPACK rejects relative tolerances below 50 machine epsilons when epsabs is 0
MIN_REL_TOL = 5e-14


def adaptive_quad(func: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-10,
                  abs_tol: float = 0.0, points: Optional[Sequence[float]] = None,
                  limit: int = 200) -> Tuple[float, float]:
    """
    Integrate ``func`` over the finite interval [a, b] with scipy's QUADPACK wrapper.

    Returns (value, abserr). Raises ConvergenceError carrying the last estimate
    when QUADPACK reports trouble and its error estimate misses the tolerance.
    """
    if b == a:
        return 0.0, 0.0
    rel_tol = max(rel_tol, MIN_REL_TOL)
    kwargs = {'epsabs': abs_tol, 'epsrel': rel_tol, 'limit': limit, 'full_output': 1}
    if points is not None:
        lo, hi = min(a, b), max(a, b)
        inner = sorted({float(p) for p in points if lo < p < hi})
        if inner:
            kwargs['points'] = inner
    result = integrate.quad(func, a, b, **kwargs)
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3:
        target = max(abs_tol, rel_tol * abs(value))
        # roundoff-limited runs still return usable values
        if not np.isfinite(value) or abserr > 100.0 * max(target, 1e-300):
            raise ConvergenceError(
                f"Adaptive quadrature on [{a}, {b}] did not converge: {result[3]}",
                last_estimate=value,
                diagnostics={'abserr': abserr, 'rel_tol': rel_tol, 'abs_tol': abs_tol},
            )
        logger.debug(f"quad warning on [{a}, {b}] accepted: abserr={abserr:.3g}")
    return value, abserr


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]"""
    return leggauss(order)


def interval_rule(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule mapped to [a, b]"""
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def graded_rule(a: float, b: float, order: int, power: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule on [a, b] after the substitution r = a + (b - a) s**power,
    which clusters nodes at ``a`` and tames algebraic endpoint behaviour.
    """
    s, ws = interval_rule(0.0, 1.0, order)
    nodes = a + (b - a) * s ** power
    weights = ws * (b - a) * power * s ** (power - 1.0)
    return nodes, weights


@lru_cache(maxsize=64)
def jacobi_rule(order: int, exponent: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi rule on [-1, 1] for the weight (1 - x**2)**exponent"""
    return special.roots_jacobi(order, exponent, exponent)


@dataclass(frozen=True)
class SphereRule:
    """Product rule on S^2 in (cos theta, phi) around a given polar axis"""
    directions: np.ndarray
    weights: np.ndarray
    cosines: np.ndarray


def orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Rows (e1, e2, e3) with e3 along ``axis``; any frame when axis is zero"""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    e3 = axis / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
    helper = np.zeros(3)
    helper[np.argmin(np.abs(e3))] = 1.0
    e1 = helper - np.dot(helper, e3) * e3
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.vstack([e1, e2, e3])


def sphere_rule(polar_order: int, azimuth_order: int, axis: Optional[np.ndarray] = None,
                sine_power: float = 0.0) -> SphereRule:
    """
    Product rule for integrals over S^2.

    ``sine_power`` p selects Gauss-Jacobi nodes in cos(theta) for the weight
    |sin(theta)|**p, the returned weights having that factor divided back out so
    the rule integrates plain functions; integrands carrying |sin|**p are then
    integrated exactly in the polar variable.
    """
    if sine_power != 0.0:
        x, w = jacobi_rule(polar_order, 0.5 * sine_power)
        w = w / (1.0 - x ** 2) ** (0.5 * sine_power)
    else:
        x, w = gauss_legendre(polar_order)
    phi = 2.0 * np.pi * (np.arange(azimuth_order) + 0.5) / azimuth_order
    wphi = np.full(azimuth_order, 2.0 * np.pi / azimuth_order)

    sin_t = np.sqrt(np.maximum(0.0, 1.0 - x ** 2))
    local = np.stack([
        np.outer(sin_t, np.cos(phi)),
        np.outer(sin_t, np.sin(phi)),
        np.outer(x, np.ones_like(phi)),
    ], axis=-1).reshape(-1, 3)
    frame = orthonormal_frame(axis if axis is not None else np.array([0.0, 0.0, 1.0]))
    directions = local @ frame
    weights = np.outer(w, wphi).reshape(-1)
    cosines = np.repeat(x, azimuth_order)
    return SphereRule(directions, weights, cosines)


@dataclass(frozen=True)
class BallRule:
    """Shifted spherical rule p = rho * omega with the rho**2 Jacobian folded into the weights"""
    radii: np.ndarray
    directions: np.ndarray
    cosines: np.ndarray
    weights: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.radii[:, None] * self.directions


def ball_rule(radius: float, radial_order: int, polar_order: int, azimuth_order: int,
              axis: Optional[np.ndarray] = None) -> BallRule:
    """Rule for integrals of p over the ball |p| <= radius in spherical coordinates"""
    rho, wr = interval_rule(0.0, radius, radial_order)
    sphere = sphere_rule(polar_order, azimuth_order, axis)
    radii = np.repeat(rho, sphere.directions.shape[0])
    directions = np.tile(sphere.directions, (rho.size, 1))
    cosines = np.tile(sphere.cosines, rho.size)
    weights = np.outer(wr * rho ** 2, sphere.weights).reshape(-1)
    return BallRule(radii, directions, cosines, weights)


def refine(estimator: Callable[[int], float], base_order: int, levels: int,
           rel_tol: float) -> Tuple[float, list, list]:
    """
    Evaluate ``estimator`` at orders base, 2*base, 4*base, ... until the relative
    increment drops below ``rel_tol``. Returns (estimate, estimates, increments).
    """
    estimates, increments = [], []
    order = base_order
    for level in range(levels):
        estimates.append(float(estimator(order)))
        if level > 0:
            prev, cur = estimates[-2], estimates[-1]
            increments.append(abs(cur - prev) / max(abs(cur), 1e-300))
            if increments[-1] < rel_tol:
                return estimates[-1], estimates, increments
        order *= 2
    raise ConvergenceError(
        f"Refinement did not reach relative increment {rel_tol} after {levels} levels",
        last_estimate=estimates[-1],
        diagnostics={'estimates': estimates, 'increments': increments},
    )
