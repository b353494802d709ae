"""
Velocity kernels psi and kappa obtained after the (z, A) change of variables.

The same construction serves the monatomic operator K2^m (cross section B^m)
and the velocity factor kappa_k of the polyatomic tensor bound (cross section
b_k): with p = eta - v, lambda = |v| |sin(v, p)| and r = sqrt(rho^2 - |p|^2),

    psi(v, p)      = 8 pi c int_0^inf exp(-(r^2 + lambda^2)/(2 kT)) I0(r lambda / kT)
                     b(sqrt(r^2 + |p|^2), |r^2 - |p|^2| / (r^2 + |p|^2)) r / sqrt(r^2 + |p|^2) dr
    kappa(v, eta)  = exp(-|p|^2/(8 kT)) exp(-(|eta|^2 - |v|^2)^2 / (8 kT |p|^2)) |p|^-1 psi(v, p)
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .exceptions import DomainError, SingularityError
from .kinematics import post_velocities, sample_sphere
from .montecarlo import MCEstimate, MonteCarloConfig, estimate
from .quadrature import adaptive_quad, gauss_legendre, graded_rule, interval_rule, refine, sphere_rule
from .reports import BOUND_CAP, VerificationReport

logger = logging.getLogger(__name__)

# the Gaussian factor of psi is negligible beyond this many standard deviations
PSI_WINDOW = 12.0

# exp(-rho^2/(8 kT)) < exp(-40) beyond rho = sqrt(320 kT)
RHO_WINDOW = np.sqrt(320.0)

Kinetic = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelOrders:
    psi_order: int = 32
    radial_order: int = 48
    polar_order: int = 32
    azimuth_order: int = 16

    def __post_init__(self):
        if min(self.psi_order, self.radial_order, self.polar_order, self.azimuth_order) < 2:
            raise DomainError("quadrature orders must be at least 2")

    def doubled(self) -> 'KernelOrders':
        return KernelOrders(2 * self.psi_order, 2 * self.radial_order, 2 * self.polar_order,
                            2 * self.azimuth_order)


DEFAULT_ORDERS = KernelOrders()


def _unit_rule(order: int):
    x, w = gauss_legendre(order)
    return 0.5 * (x + 1.0), 0.5 * w


class VelocityKernel:
    """
    psi/kappa for a kinetic cross section ``kinetic(rho, |cos|)``, a Maxwellian
    constant ``c`` and the thermal speed squared ``kT`` = k_B T_k / m.
    """

    def __init__(self, kinetic: Kinetic, kT: float, c: float = 1.0,
                 orders: KernelOrders = DEFAULT_ORDERS):
        if kT <= 0:
            raise DomainError("temperature must be positive")
        self.kinetic = kinetic
        self.kT = float(kT)
        self.c = float(c)
        self.orders = orders

    def with_orders(self, orders: KernelOrders) -> 'VelocityKernel':
        return VelocityKernel(self.kinetic, self.kT, self.c, orders)

    # psi

    def _psi_integrand(self, r, lam, P):
        hyp = np.sqrt(r * r + P * P)
        with np.errstate(divide='ignore', invalid='ignore'):
            abs_cos = np.abs(r * r - P * P) / (hyp * hyp)
            ratio = np.where(hyp > 0, r / hyp, 0.0)
        gauss = np.exp(-(r - lam) ** 2 / (2.0 * self.kT)) * special.i0e(r * lam / self.kT)
        return gauss * self.kinetic(hyp, abs_cos) * ratio

    def psi(self, lam, P, order: Optional[int] = None) -> np.ndarray:
        """Vectorized psi from lambda = |v||sin(v, p)| and P = |p|, piecewise Gauss-Legendre"""
        lam = np.asarray(lam, dtype=float)
        P = np.asarray(P, dtype=float)
        shape = np.broadcast(lam, P).shape
        lam = np.broadcast_to(lam, shape).ravel()
        P = np.broadcast_to(P, shape).ravel()
        if np.any(P <= 0):
            raise SingularityError("psi is singular at p = 0")
        width = PSI_WINDOW * np.sqrt(self.kT)
        lo = np.maximum(0.0, lam - width)
        hi = lam + width
        edges = np.sort(np.stack([lo, np.clip(lam, lo, hi), np.clip(P, lo, hi), hi], axis=1), axis=1)
        t, w = _unit_rule(order or self.orders.psi_order)
        total = np.zeros(lam.size)
        for k in range(3):
            a, b = edges[:, k:k + 1], edges[:, k + 1:k + 2]
            r = a + (b - a) * t
            total += np.sum((b - a) * w * self._psi_integrand(r, lam[:, None], P[:, None]), axis=1)
        return (8.0 * np.pi * self.c * total).reshape(shape)

    def psi_adaptive(self, lam: float, P: float, rel_tol: float = 1e-10) -> float:
        if P <= 0:
            raise SingularityError("psi is singular at p = 0")
        width = PSI_WINDOW * np.sqrt(self.kT)
        lo, hi = max(0.0, lam - width), lam + width
        value, _ = adaptive_quad(lambda r: float(self._psi_integrand(r, lam, P)), lo, hi,
                                 rel_tol=rel_tol, points=[lam, P])
        return 8.0 * np.pi * self.c * value

    def psi_mc(self, lam: float, P: float, mc: MonteCarloConfig) -> MCEstimate:
        """Monte Carlo of the r-integral with r drawn from N(lambda, kT)"""
        sd = np.sqrt(self.kT)
        norm = 8.0 * np.pi * self.c * np.sqrt(2.0 * np.pi * self.kT)

        def sampler(rng, n):
            r = lam + sd * rng.standard_normal(n)
            positive = r > 0
            rr = np.where(positive, r, 1.0)
            hyp = np.sqrt(rr * rr + P * P)
            values = special.i0e(rr * lam / self.kT) * self.kinetic(hyp, np.abs(rr * rr - P * P) / hyp ** 2) * rr / hyp
            return norm * np.where(positive, values, 0.0)

        return estimate(sampler, mc, 'psi-mc')

    # kappa

    def kappa_from_geometry(self, P, lam, x) -> np.ndarray:
        """kappa from |p|, lambda and x = (|eta|^2 - |v|^2) / |p|"""
        P = np.asarray(P, dtype=float)
        exponent = -(P * P + np.asarray(x, dtype=float) ** 2) / (8.0 * self.kT)
        return np.exp(exponent) / P * self.psi(lam, P)

    def kappa(self, v, eta) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        eta = np.asarray(eta, dtype=float)
        p = eta - v
        P = np.linalg.norm(p, axis=-1)
        if np.any(P == 0):
            raise SingularityError("kappa is singular on the diagonal eta = v")
        lam = np.linalg.norm(np.cross(v, p), axis=-1) / P
        x = (np.sum(eta * eta, axis=-1) - np.sum(v * v, axis=-1)) / P
        return self.kappa_from_geometry(P, lam, x)

    # Integral operators

    def _shell_rule(self, speed: float, orders: KernelOrders):
        """Nodes (rho, u) and weights for p = rho omega with u = cos(axis, omega), azimuth integrated"""
        rho_max = RHO_WINDOW * np.sqrt(self.kT)
        rho, wr = graded_rule(0.0, rho_max, orders.radial_order)
        polar = orders.polar_order + 8 * int(np.ceil(speed / np.sqrt(self.kT)))
        u, wu = gauss_legendre(polar)
        R, U = np.meshgrid(rho, u, indexing='ij')
        W = 2.0 * np.pi * np.outer(wr * rho ** 2, wu)
        return R.ravel(), U.ravel(), W.ravel()

    def integral_over_eta(self, speed: float, radial: Optional[Callable] = None,
                          orders: Optional[KernelOrders] = None, power: int = 1) -> float:
        """
        int a(|eta|) kappa(v, eta)**power d eta at |v| = speed, for a radial
        profile ``a`` (a = 1 when omitted).
        """
        orders = orders or self.orders
        R, U, W = self._shell_rule(speed, orders)
        lam = speed * np.sqrt(np.maximum(0.0, 1.0 - U * U))
        x = 2.0 * speed * U + R
        values = self.kappa_from_geometry(R, lam, x) ** power
        if radial is not None:
            values = values * radial(np.sqrt(np.maximum(0.0, speed ** 2 + R * R + 2.0 * speed * R * U)))
        return float(np.sum(W * values))

    def integral_over_v(self, speed: float, radial: Optional[Callable] = None,
                        orders: Optional[KernelOrders] = None) -> float:
        """int a(|v|) kappa(v, eta) dv at |eta| = speed, with v = eta - rho omega"""
        orders = orders or self.orders
        R, U, W = self._shell_rule(speed, orders)
        lam = speed * np.sqrt(np.maximum(0.0, 1.0 - U * U))
        x = 2.0 * speed * U - R
        values = self.kappa_from_geometry(R, lam, x)
        if radial is not None:
            values = values * radial(np.sqrt(np.maximum(0.0, speed ** 2 + R * R - 2.0 * speed * R * U)))
        return float(np.sum(W * values))

    def weighted_nodes(self, v, orders: Optional[KernelOrders] = None):
        """
        Nodes eta (N, 3) in shifted spherical coordinates around v and weights
        carrying kappa(v, eta), so that sum weights * h(eta) ~ int h kappa d eta.
        """
        orders = orders or self.orders
        v = np.asarray(v, dtype=float).reshape(3)
        speed = float(np.linalg.norm(v))
        rho_max = RHO_WINDOW * np.sqrt(self.kT)
        rho, wr = graded_rule(0.0, rho_max, orders.radial_order)
        polar = orders.polar_order + 8 * int(np.ceil(speed / np.sqrt(self.kT)))
        sphere = sphere_rule(polar, orders.azimuth_order, axis=v if speed > 0 else None)
        p = rho[:, None, None] * sphere.directions[None, :, :]
        eta = (v + p).reshape(-1, 3)
        weights = np.outer(wr * rho ** 2, sphere.weights).reshape(-1)
        return eta, weights * self.kappa(np.broadcast_to(v, eta.shape), eta)

    def apply(self, h: Callable, v, orders: Optional[KernelOrders] = None) -> float:
        """int h(eta) kappa(v, eta) d eta for a general h"""
        eta, weights = self.weighted_nodes(v, orders)
        return float(weights @ h(eta))

    def direct_mc(self, h: Callable, v, mc: MonteCarloConfig, label: str = 'k2m-direct') -> MCEstimate:
        """
        int h(v') M(v')^{-1/2} M(v)^{1/2} M(v*) b(|v - v*|, |cos|) dv* d sigma with
        M = c exp(-|v|^2/(2 kT)), v* drawn from the normalized Gaussian.
        """
        v = np.asarray(v, dtype=float).reshape(3)
        density = self.c * (2.0 * np.pi * self.kT) ** 1.5
        sd = np.sqrt(self.kT)

        def sampler(rng, n):
            v_star = sd * rng.standard_normal((n, 3))
            sigma = sample_sphere(rng, n)
            vb = np.broadcast_to(v, v_star.shape)
            v_post, _ = post_velocities(vb, v_star, sigma)
            relative = vb - v_star
            rho = np.linalg.norm(relative, axis=1)
            abs_cos = np.abs(np.sum(relative * sigma, axis=1)) / np.where(rho > 0, rho, 1.0)
            growth = (np.sum(v_post ** 2, axis=1) - v @ v) / (4.0 * self.kT)
            return 4.0 * np.pi * density * h(v_post) * np.exp(growth) * self.kinetic(rho, abs_cos)

        return estimate(sampler, mc, label)

    def local_l2(self, radius: float, order: int = 16,
                 orders: Optional[KernelOrders] = None) -> float:
        """int_{|v| <= radius} int kappa(v, eta)^2 d eta dv"""
        s, ws = interval_rule(0.0, radius, order)
        inner = np.array([self.integral_over_eta(x, orders=orders, power=2) for x in s])
        return float(4.0 * np.pi * np.sum(ws * s ** 2 * inner))


# Monatomic operator K2^m

def psi_m_eval(v, p, b_k: Kinetic, T_k: float, c: float = 1.0, k_B: float = 1.0) -> float:
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    P = float(np.linalg.norm(p))
    if P == 0:
        raise SingularityError("psi^m is singular at p = 0")
    lam = float(np.linalg.norm(np.cross(v, p))) / P
    return VelocityKernel(b_k, k_B * T_k, c).psi_adaptive(lam, P)


def kappa_m_eval(v, eta, b_k: Kinetic, T_k: float, c: float = 1.0, k_B: float = 1.0) -> float:
    return float(VelocityKernel(b_k, k_B * T_k, c).kappa(v, eta))


def k2m_kernel(h: Callable, v, b_k: Kinetic, T_k: float, c: float = 1.0, k_B: float = 1.0,
               orders: KernelOrders = DEFAULT_ORDERS) -> float:
    return VelocityKernel(b_k, k_B * T_k, c, orders).apply(h, v)


def k2m_direct(h: Callable, v, b_k: Kinetic, T_k: float, mc: MonteCarloConfig,
               c: float = 1.0, k_B: float = 1.0) -> MCEstimate:
    return VelocityKernel(b_k, k_B * T_k, c).direct_mc(h, v, mc)


def psi_m_bound_check(kernel: VelocityKernel, delta2: float, rng: np.random.Generator,
                      p_grid: Optional[Sequence[float]] = None, directions: int = 16) -> VerificationReport:
    """psi^m(v, p) / (|p| + |p|^{-delta2}) bounded over |p| for random velocities"""
    P = np.logspace(-3.0, 1.5, 46) if p_grid is None else np.asarray(p_grid, dtype=float)
    report = VerificationReport('psi-m-bound')
    speeds = 5.0 * rng.random(directions)
    sines = np.sqrt(1.0 - rng.uniform(-1.0, 1.0, directions) ** 2)
    lam = speeds * sines
    values = kernel.psi(lam[None, :], P[:, None])
    ratios = np.max(values, axis=1) / (P + P ** -delta2)
    report.add_profile('psi_m_ratio', P, ratios, cap=BOUND_CAP, toward='up')
    report.add_profile('psi_m_ratio_small_p', P, ratios, cap=BOUND_CAP, toward='down', table=False)
    return report


def kappa_m_bounds_check(kernel: VelocityKernel, v_speeds: Sequence[float] = (0.0, 1.0, 5.0, 10.0, 20.0),
                         eta_speeds: Sequence[float] = (0.0, 1.0, 5.0, 10.0),
                         l2_radius: float = 5.0) -> VerificationReport:
    """
    (1 + |v|) int kappa^m d eta and int kappa^m dv stay bounded, and the local
    L^2 norm of kappa^m on |v| <= l2_radius converges under refinement.
    """
    report = VerificationReport('kappa-m-bounds')
    speeds = np.asarray(v_speeds, dtype=float)
    over_eta = np.array([kernel.integral_over_eta(s) for s in speeds])
    report.add_profile('one_plus_v_times_eta_integral', speeds + 1.0, (1.0 + speeds) * over_eta,
                       cap=BOUND_CAP, toward='up')

    etas = np.asarray(eta_speeds, dtype=float)
    over_v = np.array([kernel.integral_over_v(s) for s in etas])
    report.add_profile('v_integral', etas + 1.0, over_v, cap=BOUND_CAP, toward='up')

    value, estimates, increments = refine(lambda order: kernel.local_l2(l2_radius, order=order), 8, 4, 1e-3)
    report.add_check('local_l2_refinement', value, increments[-1], 1e-3, bool(np.isfinite(value)))
    report.add_table('local_l2_refinement', ['level', 'estimate'], enumerate(estimates))
    return report
