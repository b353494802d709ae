"""
Linearized operator L = K - nu_bar Id around a centered two-temperature Maxwellian.

With g = M^{1/2} h the gain/loss split gives K = K1 + K2 + K3:

    K1 g(v, I) = -M^{1/2}(v, I) int g(v*, I*) M^{1/2}(v*, I*) B-bar dv* dmu(I*)
    K2 g(v, I) = int g(eta, J) kappa2(v, I, eta, J) d eta dmu(J)
    K3 g       = K2-type operator obtained by sigma -> -sigma, I' -> I + I* - I'

Because B0 = b_k b_i w, kappa2 factors exactly as kappa_k(v, eta) kappa_iw(I, J):
the velocity factor is the (z, A) kernel of velocity_kernel with cross section
b_k, the energy factor

    kappa_iw(I, J) = int_{(J-I)+}^inf exp((J - I - 2 I*)/(2 kT_i)) b_i(I, I*) w(I, I*, J) dmu(I*).
"""
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .collision_op import Proposal, collision_draw, q_eval
from .cross_section import CrossSectionModel, KineticFactor, averaged_Bbar
from .densities import ProductTestFunction, perturbed_density, random_test_functions, sqrt_maxwellian
from .energy_law import EnergyLaw, mass_rule
from .equilibrium import Maxwellian
from .exceptions import ArgumentError, DomainError, SingularityError
from .kinematics import post_velocities
from .montecarlo import NOISE_FLOOR, MCEstimate, MonteCarloConfig, estimate, family_sigma
from .quadrature import adaptive_quad, gauss_legendre, graded_rule, interval_rule, refine, sphere_rule
from .reports import BOUND_CAP, VerificationReport, profile_max
from .velocity_kernel import (DEFAULT_ORDERS, RHO_WINDOW, KernelOrders, VelocityKernel, kappa_m_eval,
                              psi_m_eval)

logger = logging.getLogger(__name__)

ENERGY_KINDS = ('plain', 'exchange', 'reflected')

# Gaussian velocity factors are below exp(-42) beyond this many thermal speeds
VELOCITY_WINDOW = 13.0

# eta nodes per block when applying the kernel form of K2
KERNEL_CHUNK = 4096

SHIFT_LADDER = (1.0, 0.5, 0.25, 0.125)


@dataclass(frozen=True)
class LinearizedContext:
    """
    Linearization point M (u = 0) and cross section.

    ``a_exponent`` is the envelope parameter a in (0, 1 - gamma/2),
    ``alpha_exponent`` the exponent in (0, (1 - a)/2) used when gamma = 0.
    """
    maxwellian: Maxwellian = field(default_factory=Maxwellian)
    model: CrossSectionModel = field(default_factory=CrossSectionModel)
    a_exponent: float = 0.25
    alpha_exponent: float = 0.2
    orders: KernelOrders = DEFAULT_ORDERS
    energy_order: int = 24

    def __post_init__(self):
        M = self.maxwellian
        if any(M.u):
            raise DomainError("the linearization point must be a centered Maxwellian (u = 0)")
        if M.n <= 0:
            raise DomainError("the linearization point needs a positive density")
        if M.law.to_dict() != self.model.law.to_dict():
            raise ArgumentError("Maxwellian and cross section must share the energy law")
        gamma = self.model.gamma
        if not 0.0 < self.a_exponent < 1.0 - 0.5 * gamma:
            raise DomainError(f"a must lie in (0, {1.0 - 0.5 * gamma:g}), got {self.a_exponent}")
        if gamma == 0.0 and not 0.0 < self.alpha_exponent < 0.5 * (1.0 - self.a_exponent):
            raise DomainError(f"alpha must lie in (0, {0.5 * (1.0 - self.a_exponent):g}) "
                              f"when gamma = 0, got {self.alpha_exponent}")
        if self.energy_order < 2:
            raise DomainError("energy quadrature order must be at least 2")

    @property
    def law(self) -> EnergyLaw:
        return self.maxwellian.law

    @property
    def gamma(self) -> float:
        return self.model.gamma

    @property
    def kT_k(self) -> float:
        return self.maxwellian.kT_k

    @property
    def kT_i(self) -> float:
        return self.maxwellian.kT_i

    @property
    def c(self) -> float:
        return self.maxwellian.constant

    @property
    def decay_exponent(self) -> float:
        """Tail exponent 1 - gamma/2 - a (gamma > 0) or 1 - alpha - a (gamma = 0)"""
        if self.gamma > 0:
            return 1.0 - 0.5 * self.gamma - self.a_exponent
        return 1.0 - self.alpha_exponent - self.a_exponent

    @cached_property
    def velocity(self) -> VelocityKernel:
        return VelocityKernel(self.model.b_k, self.kT_k, self.c, self.orders)

    def with_density(self, n: float) -> 'LinearizedContext':
        return replace(self, maxwellian=self.maxwellian.with_density(n))

    def with_model(self, model: CrossSectionModel) -> 'LinearizedContext':
        return replace(self, model=model)

    def with_orders(self, orders: KernelOrders, energy_order: Optional[int] = None) -> 'LinearizedContext':
        return replace(self, orders=orders, energy_order=energy_order or self.energy_order)


@dataclass(frozen=True)
class KernelSet:
    kappa1: Callable
    psi: Callable
    kappa2: Callable
    kappa_k: Callable
    kappa_i: Callable
    psi_m: Callable
    kappa_m: Callable


def kernel_set(ctx: LinearizedContext) -> KernelSet:
    return KernelSet(
        kappa1=lambda v, I, v_star, I_star: kappa1_eval(ctx, v, I, v_star, I_star),
        psi=lambda v, p, I, I_star, J: psi_eval(ctx, v, p, I, I_star, J),
        kappa2=lambda v, I, eta, J: kappa2_eval(ctx, v, I, eta, J),
        kappa_k=lambda v, eta: kappa_k_eval(ctx, v, eta),
        kappa_i=lambda I, J: kappa_i_eval(ctx, I, J),
        psi_m=lambda v, p: psi_m_eval(v, p, ctx.model.b_k, ctx.kT_k, ctx.c),
        kappa_m=lambda v, eta: kappa_m_eval(v, eta, ctx.model.b_k, ctx.kT_k, ctx.c),
    )


def _vector(v) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(3)


def _energy(I: float) -> float:
    I = float(I)
    if not (np.isfinite(I) and I >= 0):
        raise DomainError(f"internal energy must be finite and non-negative, got {I}")
    return I


# Collision frequency

def _nu_velocity(ctx: LinearizedContext, speed: float) -> float:
    """int exp(-|v*|^2/(2 kT)) b_k-sphere(|v - v*|) dv* in the radial variable s = |v - v*|"""
    model = ctx.model
    constant = model.kinetic.sphere_constant() * model.scale
    if constant == 0.0:
        return 0.0
    kT = ctx.kT_k
    q = model.kinetic.radial_power
    width = VELOCITY_WINDOW * np.sqrt(kT)

    if speed == 0.0:
        def integrand(s):
            return 4.0 * np.pi * s ** (q + 2.0) * np.exp(-s * s / (2.0 * kT))
        value, _ = adaptive_quad(integrand, 0.0, width, rel_tol=1e-11)
        return constant * value

    def integrand(s):
        if s <= 0.0:
            return 0.0
        return (2.0 * np.pi * kT / speed * s ** (q + 1.0) * np.exp(-(speed - s) ** 2 / (2.0 * kT))
                * -np.expm1(-2.0 * speed * s / kT))

    value, _ = adaptive_quad(integrand, max(0.0, speed - width), speed + width, rel_tol=1e-11,
                             points=[speed])
    return constant * value


def _nu_internal(ctx: LinearizedContext, I: float) -> float:
    M = ctx.maxwellian
    model = ctx.model
    return ctx.law.integrate(lambda I_star: np.exp(-I_star / M.kT_i) * model.averaged_internal(I, I_star),
                             T_ref=M.T_i, k_B=M.k_B, rel_tol=1e-11).value


def nu_bar(ctx: LinearizedContext, v, I: float) -> float:
    """
    nu_bar(v, I) = int M(v*, I*) B-bar(v, v*, I, I*) dv* dmu(I*), the product of a
    radial velocity integral and an energy integral.
    """
    speed = float(np.linalg.norm(_vector(v)))
    I = _energy(I)
    return ctx.c * _nu_velocity(ctx, speed) * _nu_internal(ctx, I)


def _unit_proposal(ctx: LinearizedContext) -> Proposal:
    return Proposal(ctx.maxwellian.with_density(1.0))


def nu_bar_mc(ctx: LinearizedContext, v, I: float, mc: MonteCarloConfig,
              label: str = 'nu-bar') -> MCEstimate:
    """Partners from M/n, sigma uniform and I' uniform in mu on [0, I + I*]"""
    v = _vector(v)
    I = _energy(I)
    proposal = _unit_proposal(ctx)
    n = ctx.maxwellian.n

    def sampler(rng, count):
        v_star, I_star, sigma, total, m_total, J = collision_draw(rng, count, proposal, ctx.law, I,
                                                                  mc.stratified)
        B = ctx.model.eval_B_batch(np.broadcast_to(v, v_star.shape), v_star, I, I_star, J, sigma)
        return n * 4.0 * np.pi * m_total * B

    return estimate(sampler, mc, label)


# K1

def _kappa1_batch(ctx: LinearizedContext, v, I, v_star, I_star) -> np.ndarray:
    """-M^{1/2} M*^{1/2} B-bar with B-bar in factorized form, broadcast over the arguments"""
    model = ctx.model
    rho = np.linalg.norm(np.asarray(v, dtype=float) - np.asarray(v_star, dtype=float), axis=-1)
    with np.errstate(divide='ignore'):
        radial = np.power(rho, model.kinetic.radial_power)
    bbar = model.kinetic.sphere_constant() * model.scale * radial * model.averaged_internal_batch(I, I_star)
    M = ctx.maxwellian
    return -M.sqrt_eval(v, I) * M.sqrt_eval(v_star, I_star) * bbar


def kappa1_eval(ctx: LinearizedContext, v, I: float, v_star, I_star: float) -> float:
    """kappa1 with B-bar from the tensor quadrature of averaged_Bbar"""
    v, v_star = _vector(v), _vector(v_star)
    I, I_star = _energy(I), _energy(I_star)
    M = ctx.maxwellian
    bbar = averaged_Bbar(ctx.model, v, v_star, I, I_star)
    return float(-M.sqrt_eval(v, I) * M.sqrt_eval(v_star, I_star) * bbar)


def _shifted_nodes(center: np.ndarray, radial, polar_order: int, azimuth_order: int,
                   axis: Optional[np.ndarray]):
    """Points center + s omega with weights s^2 ds domega"""
    s, ws = radial
    sphere = sphere_rule(polar_order, azimuth_order, axis=axis)
    points = (center + s[:, None, None] * sphere.directions[None, :, :]).reshape(-1, 3)
    weights = np.outer(ws * s ** 2, sphere.weights).reshape(-1)
    return points, weights


def k1_direct(ctx: LinearizedContext, g: Callable, v, I: float,
              orders: Optional[KernelOrders] = None, energy_order: Optional[int] = None) -> float:
    """
    -M^{1/2}(v, I) int g* M*^{1/2} B-bar dv* dmu(I*), velocities in spherical
    coordinates around v along v, energies by the rule for exp(-I*/(2 kT_i)).
    """
    orders = orders or ctx.orders
    energy_order = energy_order or ctx.energy_order
    v = _vector(v)
    I = _energy(I)
    M = ctx.maxwellian
    model = ctx.model
    speed = float(np.linalg.norm(v))
    sd = np.sqrt(ctx.kT_k)
    reach = speed + VELOCITY_WINDOW * sd
    polar = 2 * orders.polar_order + 8 * int(np.ceil(speed / sd))
    v_star, wv = _shifted_nodes(v, interval_rule(0.0, reach, orders.radial_order),
                                polar, 4 * orders.azimuth_order, v if speed > 0 else None)
    I_star, wI = ctx.law.energy_rule(2.0 * M.T_i, energy_order, M.k_B)

    rho = np.linalg.norm(v_star - v, axis=1)
    sphere = model.kinetic.sphere_constant() * model.scale * np.power(rho, model.kinetic.radial_power)
    internal = model.averaged_internal_batch(I, I_star)
    values = g(v_star[:, None, :], I_star[None, :]) * M.sqrt_eval(v_star[:, None, :], I_star[None, :])
    integral = (wv * sphere) @ values @ (wI * internal)
    return float(-M.sqrt_eval(v, I) * integral)


def k1_kernel(ctx: LinearizedContext, g: Callable, v, I: float,
              orders: Optional[KernelOrders] = None, energy_order: Optional[int] = None) -> float:
    """int g kappa1 dv* dmu(I*) on a graded radial rule with a fixed polar axis"""
    orders = orders or ctx.orders
    energy_order = (energy_order or ctx.energy_order) + 8
    v = _vector(v)
    I = _energy(I)
    M = ctx.maxwellian
    speed = float(np.linalg.norm(v))
    sd = np.sqrt(ctx.kT_k)
    reach = speed + VELOCITY_WINDOW * sd
    polar = 2 * orders.polar_order + 8 * int(np.ceil(speed / sd))
    v_star, wv = _shifted_nodes(v, graded_rule(0.0, reach, orders.radial_order + 8),
                                polar, 4 * orders.azimuth_order, None)
    I_star, wI = ctx.law.energy_rule(2.0 * M.T_i, energy_order, M.k_B)
    kernel = _kappa1_batch(ctx, v, I, v_star[:, None, :], I_star[None, :])
    return float(wv @ (kernel * g(v_star[:, None, :], I_star[None, :])) @ wI)


def hs_norm_kappa1(ctx: LinearizedContext, rel_tol: float = 1e-4, base_order: int = 8,
                   levels: int = 6) -> Tuple[float, Dict]:
    """
    int kappa1^2 over (v, I, v*, I*) in the coordinates V = v - v*, xi = v + v*
    (dv dv* = dV dxi / 8), refined by order doubling.
    """
    M = ctx.maxwellian
    model = ctx.model
    kT = ctx.kT_k
    q = model.kinetic.radial_power
    sphere = model.kinetic.sphere_constant() * model.scale
    reach = RHO_WINDOW * np.sqrt(kT)

    def estimator(order: int) -> float:
        s, ws = graded_rule(0.0, reach, order)
        relative = 4.0 * np.pi * sphere ** 2 * np.sum(ws * s ** (2.0 * q + 2.0) * np.exp(-s * s / (4.0 * kT)))
        x, wx = interval_rule(0.0, reach, order)
        center = 4.0 * np.pi * np.sum(wx * x * x * np.exp(-x * x / (4.0 * kT)))
        I, w = ctx.law.energy_rule(M.T_i, order, M.k_B)
        w = w * np.exp(-I / M.kT_i)
        A = model.averaged_internal_batch(I[:, None], I[None, :])
        energy = float(w @ (A * A) @ w)
        return M.constant ** 2 * relative * center / 8.0 * energy

    value, estimates, increments = refine(estimator, base_order, levels, rel_tol)
    orders = [base_order * 2 ** k for k in range(len(estimates))]
    record = {
        'orders': orders,
        'estimates': estimates,
        'increments': increments,
        'ratio_to_limit': [abs(e - value) / max(abs(value), 1e-300) for e in estimates],
    }
    logger.debug(f"HS norm of kappa1: {value:.8g} after {len(estimates)} levels")
    return value, record


# K2 / K3 by Monte Carlo

def _log_weight(ctx: LinearizedContext, v, I, w, J):
    """log of M^{1/2}(v, I) / M^{1/2}(w, J)"""
    return ((np.sum(w * w, axis=-1) - np.dot(v, v)) / (4.0 * ctx.kT_k)
            + (np.asarray(J) - I) / (2.0 * ctx.kT_i))


def _density_ratio(law: EnergyLaw, top, bottom) -> np.ndarray:
    numerator = law.density(np.maximum(top, 0.0))
    denominator = law.density(bottom)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(denominator > 0, numerator / np.where(denominator > 0, denominator, 1.0), 0.0)


def _gain_sampler(ctx: LinearizedContext, g: Callable, v: np.ndarray, I: float, stratified: bool,
                  reflected: bool = False):
    proposal = _unit_proposal(ctx)
    law, model = ctx.law, ctx.model
    n = ctx.maxwellian.n
    reweight = reflected and not law.is_lebesgue

    def sampler(rng, count):
        v_star, I_star, sigma, total, m_total, J = collision_draw(rng, count, proposal, law, I, stratified)
        vb = np.broadcast_to(v, v_star.shape)
        v_post, _ = post_velocities(vb, v_star, sigma)
        B = model.eval_B_batch(vb, v_star, I, I_star, J, sigma)
        values = n * 4.0 * np.pi * m_total * B * g(v_post, J) * np.exp(_log_weight(ctx, v, I, v_post, J))
        if reweight:
            values = values * _density_ratio(law, total - J, J)
        return values

    return sampler


def k2_direct(ctx: LinearizedContext, g: Callable, v, I: float, mc: MonteCarloConfig,
              label: str = 'k2') -> MCEstimate:
    """
    K2 g(v, I) = int g(v', J) M^{-1/2}(v', J) M^{1/2}(v, I) M(v*, I*) B dv* dmu(I*) dmu(J) dsigma
    with the energy weights combined as exp((J - I - 2 I*)/(2 kT_i)).
    """
    v = _vector(v)
    I = _energy(I)
    return estimate(_gain_sampler(ctx, g, v, I, mc.stratified), mc, label)


def k3_direct(ctx: LinearizedContext, g: Callable, v, I: float, mc: MonteCarloConfig,
              mode: str = 'direct', label: Optional[str] = None) -> MCEstimate:
    """
    K3 g(v, I) = int g(v'*, I + I* - I') M^{-1/2}(v'*, ...) M^{1/2}(v, I) M* B.

    ``substituted`` evaluates it on the K2 sample path after sigma -> -sigma,
    I' -> I + I* - I' (with the density ratio of mu for non-constant laws);
    with the K2 label the draws are the very same ones.
    """
    v = _vector(v)
    I = _energy(I)
    if mode == 'substituted':
        return estimate(_gain_sampler(ctx, g, v, I, mc.stratified, reflected=True), mc, label or 'k2')
    if mode != 'direct':
        raise ArgumentError(f"unknown K3 mode '{mode}', expected 'direct' or 'substituted'")

    proposal = _unit_proposal(ctx)
    law, model = ctx.law, ctx.model
    n = ctx.maxwellian.n

    def sampler(rng, count):
        v_star, I_star, sigma, total, m_total, J = collision_draw(rng, count, proposal, law, I, mc.stratified)
        vb = np.broadcast_to(v, v_star.shape)
        _, v_star_post = post_velocities(vb, v_star, sigma)
        J_star = np.maximum(total - J, 0.0)
        B = model.eval_B_batch(vb, v_star, I, I_star, J, sigma)
        return (n * 4.0 * np.pi * m_total * B * g(v_star_post, J_star)
                * np.exp(_log_weight(ctx, v, I, v_star_post, J_star)))

    return estimate(sampler, mc, label or 'k3')


def k_direct(ctx: LinearizedContext, g: Callable, v, I: float, mc: MonteCarloConfig,
             label: str = 'k') -> MCEstimate:
    """K g = int (h' + h'* - h*) M^{1/2} M* B in a single integral, h = g / M^{1/2}"""
    v = _vector(v)
    I = _energy(I)
    proposal = _unit_proposal(ctx)
    law, model = ctx.law, ctx.model
    n = ctx.maxwellian.n

    def sampler(rng, count):
        v_star, I_star, sigma, total, m_total, J = collision_draw(rng, count, proposal, law, I, mc.stratified)
        vb = np.broadcast_to(v, v_star.shape)
        v_post, v_star_post = post_velocities(vb, v_star, sigma)
        J_star = np.maximum(total - J, 0.0)
        B = model.eval_B_batch(vb, v_star, I, I_star, J, sigma)
        bracket = (g(v_post, J) * np.exp(_log_weight(ctx, v, I, v_post, J))
                   + g(v_star_post, J_star) * np.exp(_log_weight(ctx, v, I, v_star_post, J_star))
                   - g(v_star, I_star) * np.exp(_log_weight(ctx, v, I, v_star, I_star)))
        return n * 4.0 * np.pi * m_total * B * bracket

    return estimate(sampler, mc, label)


# Kernel forms

def psi_eval(ctx: LinearizedContext, v, p, I: float, I_star: float, J: float) -> float:
    """psi(v, p, I, I*, J) = psi_k(lambda, |p|) b_i(I, I*) w(I, I*, J) on J <= I + I*"""
    v, p = _vector(v), _vector(p)
    I, I_star, J = _energy(I), _energy(I_star), _energy(J)
    P = float(np.linalg.norm(p))
    if P == 0.0:
        raise SingularityError("psi is singular at p = 0")
    if J > I + I_star:
        return 0.0
    lam = float(np.linalg.norm(np.cross(v, p))) / P
    internal = float(ctx.model.b_i(I, I_star) * ctx.model.exchange_weight(I, I_star, J))
    return ctx.velocity.psi_adaptive(lam, P) * internal


def kappa_k_eval(ctx: LinearizedContext, v, eta) -> float:
    return float(ctx.velocity.kappa(_vector(v), _vector(eta)))


def energy_kernel(ctx: LinearizedContext, I: float, J: float, kind: str = 'plain',
                  rel_tol: float = 1e-10) -> float:
    """
    int_{(J-I)+}^inf exp((J - I - 2 I*)/(2 kT_i)) b_i(I, I*) W dmu(I*) with W = 1
    (``plain``, kappa_i), W = w(I, I*, J) (``exchange``, kappa_iw) or
    W = w rho(I + I* - J)/rho(J) (``reflected``, kernel of K3).
    """
    if kind not in ENERGY_KINDS:
        raise ArgumentError(f"unknown energy kernel '{kind}', expected one of {ENERGY_KINDS}")
    I, J = _energy(I), _energy(J)
    if I == 0.0 and J == 0.0:
        raise SingularityError("energy kernels are not evaluated at I = J = 0")
    law, model = ctx.law, ctx.model
    M = ctx.maxwellian
    kT = ctx.kT_i
    weighted = kind != 'plain' and model.exchange > 0.0
    reflected = kind == 'reflected' and not law.is_lebesgue
    if reflected:
        rho_J = float(law.density(J))
        if rho_J == 0.0:
            return 0.0
    s = max(J - I, 0.0)

    def integrand(I_star):
        value = np.exp(-(I_star - s) / kT) * model.b_i(I, I_star)
        if weighted:
            value = value * model.exchange_weight(I, I_star, J)
        if reflected:
            value = value * law.density(I + I_star - J) / rho_J
        return float(value)

    result = law.integrate(integrand, lower=s, T_ref=M.T_i, k_B=M.k_B, rel_tol=rel_tol)
    return float(np.exp((J - I - 2.0 * s) / (2.0 * kT)) * result.value)


def kappa_i_eval(ctx: LinearizedContext, I: float, J: float) -> float:
    return energy_kernel(ctx, I, J, 'plain')


def kappa_iw(ctx: LinearizedContext, I: float, J: float) -> float:
    return energy_kernel(ctx, I, J, 'exchange')


def kappa_i3(ctx: LinearizedContext, I: float, J: float) -> float:
    return energy_kernel(ctx, I, J, 'reflected')


def _check_off_diagonal(v: np.ndarray, eta: np.ndarray) -> None:
    if np.array_equal(v, eta):
        raise SingularityError("kernels are singular on the diagonal eta = v")


def kappa2_eval(ctx: LinearizedContext, v, I: float, eta, J: float) -> float:
    """
    kappa2 = int exp((J - I - 2 I*)/(2 kT_i)) exp(-|p|^2/(8 kT)) exp(-x^2/(8 kT)) psi / |p| dmu(I*),
    evaluated as kappa_k(v, eta) kappa_iw(I, J)
    """
    v, eta = _vector(v), _vector(eta)
    _check_off_diagonal(v, eta)
    return kappa_k_eval(ctx, v, eta) * energy_kernel(ctx, I, J, 'exchange')


def kappa3_eval(ctx: LinearizedContext, v, I: float, eta, J: float) -> float:
    """Kernel of K3 in K2 form"""
    v, eta = _vector(v), _vector(eta)
    _check_off_diagonal(v, eta)
    return kappa_k_eval(ctx, v, eta) * energy_kernel(ctx, I, J, 'reflected')


def kappa2_defining(ctx: LinearizedContext, v, I: float, eta, J: float, rel_tol: float = 1e-10) -> float:
    """
    kappa2 straight from its definition: the dmu(I*) integral of
    exp((J - I - 2 I*)/(2 kT_i)) exp(-(|p|^2 + x^2)/(8 kT)) psi(v, p, I, I*, J) / |p|
    with psi re-evaluated at every I* node.
    """
    v, eta = _vector(v), _vector(eta)
    _check_off_diagonal(v, eta)
    I, J = _energy(I), _energy(J)
    p = eta - v
    P = float(np.linalg.norm(p))
    x = (float(eta @ eta) - float(v @ v)) / P
    kT, kT_i = ctx.kT_k, ctx.kT_i
    velocity = np.exp(-(P * P + x * x) / (8.0 * kT)) / P
    s = max(J - I, 0.0)
    law = ctx.law

    def integrand(I_star):
        return (np.exp(-(I_star - s) / kT_i) * float(law.density(I_star))
                * psi_eval(ctx, v, p, I, I_star, J))

    value, _ = adaptive_quad(integrand, s, s + 60.0 * kT_i, rel_tol=rel_tol)
    return float(np.exp((J - I - 2.0 * s) / (2.0 * kT_i)) * velocity * value)


def transfer_rule(ctx: LinearizedContext, I: float, kind: str = 'exchange',
                  order: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes J and weights W with sum W F(J) ~ int F(J) kappa(I, J) dmu(J).

    The order of integration is swapped: I* runs over the rule for
    exp(-I*/(2 kT_i)), J over the mass variable of [0, I + I*]. For the
    reflected kernel the inner variable is I + I* - J.
    """
    if kind not in ENERGY_KINDS:
        raise ArgumentError(f"unknown energy kernel '{kind}', expected one of {ENERGY_KINDS}")
    I = _energy(I)
    order = order or ctx.energy_order
    law, model = ctx.law, ctx.model
    M = ctx.maxwellian
    I_star, w_star = law.energy_rule(2.0 * M.T_i, order, M.k_B)
    total = I + I_star
    m_total = np.asarray(law.mass(total), dtype=float)
    t, wt = interval_rule(0.0, 1.0, order)
    inner = np.asarray(law.inverse_mass(m_total[:, None] * t), dtype=float)
    nodes = total[:, None] - inner if kind == 'reflected' else inner
    nodes = np.clip(nodes, 0.0, total[:, None])

    outer = w_star * model.b_i(I, I_star) * m_total
    weights = outer[:, None] * wt * np.exp((nodes - I - 2.0 * I_star[:, None]) / (2.0 * M.kT_i))
    if kind != 'plain':
        weights = weights * model.exchange_weight(I, I_star[:, None], nodes)
    return nodes.ravel(), weights.ravel()


def energy_transfer(ctx: LinearizedContext, F: Callable, I_values, kind: str = 'exchange',
                    order: Optional[int] = None) -> np.ndarray:
    """int F(J) kappa(I, J) dmu(J) for each I"""
    I_values = np.atleast_1d(np.asarray(I_values, dtype=float))
    out = np.empty(I_values.shape)
    for idx, I in np.ndenumerate(I_values):
        nodes, weights = transfer_rule(ctx, I, kind, order)
        out[idx] = weights @ F(nodes)
    return out


def k2_kernel(ctx: LinearizedContext, g: Callable, v, I: float,
              orders: Optional[KernelOrders] = None, energy_order: Optional[int] = None,
              kind: str = 'exchange') -> float:
    """int g(eta, J) kappa2(v, I, eta, J) d eta dmu(J), eta = v + p in spherical coordinates"""
    eta, wv = ctx.velocity.weighted_nodes(_vector(v), orders)
    J, W = transfer_rule(ctx, I, kind, energy_order)
    total = 0.0
    for start in range(0, eta.shape[0], KERNEL_CHUNK):
        block = eta[start:start + KERNEL_CHUNK]
        total += wv[start:start + KERNEL_CHUNK] @ g(block[:, None, :], J[None, :]) @ W
    return float(total)


def k3_kernel(ctx: LinearizedContext, g: Callable, v, I: float,
              orders: Optional[KernelOrders] = None, energy_order: Optional[int] = None) -> float:
    return k2_kernel(ctx, g, v, I, orders, energy_order, kind='reflected')


def k_kernel(ctx: LinearizedContext, g: Callable, v, I: float) -> float:
    """(K1 + K2 + K3) g evaluated piecewise by quadrature"""
    return k1_direct(ctx, g, v, I) + k2_kernel(ctx, g, v, I) + k3_kernel(ctx, g, v, I)


def linearized_apply(ctx: LinearizedContext, g: Callable, v, I: float) -> float:
    """L g = K g - nu_bar g"""
    return k_kernel(ctx, g, v, I) - nu_bar(ctx, v, I) * float(g(_vector(v), I))


# Checks

def _random_points(rng: np.random.Generator, count: int, radius: float, kT_i: float):
    directions = rng.standard_normal((count, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    v = radius * rng.random(count)[:, None] ** (1.0 / 3.0) * directions
    I = 0.05 + rng.exponential(kT_i, size=count)
    return v, I


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _kappa_i_fixed(ctx: LinearizedContext, I: np.ndarray, J: np.ndarray, order: int = 48):
    """
    kappa_i and kappa_iw for arrays of (I, J) on one shared positive rule in I*,
    so that kappa_iw <= kappa_i holds node by node.
    """
    law, model = ctx.law, ctx.model
    kT = ctx.kT_i
    t, w = np.polynomial.laguerre.laggauss(order)
    s = np.maximum(J - I, 0.0)
    I_star = s[:, None] + kT * t[None, :]
    weights = kT * w * law.density(I_star) * np.exp((J - I - 2.0 * s) / (2.0 * kT))[:, None]
    plain = weights * model.b_i(I[:, None], I_star)
    exchange = plain * model.exchange_weight(I[:, None], I_star, J[:, None])
    return plain.sum(axis=1), exchange.sum(axis=1)


def tensor_bound_check(ctx: LinearizedContext, rng: np.random.Generator,
                       samples: int = 10_000) -> VerificationReport:
    """kappa2 <= kappa_k kappa_i on random tuples, an exact inequality"""
    report = VerificationReport('tensor-bound')
    v = rng.normal(0.0, 1.5, size=(samples, 3))
    eta = v + rng.normal(0.0, 1.5, size=(samples, 3))
    I = rng.exponential(ctx.kT_i, size=samples) + 1e-3
    J = rng.exponential(ctx.kT_i, size=samples) + 1e-3
    kappa_k = ctx.velocity.kappa(v, eta)
    plain, exchange = _kappa_i_fixed(ctx, I, J)
    kappa2 = kappa_k * exchange
    bound = kappa_k * plain
    violations = int(np.sum(kappa2 > bound))
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(bound > 0, kappa2 / bound, 0.0)
    report.add_check('kappa2_below_tensor', float(np.max(ratio)), float(violations), 0.0,
                     violations == 0 and bool(np.all(np.isfinite(kappa2))), kind='exact',
                     samples=samples)
    report.add_metric('mean_ratio', float(np.mean(ratio)))
    return report


def kappa2_definition_check(ctx: LinearizedContext, rng: np.random.Generator, points: int = 4,
                            tolerance: float = 1e-6) -> VerificationReport:
    """
    kappa2 from its dmu(I*) definition against the product kappa_k kappa_iw,
    and against the tensor bound kappa_k kappa_i, at random off-diagonal points.
    """
    report = VerificationReport('kappa2-definition')
    v, I = _random_points(rng, points, 3.0, ctx.kT_i)
    eta, J = _random_points(rng, points, 3.0, ctx.kT_i)
    for k in range(points):
        defining = kappa2_defining(ctx, v[k], I[k], eta[k], J[k])
        product = kappa2_eval(ctx, v[k], I[k], eta[k], J[k])
        error = _relative(defining, product)
        report.add_check(f'product_form_{k}', defining, error, tolerance, error < tolerance,
                         kind='quadrature', product=product)
        bound = kappa_k_eval(ctx, v[k], eta[k]) * kappa_i_eval(ctx, I[k], J[k])
        report.add_check(f'below_tensor_{k}', defining, bound, bound * (1.0 + tolerance),
                         bool(defining <= bound * (1.0 + tolerance)), kind='bound')
    return report


def _kappa_i_envelope(ctx: LinearizedContext, I, J):
    beta2 = ctx.law.envelope_beta2
    a = ctx.a_exponent
    decay = np.exp(-np.abs(J - I) / (4.0 * ctx.kT_i))
    if ctx.gamma > 0:
        return decay * (1.0 + I) ** (0.5 * ctx.gamma - beta2 + a - 1.0)
    alpha = ctx.alpha_exponent
    return decay * I ** -alpha * (1.0 + I) ** (alpha - beta2 + a - 1.0)


def kappa_i_bound_check(ctx: LinearizedContext, I_grid: Optional[Sequence[float]] = None,
                        J_grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """kappa_i against its envelope: sup over J profiled in I at both ends"""
    I_grid = np.logspace(-3.0, 2.0, 26) if I_grid is None else np.asarray(I_grid, dtype=float)
    J_grid = np.logspace(-3.0, 2.0, 26) if J_grid is None else np.asarray(J_grid, dtype=float)
    if np.any(I_grid <= 0) or np.any(J_grid <= 0):
        raise ArgumentError("energy grids must be positive")
    report = VerificationReport('kappa-i-bound')
    ratios = np.array([[kappa_i_eval(ctx, I, J) / _kappa_i_envelope(ctx, I, J) for J in J_grid]
                       for I in I_grid])
    profile = ratios.max(axis=1)
    report.add_profile('kappa_i_large_I', I_grid, profile, cap=BOUND_CAP, toward='up')
    report.add_profile('kappa_i_small_I', I_grid, profile, cap=BOUND_CAP, toward='down', table=False)
    report.add_metric('branch', 'gamma>0' if ctx.gamma > 0 else 'gamma=0')
    return report


def kappa_i_integral_check(ctx: LinearizedContext, I_grid: Optional[Sequence[float]] = None,
                           J_grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """
    int kappa_i dmu(J) <= C (1 + I)^{gamma/2 + a - 1} and int kappa_i dmu(I) <= C
    (gamma > 0); I^{-alpha}-weighted versions when gamma = 0.
    """
    I_grid = np.logspace(-3.0, 2.0, 21) if I_grid is None else np.asarray(I_grid, dtype=float)
    J_grid = np.logspace(-2.0, 2.0, 9) if J_grid is None else np.asarray(J_grid, dtype=float)
    report = VerificationReport('kappa-i-integrals')
    gamma, a, alpha = ctx.gamma, ctx.a_exponent, ctx.alpha_exponent
    M = ctx.maxwellian

    rows = np.array([np.sum(transfer_rule(ctx, I, 'plain', 32)[1]) for I in I_grid])
    if gamma > 0:
        envelope = (1.0 + I_grid) ** (0.5 * gamma + a - 1.0)
    else:
        envelope = I_grid ** -alpha * (1.0 + I_grid) ** (alpha + a - 1.0)
    report.add_profile('row_integral', I_grid, rows / envelope, cap=BOUND_CAP, toward='up')
    report.add_profile('row_integral_small_I', I_grid, rows / envelope, cap=BOUND_CAP, toward='down',
                       table=False)

    weight = (lambda I: 1.0) if gamma > 0 else (lambda I: I ** -alpha if I > 0 else 0.0)

    def column(J):
        return ctx.law.integrate(lambda I: weight(I) * kappa_i_eval(ctx, I, J) if I > 0 else 0.0,
                                 T_ref=2.0 * M.T_i, k_B=M.k_B, rel_tol=1e-6).value

    columns = np.array([column(J) for J in J_grid])
    report.add_profile('column_integral', J_grid, columns, cap=BOUND_CAP, toward='up')
    report.add_profile('column_integral_small_J', J_grid, columns, cap=BOUND_CAP, toward='down',
                       table=False)
    return report


def kappa_i_l2_check(ctx: LinearizedContext, radii: Sequence[float] = (10.0, 20.0, 40.0, 80.0),
                     order: int = 32) -> VerificationReport:
    """
    int_0^R int_0^R kappa_i^2 dmu dmu for growing R. Diagnostic only: global
    square integrability is only expected for gamma < 1.
    """
    report = VerificationReport('kappa-i-l2')
    law = ctx.law
    values = []
    for R in radii:
        x, w = graded_rule(0.0, float(R), order)
        w = w * law.density(x)
        I, J = np.meshgrid(x, x, indexing='ij')
        plain, _ = _kappa_i_fixed(ctx, I.ravel(), J.ravel())
        values.append(float(np.outer(w, w).ravel() @ plain ** 2))
    report.add_table('kappa_i_l2', ['radius', 'integral'], zip(radii, values))
    report.add_metric('l2_integrals', values)
    report.add_metric('applicable', bool(ctx.gamma < 1.0))
    if len(values) > 1 and values[-1] > 0:
        report.add_metric('last_relative_increment', abs(values[-1] - values[-2]) / values[-1])
    return report


def kappa2_integral_check(ctx: LinearizedContext, speeds: Sequence[float] = (0.0, 1.0, 3.0, 6.0),
                          energies: Sequence[float] = (0.01, 0.1, 1.0, 10.0, 50.0)) -> VerificationReport:
    """
    int kappa2 d eta dmu(J) <= C (1 + I + |v|)^{-(1 - gamma/2 - a)} (I^{-alpha} and
    1 - alpha - a when gamma = 0) and int kappa2 dv dmu(I) <= C, using the product form.
    """
    report = VerificationReport('kappa2-integrals')
    M = ctx.maxwellian
    speeds = np.asarray(speeds, dtype=float)
    energies = np.asarray(energies, dtype=float)
    over_eta = np.array([ctx.velocity.integral_over_eta(s) for s in speeds])
    over_v = np.array([ctx.velocity.integral_over_v(s) for s in speeds])
    rows = np.array([np.sum(transfer_rule(ctx, I, 'exchange')[1]) for I in energies])
    columns = np.array([ctx.law.integrate(lambda I: kappa_iw(ctx, I, J) if I > 0 else 0.0,
                                          T_ref=2.0 * M.T_i, k_B=M.k_B, rel_tol=1e-6).value
                        for J in energies])

    S, E = np.meshgrid(speeds, energies, indexing='ij')
    forward = np.outer(over_eta, rows)
    if ctx.gamma > 0:
        envelope = (1.0 + E + S) ** -(1.0 - 0.5 * ctx.gamma - ctx.a_exponent)
    else:
        envelope = E ** -ctx.alpha_exponent * (1.0 + E + S) ** -(1.0 - ctx.alpha_exponent - ctx.a_exponent)
    keys, profile = profile_max((1.0 + E + S).ravel(), (forward / envelope).ravel())
    report.add_profile('eta_J_integral', keys, profile, cap=BOUND_CAP, toward='up')

    backward = np.outer(over_v, columns)
    keys, profile = profile_max((1.0 + E + S).ravel(), backward.ravel())
    report.add_profile('v_I_integral', keys, profile, cap=BOUND_CAP, toward='up')
    return report


class SeparableImage:
    """
    K2 g = V(|v|) E(I) for an isotropic separable g: V is splined on a radial
    grid, E is evaluated by the energy transfer rule.
    """

    def __init__(self, ctx: LinearizedContext, g: ProductTestFunction, reach: Optional[float] = None,
                 points: int = 49):
        if not g.isotropic:
            raise ArgumentError("separable images need a test function centred at the origin")
        self.ctx = ctx
        self.g = g
        self.reach = reach or 24.0 * np.sqrt(ctx.kT_k)
        self.grid = np.linspace(0.0, self.reach, points)
        values = g.amplitude * np.array([ctx.velocity.integral_over_eta(s, radial=g.radial)
                                         for s in self.grid])
        self.spline = CubicSpline(self.grid, values)
        self._tail = CubicSpline(self.grid, 4.0 * np.pi * self.grid ** 2 * values ** 2).antiderivative()

    def velocity(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= self.reach, self.spline(np.minimum(s, self.reach)), 0.0)

    def energy(self, I):
        return energy_transfer(self.ctx, self.g.energy_factor, I, 'exchange')

    def velocity_tail(self, x: float) -> float:
        """int_{|v| >= x} V(|v|)^2 dv"""
        x = min(max(x, 0.0), self.reach)
        return float(self._tail(self.reach) - self._tail(x))


def _test_norm(ctx: LinearizedContext, g: ProductTestFunction) -> float:
    """L^2(dv dmu) norm of a separable isotropic test function"""
    reach = g.support_radius if np.isfinite(g.support_radius) else 12.0 * g.width
    velocity, _ = adaptive_quad(lambda s: 4.0 * np.pi * s * s * float(g.radial(s)) ** 2, 0.0, reach,
                                rel_tol=1e-10)
    if np.isfinite(g.energy_cutoff):
        energy = ctx.law.integrate(lambda I: float(g.energy_factor(I)) ** 2, upper=g.energy_cutoff,
                                   rel_tol=1e-10).value
    else:
        energy = ctx.law.integrate(lambda I: float(g.energy_factor(I)) ** 2,
                                   T_ref=0.5 / g.energy_rate, rel_tol=1e-10).value
    return abs(g.amplitude) * np.sqrt(velocity * energy)


def tail_norm(image: SeparableImage, R: float) -> float:
    """||K2 g||_{L^2} on the complement of B_R = {|v| + I < R}"""
    law = image.ctx.law

    def inside(I):
        return float(image.energy(I)[0]) ** 2 * image.velocity_tail(R - I)

    near = law.integrate(inside, upper=R, rel_tol=1e-8).value
    far = law.integrate(lambda I: float(image.energy(I)[0]) ** 2, lower=R, T_ref=image.ctx.maxwellian.T_i,
                        k_B=image.ctx.maxwellian.k_B, rel_tol=1e-8).value
    return float(np.sqrt(max(near + image.velocity_tail(0.0) * far, 0.0)))


def default_tail_functions() -> List[ProductTestFunction]:
    return [ProductTestFunction(profile='gaussian', width=1.0, energy_rate=1.0),
            ProductTestFunction(profile='bump', width=1.0, energy_rate=1.0)]


def tail_decay_check(ctx: LinearizedContext, test_functions: Optional[Sequence[ProductTestFunction]] = None,
                     R_values: Sequence[float] = (2.0, 4.0, 8.0, 16.0)) -> VerificationReport:
    """
    Normalized ||K2 g|| outside B_R is nonincreasing in R and
    ||K2 g|| (1 + R)^{decay_exponent} / ||g|| stays bounded.
    """
    report = VerificationReport('tail-decay')
    R_values = np.asarray(sorted(R_values), dtype=float)
    exponent = ctx.decay_exponent
    for g in test_functions or default_tail_functions():
        label = g.profile
        image = SeparableImage(ctx, g)
        norm = _test_norm(ctx, g)
        tails = np.array([tail_norm(image, R) for R in R_values]) / norm
        increase = float(np.max(np.diff(tails), initial=0.0))
        report.add_check(f'{label}_nonincreasing', increase, increase, 1e-12 * tails[0],
                         increase <= 1e-12 * tails[0], kind='exact')
        report.add_profile(f'{label}_decay_ratio', R_values, tails * (1.0 + R_values) ** exponent,
                           cap=BOUND_CAP, toward='up')
        report.add_metric(f'{label}_normalized_tails', tails.tolist())
    report.add_metric('decay_exponent', exponent)
    return report


def translation_continuity_check(ctx: LinearizedContext, g: Optional[ProductTestFunction] = None,
                                 radius: float = 2.0, shifts: Sequence[float] = SHIFT_LADDER,
                                 order: int = 24) -> VerificationReport:
    """
    ||K2 g(. + w, . + H) - K2 g|| on B_{2R} for the shifts w = (h/2) e, H = h/2,
    which must decrease along the ladder of h.
    """
    report = VerificationReport('translation-continuity')
    g = g or ProductTestFunction(profile='gaussian', width=1.0, energy_rate=1.0)
    image = SeparableImage(ctx, g)
    outer = 2.0 * radius
    s, ws = interval_rule(0.0, outer, order)
    u, wu = gauss_legendre(order)

    energy_nodes, energy_weights = [], []
    for x in s:
        nodes, weights = mass_rule(ctx.law, outer - x, order)
        energy_nodes.append(nodes)
        energy_weights.append(weights)
    energy_nodes = np.array(energy_nodes)
    energy_weights = np.array(energy_weights)
    base = image.velocity(s)[:, None] * image.energy(energy_nodes)

    norms = []
    for h in shifts:
        shifted_speed = np.sqrt(np.maximum(s[:, None] ** 2 + 0.25 * h * h + s[:, None] * h * u[None, :], 0.0))
        shifted = image.velocity(shifted_speed)[:, :, None] * image.energy(energy_nodes + 0.5 * h)[:, None, :]
        diff = shifted - base[:, None, :]
        weight = 2.0 * np.pi * (ws * s * s)[:, None, None] * wu[None, :, None] * energy_weights[:, None, :]
        norms.append(float(np.sqrt(np.sum(weight * diff * diff))))

    norms = np.array(norms)
    order_idx = np.argsort(shifts)[::-1]
    ladder = norms[order_idx]
    decreasing = bool(np.all(np.diff(ladder) < 0))
    report.add_check('monotone_decrease', float(ladder[-1]), max(float(np.max(np.diff(ladder))), 0.0),
                     0.0, decreasing, kind='exact')
    report.add_table('translation_norms', ['shift', 'norm'],
                     zip(np.asarray(shifts, dtype=float)[order_idx], ladder))
    report.add_metric('norm_over_shift', (ladder / np.asarray(shifts, dtype=float)[order_idx]).tolist())
    return report


def nu_bar_check(ctx: LinearizedContext, mc: MonteCarloConfig, rng: np.random.Generator,
                 points: int = 4) -> VerificationReport:
    """Quadrature against Monte Carlo, rotation invariance, linearity in n and positivity"""
    report = VerificationReport('nu-bar', seed=mc.seed)
    v, I = _random_points(rng, points, 3.0, ctx.kT_i)
    doubled = ctx.with_density(2.0 * ctx.maxwellian.n)
    n_sigma = family_sigma(mc.n_sigma, points)
    for k in range(points):
        value = nu_bar(ctx, v[k], I[k])
        mc_value = nu_bar_mc(ctx, v[k], I[k], mc, label=f'nu-bar-{k}')
        report.add_statistical(f'nu_bar_mc_{k}', mc_value.value, mc_value.std_err, value, n_sigma,
                               floor=NOISE_FLOOR * mc_value.scale)

        rotation, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        rotated = nu_bar(ctx, rotation @ v[k], I[k])
        error = _relative(value, rotated)
        report.add_check(f'rotation_{k}', rotated, error, 1e-9, error < 1e-9)

        ratio = nu_bar(doubled, v[k], I[k]) / value if value > 0 else float('nan')
        report.add_check(f'density_doubling_{k}', ratio, abs(ratio - 2.0), 1e-12, abs(ratio - 2.0) < 1e-12)
        report.add_check(f'positive_{k}', value, 0.0, 0.0, bool(np.isfinite(value) and value > 0),
                         kind='exact')
    return report


def kappa1_check(ctx: LinearizedContext, rng: np.random.Generator, points: int = 4,
                 tolerance: float = 1e-6) -> VerificationReport:
    """
    Sign, swap symmetry and Gaussian decay of kappa1; K1 M^{1/2} = -nu_bar M^{1/2};
    direct and kernel-form quadratures of K1 g agree.
    """
    report = VerificationReport('kappa1')
    M = ctx.maxwellian
    v, I = _random_points(rng, 256, 3.0, ctx.kT_i)
    v_star, I_star = _random_points(rng, 256, 3.0, ctx.kT_i)
    values = _kappa1_batch(ctx, v, I, v_star, I_star)
    report.add_check('sign', float(np.max(values)), 0.0, 0.0, bool(np.all(values <= 0)), kind='exact')

    worst = 0.0
    for k in range(points):
        forward = kappa1_eval(ctx, v[k], I[k], v_star[k], I_star[k])
        backward = kappa1_eval(ctx, v_star[k], I_star[k], v[k], I[k])
        worst = max(worst, abs(forward - backward) / max(abs(forward), 1e-300))
    report.add_check('swap_symmetry', worst, worst, 1e-10, worst < 1e-10)

    far = 15.0 * np.sqrt(ctx.kT_k) * v[:points] / np.linalg.norm(v[:points], axis=1, keepdims=True)
    decay = float(np.max(np.abs(_kappa1_batch(ctx, far, I[:points], v_star[:points], I_star[:points]))))
    report.add_check('decay_at_15_thermal_speeds', decay, decay, 1e-12, decay < 1e-12)

    root = sqrt_maxwellian(M)
    tests = random_test_functions(rng, points, radius=1.0)
    near, near_I = _random_points(rng, points, 1.0, ctx.kT_i)
    for k in range(points):
        collapse = k1_direct(ctx, root, near[k], near_I[k])
        target = -float(M.sqrt_eval(near[k], near_I[k])) * nu_bar(ctx, near[k], near_I[k])
        error = _relative(collapse, target)
        report.add_check(f'collapse_{k}', collapse, error, tolerance, error < tolerance, target=target)

        direct = k1_direct(ctx, tests[k], near[k], near_I[k])
        kernel = k1_kernel(ctx, tests[k], near[k], near_I[k])
        error = _relative(direct, kernel)
        report.add_check(f'direct_vs_kernel_{k}', direct, error, tolerance, error < tolerance, kernel=kernel)
    return report


def hs_norm_check(ctx: LinearizedContext, rel_tol: float = 1e-4, levels: int = 6) -> VerificationReport:
    """Finite, refinement-convergent Hilbert-Schmidt norm of kappa1, quadratic in n"""
    report = VerificationReport('hs-norm')
    value, record = hs_norm_kappa1(ctx, rel_tol, levels=levels)
    report.add_check('finite', value, record['increments'][-1], rel_tol,
                     bool(np.isfinite(value) and record['increments'][-1] < rel_tol))
    report.add_table('refinement', ['order', 'estimate', 'ratio_to_limit'],
                     zip(record['orders'], record['estimates'], record['ratio_to_limit']))
    doubled, _ = hs_norm_kappa1(ctx.with_density(2.0 * ctx.maxwellian.n), rel_tol, levels=levels)
    ratio = doubled / value if value > 0 else float('nan')
    report.add_check('density_scaling', ratio, abs(ratio - 4.0) / 4.0, 1e-8, abs(ratio - 4.0) / 4.0 < 1e-8)
    report.add_metric('hs_norm_squared', value)
    report.add_metric('refinement', record)
    return report


def _statistical_match(report: VerificationReport, name: str, estimate_: MCEstimate, target: float,
                       n_sigma: float, rel_slack: float = 1e-6) -> None:
    report.add_statistical(name, estimate_.value, estimate_.std_err, target, n_sigma,
                           floor=rel_slack * abs(target) + NOISE_FLOOR * estimate_.scale)


def kernel_equivalence_check(ctx: LinearizedContext, mc: MonteCarloConfig, rng: np.random.Generator,
                             points: int = 20) -> VerificationReport:
    """
    Direct Monte Carlo against kernel quadrature for K2 and K3, the K2/K3
    substitution identity, the M^{1/2} collapse and the monatomic pipeline.
    """
    report = VerificationReport('kernel-equivalence', seed=mc.seed)
    M = ctx.maxwellian
    n_sigma = family_sigma(mc.n_sigma, 2 * points + 8)
    tests = random_test_functions(rng, points, radius=2.0)
    v, I = _random_points(rng, points, 2.0, ctx.kT_i)

    for k in range(points):
        direct = k2_direct(ctx, tests[k], v[k], I[k], mc, label=f'k2-{k}')
        kernel = k2_kernel(ctx, tests[k], v[k], I[k])
        _statistical_match(report, f'k2_point{k}', direct, kernel, n_sigma, rel_slack=1e-5)

    g, v0, I0 = tests[0], v[0], I[0]
    shared = k2_direct(ctx, g, v0, I0, mc, label='k2-shared')
    substituted = k3_direct(ctx, g, v0, I0, mc, mode='substituted', label='k2-shared')
    if ctx.law.is_lebesgue:
        gap = abs(substituted.value - shared.value)
        report.add_check('k3_substituted_identity', substituted.value, gap, 0.0, gap == 0.0, kind='exact')
    else:
        _statistical_match(report, 'k3_substituted_vs_kernel', substituted, k3_kernel(ctx, g, v0, I0),
                           n_sigma, rel_slack=1e-5)

    independent = k3_direct(ctx, g, v0, I0, mc.with_seed(mc.seed + 1), mode='direct')
    if ctx.law.is_lebesgue:
        difference = independent - shared
        report.add_statistical('k3_independent_seed', difference.value, difference.std_err, 0.0, n_sigma,
                               floor=NOISE_FLOOR * difference.scale)
    else:
        _statistical_match(report, 'k3_direct_vs_kernel', independent, k3_kernel(ctx, g, v0, I0),
                           n_sigma, rel_slack=1e-5)

    zero = lambda w, J: np.zeros(np.broadcast(np.asarray(w)[..., 0], np.asarray(J)).shape)
    zeros = [k2_direct(ctx, zero, v0, I0, mc, label='k2-zero').value,
             k3_direct(ctx, zero, v0, I0, mc).value, k2_kernel(ctx, zero, v0, I0)]
    report.add_check('zero_function', float(np.max(np.abs(zeros))), 0.0, 0.0,
                     all(z == 0.0 for z in zeros), kind='exact')

    root = sqrt_maxwellian(M)
    collapse_target = float(M.sqrt_eval(v0, I0)) * nu_bar(ctx, v0, I0)
    _statistical_match(report, 'k2_sqrt_maxwellian', k2_direct(ctx, root, v0, I0, mc, label='k2-root'),
                       collapse_target, n_sigma)
    collapse_kernel = k2_kernel(ctx, root, v0, I0)
    error = _relative(collapse_kernel, collapse_target)
    report.add_check('k2_kernel_sqrt_maxwellian', collapse_kernel, error, 1e-3, error < 1e-3, kind='quadrature')

    lam, P = float(np.linalg.norm(v0)) * 0.5, 1.0
    psi_mc = ctx.velocity.psi_mc(lam, P, mc)
    _statistical_match(report, 'psi_mc', psi_mc, ctx.velocity.psi_adaptive(lam, P), n_sigma, rel_slack=1e-8)
    vectorized = float(ctx.velocity.psi(lam, P))
    error = _relative(vectorized, ctx.velocity.psi_adaptive(lam, P))
    report.add_check('psi_gauss_vs_adaptive', vectorized, error, 1e-8, error < 1e-8, kind='quadrature')

    report.add_child(monatomic_equivalence_check(ctx.kT_k, mc, rng, points))
    return report


def monatomic_equivalence_check(kT: float, mc: MonteCarloConfig, rng: np.random.Generator,
                                points: int = 20, kinetic: Optional[KineticFactor] = None,
                                suite: str = 'k2m-equivalence') -> VerificationReport:
    """k2m_direct against k2m_kernel for B^m = kinetic (rho by default) and a centred Gaussian h"""
    report = VerificationReport(suite, seed=mc.seed)
    kernel = VelocityKernel(kinetic or KineticFactor.power(1.0), kT, (2.0 * np.pi * kT) ** -1.5)
    n_sigma = family_sigma(mc.n_sigma, points)

    def h(eta):
        return np.exp(-0.5 * np.sum(np.asarray(eta) ** 2, axis=-1))

    v, _ = _random_points(rng, points, 3.0, 1.0)
    for k in range(points):
        direct = kernel.direct_mc(h, v[k], mc, label=f'{suite}-{k}')
        quadrature = kernel.apply(h, v[k])
        _statistical_match(report, f'k2m_point{k}', direct, quadrature, n_sigma, rel_slack=1e-5)
    zero = kernel.apply(lambda eta: np.zeros(len(eta)), v[0])
    report.add_check('zero_function', zero, 0.0, 0.0, zero == 0.0, kind='exact')
    return report


def decomposition_check(ctx: LinearizedContext, mc: MonteCarloConfig, rng: np.random.Generator,
                        points: int = 5) -> VerificationReport:
    """(K1 + K2 + K3) g by quadrature against the single-integral Monte Carlo of K g"""
    report = VerificationReport('k-decomposition', seed=mc.seed)
    n_sigma = family_sigma(mc.n_sigma, points)
    tests = random_test_functions(rng, points, radius=1.0)
    v, I = _random_points(rng, points, 1.0, ctx.kT_i)
    for k in range(points):
        pieces = k_kernel(ctx, tests[k], v[k], I[k])
        single = k_direct(ctx, tests[k], v[k], I[k], mc, label=f'k-{k}')
        _statistical_match(report, f'decomposition_{k}', single, pieces, n_sigma, rel_slack=1e-5)
    return report


def linearized_prediction_check(ctx: LinearizedContext, mc: MonteCarloConfig, rng: np.random.Generator,
                                epsilon: float = 1e-3, points: int = 3) -> VerificationReport:
    """
    Q(M(1 + eps h), M(1 + eps h)) against eps M^{1/2} (K g - nu_bar g),
    g = M^{1/2} h, with an O(eps^2) allowance.
    """
    report = VerificationReport('linearized-prediction', seed=mc.seed)
    M = ctx.maxwellian
    g = ProductTestFunction(center=(0.3, -0.2, 0.1), width=1.0, energy_rate=1.0 / ctx.kT_i)

    def h(w, J):
        return g(w, J) * np.exp(-0.5 * M.log_eval(w, J))

    f = perturbed_density(M, epsilon, h, h_bound=np.inf, label='perturbed-maxwellian')
    h_peak = float(np.max(np.abs(h(*M.sample(4096, rng)))))
    n_sigma = family_sigma(mc.n_sigma, points)
    v, I = _random_points(rng, points, 1.0, ctx.kT_i)
    for k in range(points):
        q = q_eval(f, v[k], I[k], ctx.model, ctx.law, mc)
        prediction = epsilon * float(M.sqrt_eval(v[k], I[k])) * linearized_apply(ctx, g, v[k], I[k])
        extra = 2.0 * (epsilon * h_peak) ** 2 * q.scale + 1e-5 * abs(prediction)
        passed = q.agrees_with(prediction, n_sigma, extra=extra)
        report.add_check(f'prediction_{k}', q.value, q.std_err, q.tolerance(n_sigma) + extra, passed,
                         kind='statistical', target=prediction)
    report.add_metric('epsilon', epsilon)
    return report
