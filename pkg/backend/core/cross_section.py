"""
Cross-section models B = B0(|v - v*|, |cos(v - v*, sigma)|, I, I*, I') 1{I' <= I + I*},
their envelopes, symmetry checks and averaged cross sections
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .energy_law import EnergyLaw, PowerLaw, mass_rule
from .exceptions import ArgumentError, ConvergenceError, DomainError
from .kinematics import check_unit, post_velocities, sample_sphere
from .montecarlo import MCEstimate, MonteCarloConfig, estimate
from .quadrature import interval_rule, sphere_rule
from .reports import BOUND_CAP, ENVELOPE_CAP, VerificationReport, profile_max

logger = logging.getLogger(__name__)

KINETIC_FAMILIES = ('power', 'interpolated', 'singular_sine')
INTERNAL_FAMILIES = ('normalized_power', 'linear_combination', 'asymmetric')


@dataclass(frozen=True)
class KineticFactor:
    """
    b_k(rho, |cos theta|) = |sin theta|**sine_power * rho**radial_power.

    Families: ``power`` (rho**g), ``interpolated`` (|sin|**a rho**(1+a), a in
    [0, 1]) and ``singular_sine`` (|sin|**(-g2) rho**g1).
    """
    family: str = 'power'
    sine_power: float = 0.0
    radial_power: float = 1.0

    def __post_init__(self):
        if self.family not in KINETIC_FAMILIES:
            raise ArgumentError(f"unknown kinetic family '{self.family}'")
        if self.sine_power <= -1.0:
            raise DomainError("sine power must exceed -1 for an integrable angular factor")

    @classmethod
    def power(cls, exponent: float) -> 'KineticFactor':
        return cls('power', 0.0, float(exponent))

    @classmethod
    def interpolated(cls, alpha: float) -> 'KineticFactor':
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"interpolation exponent must lie in [0, 1], got {alpha}")
        return cls('interpolated', float(alpha), 1.0 + float(alpha))

    @classmethod
    def singular_sine(cls, gamma1: float, gamma2: float) -> 'KineticFactor':
        if not 0.0 <= gamma2 < 0.5:
            raise DomainError(f"sine singularity exponent must lie in [0, 1/2), got {gamma2}")
        return cls('singular_sine', -float(gamma2), float(gamma1))

    def __call__(self, rho, abs_cos):
        rho = np.asarray(rho, dtype=float)
        abs_cos = np.clip(np.abs(np.asarray(abs_cos, dtype=float)), 0.0, 1.0)
        sine = np.sqrt(np.maximum(0.0, 1.0 - abs_cos ** 2))
        with np.errstate(divide='ignore', invalid='ignore'):
            radial = np.power(rho, self.radial_power)
            angular = np.power(sine, self.sine_power) if self.sine_power != 0 else np.ones_like(sine)
        return radial * angular

    def sphere_constant(self) -> float:
        """int_{S^2} |sin theta|**p dsigma = 2 pi B(1/2, p/2 + 1)"""
        return float(2.0 * np.pi * special.beta(0.5, 0.5 * self.sine_power + 1.0))

    def to_dict(self) -> Dict[str, Any]:
        if self.family == 'power':
            return {'family': 'power', 'exponent': self.radial_power}
        if self.family == 'interpolated':
            return {'family': 'interpolated', 'alpha': self.sine_power}
        return {'family': 'singular_sine', 'gamma1': self.radial_power, 'gamma2': -self.sine_power}


@dataclass(frozen=True)
class InternalFactor:
    """
    b_i(I, I*) = sum_j c_j (I + I*)**(gamma_j/2) / mu[0, I + I*].

    The ``asymmetric`` family b_i = I is a deliberately non-symmetric factor.
    """
    family: str = 'normalized_power'
    terms: Tuple[Tuple[float, float], ...] = ((1.0, 0.0),)

    def __post_init__(self):
        if self.family not in INTERNAL_FAMILIES:
            raise ArgumentError(f"unknown internal family '{self.family}'")
        terms = tuple((float(c), float(g)) for c, g in self.terms)
        if self.family != 'asymmetric' and not terms:
            raise ArgumentError("internal factor needs at least one term")
        for c, g in terms:
            if c < 0 or not 0.0 <= g < 2.0:
                raise DomainError(f"internal term ({c}, {g}) needs c >= 0 and gamma in [0, 2)")
        object.__setattr__(self, 'terms', terms)

    @classmethod
    def normalized_power(cls, gamma: float) -> 'InternalFactor':
        return cls('normalized_power', ((1.0, gamma),))

    @classmethod
    def linear_combination(cls, terms: Sequence[Tuple[float, float]]) -> 'InternalFactor':
        return cls('linear_combination', tuple(terms))

    @classmethod
    def asymmetric(cls) -> 'InternalFactor':
        return cls('asymmetric', ())

    @property
    def max_gamma(self) -> float:
        return max((g for _, g in self.terms), default=0.0)

    def term(self, index: int, law: EnergyLaw, I, I_star):
        c, g = self.terms[index]
        total = np.asarray(I, dtype=float) + np.asarray(I_star, dtype=float)
        mu = law._mass(total)
        with np.errstate(divide='ignore', invalid='ignore'):
            value = c * np.power(total, 0.5 * g) / mu
        return np.where(total > 0, value, 0.0)

    def __call__(self, law: EnergyLaw, I, I_star):
        if self.family == 'asymmetric':
            return np.asarray(I, dtype=float) * np.ones_like(np.asarray(I_star, dtype=float))
        return sum(self.term(j, law, I, I_star) for j in range(len(self.terms)))

    def to_dict(self) -> Dict[str, Any]:
        if self.family == 'normalized_power':
            return {'family': self.family, 'gamma': self.terms[0][1]}
        if self.family == 'linear_combination':
            return {'family': self.family, 'terms': [list(t) for t in self.terms]}
        return {'family': self.family}


@dataclass(frozen=True)
class CrossSectionModel:
    kinetic: KineticFactor = field(default_factory=lambda: KineticFactor.power(1.0))
    internal: InternalFactor = field(default_factory=InternalFactor)
    law: EnergyLaw = field(default_factory=PowerLaw)
    delta1: float = 0.0
    delta2: float = 0.0
    gamma: float = 0.0
    envelope_constant: float = 1.0
    exchange: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.delta1 < 1.0:
            raise DomainError(f"delta1 must lie in [0, 1), got {self.delta1}")
        if not 0.0 <= self.delta2 < 0.5:
            raise DomainError(f"delta2 must lie in [0, 1/2), got {self.delta2}")
        if not 0.0 <= self.gamma < 2.0:
            raise DomainError(f"gamma must lie in [0, 2), got {self.gamma}")
        if not 0.0 <= self.exchange < 1.0:
            raise DomainError(f"exchange weight must lie in [0, 1), got {self.exchange}")
        if self.envelope_constant <= 0 or self.scale < 0:
            raise DomainError("envelope constant must be positive and scale non-negative")

    # Factors

    def b_k(self, rho, abs_cos):
        return self.scale * self.kinetic(rho, abs_cos)

    def b_i(self, I, I_star):
        return self.internal(self.law, I, I_star)

    def exchange_weight(self, I, I_star, I_prime):
        """1 - lambda 16 x(1-x) y(1-y) with x = I/(I+I*), y = I'/(I+I*)"""
        if self.exchange == 0.0:
            return np.ones(np.broadcast(np.asarray(I), np.asarray(I_star), np.asarray(I_prime)).shape)
        total = np.asarray(I, dtype=float) + np.asarray(I_star, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            x = np.where(total > 0, np.asarray(I) / total, 0.5)
            y = np.where(total > 0, np.asarray(I_prime) / total, 0.5)
        return 1.0 - self.exchange * 16.0 * x * (1.0 - x) * y * (1.0 - y)

    def B0(self, rho, abs_cos, I, I_star, I_prime):
        """Collision kernel on the support I' <= I + I*, zero outside"""
        I = np.asarray(I, dtype=float)
        I_star = np.asarray(I_star, dtype=float)
        I_prime = np.asarray(I_prime, dtype=float)
        support = (I_prime >= 0) & (I_prime <= I + I_star)
        value = self.b_k(rho, abs_cos) * self.b_i(I, I_star) * self.exchange_weight(I, I_star, I_prime)
        return np.where(support, value, 0.0)

    def eval_B_batch(self, v, v_star, I, I_star, I_prime, sigma):
        relative = np.asarray(v, dtype=float) - np.asarray(v_star, dtype=float)
        rho = np.linalg.norm(relative, axis=-1)
        with np.errstate(divide='ignore', invalid='ignore'):
            cos = np.where(rho > 0, np.sum(relative * sigma, axis=-1) / rho, 1.0)
        return self.B0(rho, np.abs(cos), I, I_star, I_prime)

    def eval_B(self, v, v_star, I, I_star, I_prime, sigma) -> float:
        sigma = check_unit(sigma, 'sigma')
        if min(I, I_star) < 0:
            raise DomainError("internal energies must be non-negative")
        return float(self.eval_B_batch(np.asarray(v, float), np.asarray(v_star, float),
                                       I, I_star, I_prime, sigma))

    # Averages

    def averaged_internal(self, I, I_star, order: int = 16):
        """int_0^{I+I*} b_i w dmu(I') for scalar energies"""
        total = float(I) + float(I_star)
        if total <= 0:
            return 0.0
        if self.exchange == 0.0:
            return float(self.b_i(I, I_star) * self.law.mass(total))
        nodes, weights = mass_rule(self.law, total, order)
        return float(self.b_i(I, I_star) * np.sum(weights * self.exchange_weight(I, I_star, nodes)))

    def averaged_internal_batch(self, I, I_star, order: int = 16) -> np.ndarray:
        """Vectorized averaged_internal over broadcast arrays of energies"""
        I, I_star = np.broadcast_arrays(np.asarray(I, dtype=float), np.asarray(I_star, dtype=float))
        total = I + I_star
        m_total = np.asarray(self.law.mass(total), dtype=float)
        b_i = self.b_i(I, I_star)
        if self.exchange == 0.0:
            return b_i * m_total
        t, w = interval_rule(0.0, 1.0, order)
        nodes = np.asarray(self.law.inverse_mass(m_total[..., None] * t), dtype=float)
        weight = self.exchange_weight(I[..., None], I_star[..., None], nodes)
        return b_i * m_total * np.sum(w * weight, axis=-1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kinetic': self.kinetic.to_dict(),
            'internal': self.internal.to_dict(),
            'delta1': self.delta1,
            'delta2': self.delta2,
            'gamma': self.gamma,
            'envelope_constant': self.envelope_constant,
            'exchange': self.exchange,
            'scale': self.scale,
        }


PRESETS = {
    'maxwell': {'kinetic': {'family': 'power', 'exponent': 0.0},
                'internal': {'family': 'normalized_power'}},
    'hard-sphere-like': {'kinetic': {'family': 'power', 'exponent': 1.0},
                         'internal': {'family': 'normalized_power'}},
    'interpolated-alpha': {'kinetic': {'family': 'interpolated', 'alpha': 0.5},
                           'internal': {'family': 'normalized_power'}},
}


def kinetic_from_dict(data: Dict[str, Any]) -> KineticFactor:
    family = data.get('family', 'power')
    if family == 'power':
        return KineticFactor.power(data.get('exponent', 1.0))
    if family == 'interpolated':
        return KineticFactor.interpolated(data.get('alpha', 0.5))
    if family == 'singular_sine':
        return KineticFactor.singular_sine(data.get('gamma1', 0.0), data.get('gamma2', 0.0))
    raise ArgumentError(f"unknown kinetic family '{family}'")


def internal_from_dict(data: Dict[str, Any], gamma: float) -> InternalFactor:
    family = data.get('family', 'normalized_power')
    if family == 'normalized_power':
        return InternalFactor.normalized_power(data.get('gamma', gamma))
    if family == 'linear_combination':
        return InternalFactor.linear_combination(data.get('terms', [(1.0, 0.0), (1.0, gamma)]))
    if family == 'asymmetric':
        return InternalFactor.asymmetric()
    raise ArgumentError(f"unknown internal family '{family}'")


def model_from_dict(data: Dict[str, Any], law: EnergyLaw) -> CrossSectionModel:
    """Build a model from its JSON description, optionally starting from a preset"""
    data = dict(data)
    preset = data.pop('preset', None)
    if preset is not None:
        if preset not in PRESETS:
            raise ArgumentError(f"unknown cross-section preset '{preset}'")
        merged = dict(PRESETS[preset])
        merged.update(data)
        data = merged
    gamma = float(data.get('gamma', 0.0))
    return CrossSectionModel(
        kinetic=kinetic_from_dict(data.get('kinetic', {})),
        internal=internal_from_dict(data.get('internal', {}), gamma),
        law=law,
        delta1=float(data.get('delta1', 0.0)),
        delta2=float(data.get('delta2', 0.0)),
        gamma=gamma,
        envelope_constant=float(data.get('envelope_constant', 1.0)),
        exchange=float(data.get('exchange', 0.0)),
        scale=float(data.get('scale', 1.0)),
    )


# Module-level operations

def eval_B(model: CrossSectionModel, v, v_star, I, I_star, I_prime, sigma) -> float:
    return model.eval_B(v, v_star, I, I_star, I_prime, sigma)


def averaged_Bbar(model: CrossSectionModel, v, v_star, I: float, I_star: float,
                  polar_order: int = 24, azimuth_order: int = 24, energy_order: int = 24,
                  verify: bool = False, rel_tol: float = 1e-8) -> float:
    """
    B-bar = int_{S^2} int B dmu(I') dsigma by a tensor rule: Gauss-Jacobi in
    cos(v - v*, sigma) around v - v* absorbing the |sin|**p factor, uniform in
    azimuth, Gauss-Legendre in the mass variable of [0, I + I*].

    With ``verify`` the rule is repeated at doubled orders and ConvergenceError
    is raised when the two estimates differ by more than ``rel_tol``.
    """
    if verify:
        coarse = averaged_Bbar(model, v, v_star, I, I_star, polar_order, azimuth_order, energy_order)
        fine = averaged_Bbar(model, v, v_star, I, I_star, 2 * polar_order, 2 * azimuth_order,
                             2 * energy_order)
        if abs(fine - coarse) > rel_tol * max(abs(fine), 1e-300):
            raise ConvergenceError("averaged cross section did not converge under order doubling",
                                   last_estimate=fine, diagnostics={'coarse': coarse})
        return fine
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    total = float(I) + float(I_star)
    if total <= 0:
        return 0.0
    relative = v - v_star
    sphere = sphere_rule(polar_order, azimuth_order, axis=relative,
                         sine_power=model.kinetic.sine_power)
    nodes, weights = mass_rule(model.law, total, energy_order)

    B = model.eval_B_batch(v[None, None, :], v_star[None, None, :], I, I_star,
                           nodes[None, :], sphere.directions[:, None, :])
    return float(np.einsum('s,e,se->', sphere.weights, weights, B))


def averaged_Bbar_factorized(model: CrossSectionModel, rho, I: float, I_star: float) -> float:
    """Closed-form sphere integral times the internal average"""
    sphere = model.kinetic.sphere_constant() * model.scale * np.power(rho, model.kinetic.radial_power)
    return sphere * model.averaged_internal(I, I_star)


def averaged_Bbar_mc(model: CrossSectionModel, v, v_star, I: float, I_star: float,
                     mc: MonteCarloConfig) -> MCEstimate:
    """Monte Carlo over uniform sigma and mu-uniform I' on [0, I + I*]"""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    total = float(I) + float(I_star)
    m_total = float(model.law.mass(total))

    def sampler(rng, n):
        sigma = sample_sphere(rng, n)
        I_prime = model.law._inverse_mass(rng.random(n) * m_total)
        B = model.eval_B_batch(v[None, :], v_star[None, :], I, I_star, I_prime, sigma)
        return 4.0 * np.pi * m_total * B

    return estimate(sampler, mc, 'bbar-mc')


def _random_arguments(rng: np.random.Generator, samples: int):
    v = rng.normal(0.0, 1.5, size=(samples, 3))
    v_star = rng.normal(0.0, 1.5, size=(samples, 3))
    sigma = sample_sphere(rng, samples)
    I = rng.exponential(1.0, size=samples)
    I_star = rng.exponential(1.0, size=samples)
    I_prime = rng.random(samples) * (I + I_star)
    return v, v_star, sigma, I, I_star, I_prime


def check_symmetry(model: CrossSectionModel, samples: int, rng: np.random.Generator,
                   tolerance: float = 1e-12) -> VerificationReport:
    """
    Relative residuals of the exchange symmetry and of micro-reversibility.

    Micro-reversibility evaluates B at the post-collision pair with the reversed
    direction (v - v*)/|v - v*|, which maps (v', v'*) back to (v, v*).
    """
    if samples < 1:
        raise ArgumentError("samples must be >= 1")
    report = VerificationReport('cross-section-symmetry')
    v, v_star, sigma, I, I_star, I_prime = _random_arguments(rng, samples)
    I_prime_star = (I + I_star) - I_prime

    B = model.eval_B_batch(v, v_star, I, I_star, I_prime, sigma)
    scale = np.maximum(1.0, np.abs(B))
    swapped = model.eval_B_batch(v_star, v, I_star, I, I_prime_star, sigma)
    symmetry = float(np.max(np.abs(swapped - B) / scale))

    v_post, v_star_post = post_velocities(v, v_star, sigma)
    back = (v - v_star) / np.linalg.norm(v - v_star, axis=1, keepdims=True)
    reversed_B = model.eval_B_batch(v_post, v_star_post, I_prime, I_prime_star, I, back)
    reversibility = float(np.max(np.abs(reversed_B - B) / scale))

    report.add_check('symmetry', symmetry, symmetry, tolerance, symmetry < tolerance)
    report.add_check('micro_reversibility', reversibility, reversibility, tolerance,
                     reversibility < tolerance)

    outside = model.eval_B_batch(v, v_star, I, I_star, I + I_star + 1.0, sigma)
    report.add_check('support', float(np.max(np.abs(outside))), 0.0, 0.0,
                     bool(np.all(outside == 0.0)), kind='exact')
    report.add_check('non_negative', float(np.min(B)), 0.0, 0.0, bool(np.all(B >= 0)), kind='exact')
    return report


def _envelope_kinetic(model: CrossSectionModel, rho, sine):
    with np.errstate(divide='ignore'):
        return (sine * (rho ** 2 + 1.0 / rho) + rho + rho ** (-model.delta1)
                + np.power(sine, -model.delta2))


def _pairs(grid, name: str) -> np.ndarray:
    pairs = np.asarray(grid, dtype=float)
    if pairs.size == 0:
        raise ArgumentError(f"{name} grid is empty")
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ArgumentError(f"{name} grid must be a sequence of pairs")
    return pairs


def default_bk_grid() -> np.ndarray:
    rho = np.logspace(-4.0, 3.0, 57)
    theta = np.concatenate([np.logspace(-6.0, 0.0, 25), np.linspace(1.1, np.pi - 1e-3, 12),
                            np.pi + np.logspace(-6.0, 0.0, 7)])
    R, T = np.meshgrid(rho, theta, indexing='ij')
    return np.column_stack([R.ravel(), T.ravel()])


def bk_envelope_check(model: CrossSectionModel, grid=None,
                      cap: float = ENVELOPE_CAP) -> VerificationReport:
    """
    Ratio of b_k to |sin|(rho^2 + 1/rho) + rho + rho^{-delta1} + |sin|^{-delta2}
    over (rho, theta) pairs; the sup over theta per rho is profiled at both ends
    of the rho range and the sup over rho per |sin| towards grazing angles.
    """
    pairs = _pairs(default_bk_grid() if grid is None else grid, 'b_k')
    rho, theta = pairs[:, 0], pairs[:, 1]
    if np.any(rho <= 0):
        raise ArgumentError("rho grid values must be positive")
    sine = np.abs(np.sin(theta))
    ratio = model.b_k(rho, np.abs(np.cos(theta))) / _envelope_kinetic(model, rho, sine)

    report = VerificationReport('bk-envelope')
    rho_axis, rho_profile = profile_max(rho, ratio)
    report.add_profile('rho_large', rho_axis, rho_profile, cap=cap, toward='up')
    report.add_profile('rho_small', rho_axis, rho_profile, cap=cap, toward='down', table=False)
    positive = sine > 0
    sine_axis, sine_profile = profile_max(np.round(sine[positive], 15), ratio[positive])
    report.add_profile('grazing', sine_axis, sine_profile, cap=cap, toward='down')
    report.add_metric('sup_ratio', float(np.nanmax(ratio)))
    return report


def default_energy_pairs() -> np.ndarray:
    axis = np.logspace(-4.0, 3.0, 29)
    I, J = np.meshgrid(axis, axis, indexing='ij')
    return np.column_stack([I.ravel(), J.ravel()])


def bi_envelope_check(model: CrossSectionModel, grid=None,
                      cap: float = ENVELOPE_CAP) -> VerificationReport:
    """
    b_i(I, I*) mu[0, I + I*] / (I + I*)^{gamma/2} over energy pairs. Linear
    combinations are checked term by term, each against its own exponent.
    """
    pairs = _pairs(default_energy_pairs() if grid is None else grid, 'b_i')
    I, I_star = pairs[:, 0], pairs[:, 1]
    if np.any(I <= 0) or np.any(I_star <= 0):
        raise ArgumentError("b_i grid energies must be positive")
    total = I + I_star
    mu = model.law._mass(total)
    report = VerificationReport('bi-envelope')

    if model.internal.family == 'asymmetric':
        ratio = model.b_i(I, I_star) * mu / total ** (0.5 * model.gamma)
        axis, profile = profile_max(total, ratio)
        report.add_profile('total', axis, profile, cap=cap, toward='up')
        report.add_profile('total_small', axis, profile, cap=cap, toward='down', table=False)
        return report

    for j, (_, g) in enumerate(model.internal.terms):
        ratio = model.internal.term(j, model.law, I, I_star) * mu / total ** (0.5 * g)
        axis, profile = profile_max(total, ratio)
        report.add_profile(f'term{j}_large', axis, profile, cap=cap, toward='up')
        report.add_profile(f'term{j}_small', axis, profile, cap=cap, toward='down', table=False)
    return report


def bi_regime_check(model: CrossSectionModel, a: float, grid=None,
                    cap: float = BOUND_CAP) -> VerificationReport:
    """b_i <= C E^{gamma/2 - beta1 - 1} for E <= 1 and <= C E^{gamma/2 - beta2 + a - 1} for E >= 1"""
    pairs = _pairs(default_energy_pairs() if grid is None else grid, 'b_i')
    I, I_star = pairs[:, 0], pairs[:, 1]
    total = I + I_star
    beta1, beta2 = model.law.envelope_beta1, model.law.envelope_beta2
    report = VerificationReport('bi-regimes')
    terms = (list(enumerate(model.internal.terms)) if model.internal.family != 'asymmetric'
             else [(None, (1.0, model.gamma))])

    for j, (_, g) in terms:
        values = model.b_i(I, I_star) if j is None else model.internal.term(j, model.law, I, I_star)
        label = 'b_i' if j is None else f'term{j}'
        low, high = total <= 1.0, total >= 1.0
        if np.any(low):
            ratio = values[low] / total[low] ** (0.5 * g - beta1 - 1.0)
            axis, profile = profile_max(total[low], ratio)
            report.add_profile(f'{label}_low', axis, profile, cap=cap, toward='down')
        if np.any(high):
            ratio = values[high] / total[high] ** (0.5 * g - beta2 + a - 1.0)
            axis, profile = profile_max(total[high], ratio)
            report.add_profile(f'{label}_high', axis, profile, cap=cap, toward='up')
    return report


def bbar_bound_check(model: CrossSectionModel, cap: float = BOUND_CAP,
                     energy_order: int = 16) -> VerificationReport:
    """
    B-bar / ((rho^2 + 1/rho) E^{gamma/2}) and the I'-averaged B0 against its
    angular envelope, profiled in rho and in E = I + I*.
    """
    report = VerificationReport('bbar-bounds')
    rho = np.logspace(-3.0, 3.0, 37)
    energies = np.logspace(-3.0, 3.0, 25)
    theta = np.concatenate([np.logspace(-5.0, 0.0, 11), [1.2, 1.5707963267948966]])
    sine, abs_cos = np.sin(theta), np.abs(np.cos(theta))

    averaged = np.array([model.averaged_internal(0.5 * E, 0.5 * E, energy_order) for E in energies])
    sphere = model.kinetic.sphere_constant() * model.scale * rho ** model.kinetic.radial_power
    weight = energies ** (0.5 * model.gamma)

    bbar_ratio = np.outer(sphere / (rho ** 2 + 1.0 / rho), averaged / weight)
    axis = rho
    report.add_profile('bbar_rho_large', axis, bbar_ratio.max(axis=1), cap=cap, toward='up')
    report.add_profile('bbar_rho_small', axis, bbar_ratio.max(axis=1), cap=cap, toward='down', table=False)
    report.add_profile('bbar_energy_large', energies, bbar_ratio.max(axis=0), cap=cap, toward='up')
    report.add_profile('bbar_energy_small', energies, bbar_ratio.max(axis=0), cap=cap,
                       toward='down', table=False)

    R, S = np.meshgrid(rho, sine, indexing='ij')
    _, C = np.meshgrid(rho, abs_cos, indexing='ij')
    kinetic_ratio = model.b_k(R, C) / _envelope_kinetic(model, R, S)
    b0_ratio = kinetic_ratio[:, :, None] * (averaged / weight)[None, None, :]
    report.add_profile('b0bar_rho_large', rho, b0_ratio.max(axis=(1, 2)), cap=cap, toward='up')
    report.add_profile('b0bar_rho_small', rho, b0_ratio.max(axis=(1, 2)), cap=cap, toward='down',
                       table=False)
    report.add_profile('b0bar_energy', energies, b0_ratio.max(axis=(0, 1)), cap=cap, toward='up')
    report.add_profile('b0bar_grazing', sine, b0_ratio.max(axis=(0, 2)), cap=cap, toward='down')
    return report


def bbar_symmetry_check(model: CrossSectionModel, rng: np.random.Generator, samples: int = 8,
                        tolerance: float = 1e-10) -> VerificationReport:
    """B-bar(v, v*, I, I*) = B-bar(v*, v, I*, I) and agreement of quadrature with the factorized form"""
    report = VerificationReport('bbar-symmetry')
    v, v_star, _, I, I_star, _ = _random_arguments(rng, samples)
    worst_sym, worst_fact = 0.0, 0.0
    for k in range(samples):
        forward = averaged_Bbar(model, v[k], v_star[k], I[k], I_star[k])
        backward = averaged_Bbar(model, v_star[k], v[k], I_star[k], I[k])
        factorized = averaged_Bbar_factorized(model, np.linalg.norm(v[k] - v_star[k]), I[k], I_star[k])
        scale = max(1.0, abs(forward))
        worst_sym = max(worst_sym, abs(forward - backward) / scale)
        worst_fact = max(worst_fact, abs(forward - factorized) / scale)
    report.add_check('bbar_symmetry', worst_sym, worst_sym, tolerance, worst_sym < tolerance)
    report.add_check('bbar_factorized', worst_fact, worst_fact, 1e-8, worst_fact < 1e-8)
    return report


def with_scale(model: CrossSectionModel, scale: float) -> CrossSectionModel:
    return replace(model, scale=scale)
