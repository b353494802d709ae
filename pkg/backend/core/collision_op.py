"""
Resonant collision operator Q(f, f), weak-form moments and entropy dissipation
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .cross_section import CrossSectionModel
from .densities import ZERO, DensityFunction, maxwellian_density, mixture_density, random_positive_family
from .energy_law import EnergyLaw
from .equilibrium import Maxwellian
from .exceptions import ArgumentError
from .kinematics import post_velocities, sample_sphere
from .montecarlo import MCEstimate, MonteCarloConfig, estimate_columns, family_sigma, stratified_uniform
from .reports import VerificationReport

logger = logging.getLogger(__name__)

# proposal temperatures are widened by this factor when moment-matched
PROPOSAL_INFLATION = 1.5

PILOT_SAMPLES = 20_000

INVARIANTS: Dict[str, Callable] = {
    '1': lambda v, I: np.ones(np.shape(I)),
    'v1': lambda v, I: v[..., 0],
    'v2': lambda v, I: v[..., 1],
    'v3': lambda v, I: v[..., 2],
    '|v|^2': lambda v, I: np.sum(v * v, axis=-1),
    'I': lambda v, I: np.asarray(I, dtype=float),
}

TestFunction = Union[str, Callable]


@dataclass(frozen=True)
class Proposal:
    """Importance density for (v, I) with respect to dv dmu(I): a unit-mass Maxwellian"""
    maxwellian: Maxwellian

    def draw(self, rng: np.random.Generator, count: int):
        return self.maxwellian.sample(count, rng)

    def log_pdf(self, v, I):
        return self.maxwellian.log_eval(v, I)


def _unit(M: Maxwellian) -> Maxwellian:
    return replace(M, n=1.0)


def pilot_proposal(f: DensityFunction, law: EnergyLaw, rng: np.random.Generator,
                   samples: int = PILOT_SAMPLES) -> Proposal:
    """Moment-matched Maxwellian from a broad importance-sampled pilot run"""
    broad = Maxwellian(T_k=4.0, T_i=4.0, law=law)
    v, I = broad.sample(samples, rng)
    weights = f(v, I) / broad.eval(v, I)
    total = float(weights.sum())
    if not np.isfinite(total) or total <= 0:
        raise ArgumentError(f"pilot run found no mass for density '{f.label}'")
    u = weights @ v / total
    kinetic = float(weights @ np.sum((v - u) ** 2, axis=1)) / (3.0 * total)
    internal = float(weights @ I) / total
    T_i = internal / law.mean_internal_energy(1.0)
    logger.debug(f"pilot proposal for '{f.label}': u={u}, T_k={kinetic:.4g}, T_i={T_i:.4g}")
    return Proposal(Maxwellian(u=tuple(u), T_k=PROPOSAL_INFLATION * kinetic,
                               T_i=PROPOSAL_INFLATION * max(T_i, 1e-6), law=law))


def proposal_for(f: DensityFunction, law: EnergyLaw, mc: MonteCarloConfig) -> Proposal:
    if f.reference is not None and f.reference.n > 0:
        reference = f.reference
        if reference.law is not law:
            reference = replace(reference, law=law)
        return Proposal(_unit(reference))
    rng = mc.shard_generators(f'pilot:{f.label}')[0]
    return Proposal(_unit(pilot_proposal(f, law, rng)))


def collision_draw(rng, n, proposal: Proposal, law: EnergyLaw, I, stratified: bool):
    """Partner state from the proposal, sigma uniform, I' uniform in mu on [0, I + I*]"""
    v_star, I_star = proposal.draw(rng, n)
    sigma = sample_sphere(rng, n)
    total = np.asarray(I, dtype=float) + I_star
    m_total = np.asarray(law.mass(total), dtype=float)
    I_prime = np.minimum(np.asarray(law.inverse_mass(stratified_uniform(rng, n, stratified) * m_total)), total)
    return v_star, I_star, sigma, total, m_total, I_prime


def _with_scale(values: MCEstimate, scale: MCEstimate) -> MCEstimate:
    return MCEstimate(values.value, values.std_err, values.samples, abs(scale.value))


def q_eval(f: DensityFunction, v, I: float, model: CrossSectionModel, law: EnergyLaw,
           mc: MonteCarloConfig, proposal: Optional[Proposal] = None) -> MCEstimate:
    """
    Q(f, f)(v, I) = int (f' f'* - f f*) B dv* dmu(I*) dmu(I') dsigma.

    Partners are drawn from a Maxwellian proposal, sigma uniformly and I'
    uniformly in mu on [0, I + I*]; every draw is reweighted by
    4 pi mu[0, I + I*] / p(v*, I*).
    """
    v = np.asarray(v, dtype=float).reshape(3)
    if I < 0:
        raise ArgumentError("internal energy must be non-negative")
    proposal = proposal or proposal_for(f, law, mc)
    f_here = float(f(v, I))

    def sampler(rng, n):
        v_star, I_star, sigma, total, m_total, I_prime = collision_draw(rng, n, proposal, law, I,
                                                                          mc.stratified)
        vb = np.broadcast_to(v, v_star.shape)
        v_post, v_star_post = post_velocities(vb, v_star, sigma)
        gain = f(v_post, I_prime) * f(v_star_post, np.maximum(total - I_prime, 0.0))
        loss = f_here * f(v_star, I_star)
        B = model.eval_B_batch(vb, v_star, I, I_star, I_prime, sigma)
        weight = 4.0 * np.pi * m_total * B * np.exp(-proposal.log_pdf(v_star, I_star))
        return np.column_stack([(gain - loss) * weight, np.abs(loss * weight)])

    values, scale = estimate_columns(sampler, mc, f'q:{f.label}', columns=2)
    return _with_scale(values, scale)


def resolve_test_function(phi: TestFunction) -> Callable:
    if callable(phi):
        return phi
    if phi not in INVARIANTS:
        raise ArgumentError(f"unknown test function '{phi}', expected one of {sorted(INVARIANTS)}")
    return INVARIANTS[phi]


def _pair_sampler(f: DensityFunction, model: CrossSectionModel, law: EnergyLaw,
                  proposal: Proposal, stratified: bool, integrand: Callable):
    """Sampler over both colliding states; ``integrand`` maps the collision to per-draw values"""

    def sampler(rng, n):
        v, I = proposal.draw(rng, n)
        v_star, I_star, sigma, total, m_total, I_prime = collision_draw(rng, n, proposal, law, I, stratified)
        v_post, v_star_post = post_velocities(v, v_star, sigma)
        I_star_prime = np.maximum(total - I_prime, 0.0)
        B = model.eval_B_batch(v, v_star, I, I_star, I_prime, sigma)
        weight = 4.0 * np.pi * m_total * B * np.exp(-proposal.log_pdf(v, I) - proposal.log_pdf(v_star, I_star))
        return integrand(v, I, v_star, I_star, v_post, I_prime, v_star_post, I_star_prime, weight)

    return sampler


def weak_moment(f: DensityFunction, phi: TestFunction, model: CrossSectionModel, law: EnergyLaw,
                mc: MonteCarloConfig, symmetrized: bool = False,
                proposal: Optional[Proposal] = None) -> MCEstimate:
    """
    int Q(f, f) phi dv dmu(I).

    The plain form integrates (f'f'* - ff*) phi(v, I) B; the symmetrized form
    integrates ff* (phi' + phi'* - phi - phi*) B / 2, which vanishes draw by
    draw for collision invariants.
    """
    test = resolve_test_function(phi)
    proposal = proposal or proposal_for(f, law, mc)

    def plain(v, I, v_star, I_star, v_post, I_prime, v_star_post, I_star_prime, weight):
        loss = f(v, I) * f(v_star, I_star)
        gain = f(v_post, I_prime) * f(v_star_post, I_star_prime)
        return np.column_stack([(gain - loss) * test(v, I) * weight, np.abs(loss * weight)])

    def symmetric(v, I, v_star, I_star, v_post, I_prime, v_star_post, I_star_prime, weight):
        loss = f(v, I) * f(v_star, I_star)
        change = (test(v_post, I_prime) + test(v_star_post, I_star_prime)
                  - test(v, I) - test(v_star, I_star))
        return np.column_stack([0.5 * loss * change * weight, np.abs(loss * weight)])

    sampler = _pair_sampler(f, model, law, proposal, mc.stratified, symmetric if symmetrized else plain)
    label = f"weak:{f.label}:{phi if isinstance(phi, str) else 'custom'}:{'sym' if symmetrized else 'plain'}"
    values, scale = estimate_columns(sampler, mc, label, columns=2)
    return _with_scale(values, scale)


def entropy_dissipation(f: DensityFunction, model: CrossSectionModel, law: EnergyLaw,
                        mc: MonteCarloConfig, proposal: Optional[Proposal] = None,
                        symmetrized: bool = True) -> MCEstimate:
    """
    int Q(f, f) log f dv dmu(I).

    The plain form integrates (f'f'* - ff*) log f B. The symmetrized form
    -1/4 int (f'f'* - ff*) log(f'f'* / ff*) B is non-positive draw by draw.
    """
    if not f.log_safe:
        raise ArgumentError(f"entropy dissipation needs a strictly positive density, '{f.label}' is not")
    proposal = proposal or proposal_for(f, law, mc)

    def plain(v, I, v_star, I_star, v_post, I_prime, v_star_post, I_star_prime, weight):
        log_f = f.log(v, I)
        loss = f(v, I) * f(v_star, I_star)
        gain = f(v_post, I_prime) * f(v_star_post, I_star_prime)
        inside = np.isfinite(log_f)
        values = (gain - loss) * np.where(inside, log_f, 0.0) * weight
        return np.column_stack([np.where(inside, values, 0.0), np.abs(loss * weight)])

    def dissipation(v, I, v_star, I_star, v_post, I_prime, v_star_post, I_star_prime, weight):
        before = f.log(v, I) + f.log(v_star, I_star)
        after = f.log(v_post, I_prime) + f.log(v_star_post, I_star_prime)
        inside = np.isfinite(before) & np.isfinite(after)
        before = np.where(inside, before, 0.0)
        gap = np.where(inside, after - before, 0.0)
        # (e^a - e^b)(a - b) = e^b expm1(a - b)(a - b)
        values = -0.25 * np.exp(before) * np.expm1(gap) * gap * weight
        loss = np.where(inside, np.exp(before), 0.0) * weight
        return np.column_stack([np.where(inside, values, 0.0), np.abs(loss)])

    sampler = _pair_sampler(f, model, law, proposal, mc.stratified, dissipation if symmetrized else plain)
    label = f"entropy:{f.label}:{'sym' if symmetrized else 'plain'}"
    values, scale = estimate_columns(sampler, mc, label, columns=2)
    return _with_scale(values, scale)


# Verification suites

def conservation_check(f: DensityFunction, model: CrossSectionModel, law: EnergyLaw,
                       mc: MonteCarloConfig, invariants: Sequence[str] = tuple(INVARIANTS)) -> VerificationReport:
    """Weak moments of the collision invariants vanish in plain and symmetrized form, which agree"""
    report = VerificationReport('weak-moments', seed=mc.seed)
    proposal = proposal_for(f, law, mc)
    for name in invariants:
        plain = weak_moment(f, name, model, law, mc, proposal=proposal)
        symmetric = weak_moment(f, name, model, law, mc, symmetrized=True, proposal=proposal)
        report.add_statistical(f'{name}_plain', plain.value, plain.std_err, 0.0, mc.n_sigma,
                               floor=plain.tolerance(0.0))
        report.add_statistical(f'{name}_symmetrized', symmetric.value, symmetric.std_err, 0.0, mc.n_sigma,
                               floor=symmetric.tolerance(0.0))
        gap = plain - symmetric
        report.add_statistical(f'{name}_forms_agree', gap.value, gap.std_err, 0.0, mc.n_sigma,
                               floor=gap.tolerance(0.0))
    return report


def _dissipation_record(report: VerificationReport, name: str, D: MCEstimate, n_sigma: float,
                        strict: bool = False):
    if strict:
        passed = bool(D.value < -n_sigma * D.std_err)
        return report.add_check(name, D.value, D.std_err, -n_sigma * D.std_err, passed, kind='statistical')
    bound = D.tolerance(n_sigma)
    return report.add_check(name, D.value, D.std_err, bound, bool(D.value <= bound), kind='statistical')


def dissipation_forms(f: DensityFunction, model: CrossSectionModel, law: EnergyLaw,
                      mc: MonteCarloConfig) -> Tuple[MCEstimate, MCEstimate]:
    """Plain and symmetrized entropy dissipation of ``f`` from independent draws of one proposal"""
    proposal = proposal_for(f, law, mc)
    return (entropy_dissipation(f, model, law, mc, proposal=proposal, symmetrized=False),
            entropy_dissipation(f, model, law, mc, proposal=proposal))


def htheorem_check(model: CrossSectionModel, law: EnergyLaw, mc: MonteCarloConfig,
                   rng: np.random.Generator, family_size: int = 4) -> VerificationReport:
    """
    Entropy dissipation vanishes at (two-temperature) equilibria, is strictly
    negative for a mixture of different kinetic temperatures and non-positive
    across a random family of positive densities. Sign checks use the plain
    form; the symmetrized form must agree with it.
    """
    report = VerificationReport('htheorem', seed=mc.seed)
    agree_sigma = family_sigma(mc.n_sigma, family_size + 3)

    def agreement(name: str, plain: MCEstimate, symmetric: MCEstimate):
        gap = plain - symmetric
        report.add_statistical(f'{name}_forms_agree', gap.value, gap.std_err, 0.0, agree_sigma,
                               floor=gap.tolerance(0.0))

    equilibria = {
        'equilibrium': Maxwellian(law=law),
        'two_temperature': Maxwellian(T_k=1.0, T_i=3.0, law=law),
    }
    for name, M in equilibria.items():
        plain, symmetric = dissipation_forms(maxwellian_density(M), model, law, mc)
        report.add_statistical(f'{name}_dissipation', plain.value, plain.std_err, 0.0, mc.n_sigma,
                               floor=plain.tolerance(0.0))
        agreement(name, plain, symmetric)

    mixture = mixture_density([(0.5, Maxwellian(T_k=0.5, law=law)), (0.5, Maxwellian(T_k=2.0, law=law))],
                              label='kinetic_mixture')
    plain, symmetric = dissipation_forms(mixture, model, law, mc)
    _dissipation_record(report, 'mixture_dissipation_negative', plain, mc.n_sigma, strict=True)
    agreement('mixture', plain, symmetric)

    for f in random_positive_family(rng, family_size, law):
        plain, symmetric = dissipation_forms(f, model, law, mc)
        _dissipation_record(report, f'{f.label}_non_positive', plain, mc.n_sigma)
        agreement(f.label, plain, symmetric)
    return report


def two_temperature_check(model: CrossSectionModel, law: EnergyLaw, mc: MonteCarloConfig,
                          rng: np.random.Generator, points: int = 20,
                          T_k: float = 1.0, T_i: float = 3.0) -> VerificationReport:
    """Q(M, M) = 0 at random states for a Maxwellian with distinct kinetic and internal temperatures"""
    report = VerificationReport('two-temperature', seed=mc.seed)
    M = Maxwellian(T_k=T_k, T_i=T_i, law=law)
    f = maxwellian_density(M)
    proposal = proposal_for(f, law, mc)
    v_points, I_points = M.sample(points, rng)
    for k, (v, I) in enumerate(zip(v_points, I_points)):
        q = q_eval(f, v, float(I), model, law, mc, proposal=proposal)
        report.add_statistical(f'q_state_{k}', q.value, q.std_err, 0.0, mc.n_sigma, floor=q.tolerance(0.0))

    q_zero = q_eval(ZERO, v_points[0], float(I_points[0]), model, law, mc, proposal=proposal)
    report.add_check('zero_density', q_zero.value, q_zero.std_err, 0.0, q_zero.value == 0.0, kind='exact')
    return report


def mixture_conservation_check(model: CrossSectionModel, law: EnergyLaw,
                               mc: MonteCarloConfig) -> VerificationReport:
    """Weak moments of a bimodal mixture with distinct bulk velocities and temperatures"""
    mixture = mixture_density([
        (0.6, Maxwellian(u=(0.5, 0.0, 0.0), T_k=1.0, T_i=1.0, law=law)),
        (0.4, Maxwellian(u=(-0.5, 0.25, 0.0), T_k=2.0, T_i=0.5, law=law)),
    ], label='bimodal')
    return conservation_check(mixture, model, law, mc)
