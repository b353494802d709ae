"""
Modified Bessel function I0, the phi_alpha bound functions and the exponential-ratio envelopes
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy import special

from .exceptions import DomainError
from .quadrature import adaptive_quad
from .reports import BOUND_CAP, ENVELOPE_CAP, VerificationReport

logger = logging.getLogger(__name__)

# largest X with a finite exp(X) in double precision
EXP_OVERFLOW = 709.78


@dataclass(frozen=True)
class BesselConfig:
    series_threshold: float = 15.0
    target_rel_err: float = 1e-13
    overflow: str = 'error'

    def __post_init__(self):
        if self.series_threshold <= 0:
            raise DomainError("series_threshold must be positive")
        if self.target_rel_err < 1e-14:
            raise DomainError(f"target_rel_err must be >= 1e-14, got {self.target_rel_err}")
        if self.overflow not in ('error', 'scaled'):
            raise DomainError(f"unknown overflow mode '{self.overflow}'")


DEFAULT_BESSEL = BesselConfig()


class ScaledValue(NamedTuple):
    """Value mantissa * exp(exponent), returned when exp(X) overflows"""
    mantissa: float
    exponent: float

    @property
    def log_value(self) -> float:
        return float(np.log(self.mantissa) + self.exponent)


def _series_i0(X: float, rel_err: float) -> float:
    term, total, k = 1.0, 1.0, 0
    q = 0.25 * X * X
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term < rel_err * 0.1 * total or k > 500:
            return total


def _scaled_quadrature_i0(X: float, rel_err: float) -> float:
    # I0(X) exp(-X) = (1/pi) int_0^pi exp(-2 X sin^2(t/2)) dt
    value, _ = adaptive_quad(lambda t: np.exp(-2.0 * X * np.sin(0.5 * t) ** 2), 0.0, np.pi,
                             rel_tol=rel_err, abs_tol=0.0, limit=400)
    return value / np.pi


def bessel_i0e(X: float, config: BesselConfig = DEFAULT_BESSEL) -> float:
    """Exponentially scaled I0(X) * exp(-|X|)"""
    X = abs(float(X))
    if not np.isfinite(X):
        raise DomainError("Bessel argument must be finite")
    if X < config.series_threshold:
        return _series_i0(X, config.target_rel_err) * np.exp(-X)
    return _scaled_quadrature_i0(X, config.target_rel_err)


def bessel_i0(X: float, config: BesselConfig = DEFAULT_BESSEL) -> Union[float, ScaledValue]:
    """
    I0(X) = (1/2pi) int_0^{2pi} exp(X cos t) dt.

    Power series below ``series_threshold``, quadrature of the scaled form above.
    Arguments whose exponential overflows raise DomainError, or return a
    ScaledValue when the config asks for ``overflow='scaled'``.
    """
    X = abs(float(X))
    if not np.isfinite(X):
        raise DomainError("Bessel argument must be finite")
    if X < config.series_threshold:
        return _series_i0(X, config.target_rel_err)
    scaled = _scaled_quadrature_i0(X, config.target_rel_err)
    if X > EXP_OVERFLOW:
        if config.overflow == 'scaled':
            return ScaledValue(scaled, X)
        raise DomainError(f"I0({X}) overflows double precision")
    return scaled * np.exp(X)


def bessel_i0_reference(X: float) -> float:
    """Direct quadrature of the defining integral, usable while exp(X) is finite"""
    X = abs(float(X))
    value, _ = adaptive_quad(lambda t: np.exp(X * np.cos(t)), 0.0, np.pi, rel_tol=1e-14, limit=400)
    return value / np.pi


# phi_alpha

def phi_alpha_at_zero(alpha: float, T_k: float, k_B: float = 1.0) -> float:
    """Closed form of phi_alpha(0) = int_0^inf exp(-r^2/(2 kT)) r^alpha dr"""
    kT = k_B * T_k
    return float(0.5 * (2.0 * kT) ** (0.5 * (alpha + 1.0)) * special.gamma(0.5 * (alpha + 1.0)))


def phi_alpha(lam: float, alpha: float, T_k: float, k_B: float = 1.0,
              rel_tol: float = 1e-10) -> float:
    """
    phi_alpha(lam) = int_0^inf exp(-(r - lam)^2 / (2 kT)) r^alpha / (1 + sqrt(r lam)) dr.

    For alpha < 0 the substitution r = u**(1/(1+alpha)) removes the endpoint
    singularity. The Gaussian confines the integrand to lam +- 40 sqrt(kT).
    """
    if not (-1.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (-1, 1], got {alpha}")
    if lam < 0:
        raise DomainError(f"lambda must be non-negative, got {lam}")
    if T_k <= 0 or k_B <= 0:
        raise DomainError("temperature must be positive")
    kT = k_B * T_k
    width = 40.0 * np.sqrt(kT)
    r_lo, r_hi = max(0.0, lam - width), lam + width

    def gauss(r):
        return np.exp(-(r - lam) ** 2 / (2.0 * kT)) / (1.0 + np.sqrt(r * lam))

    if alpha >= 0:
        value, _ = adaptive_quad(lambda r: gauss(r) * r ** alpha, r_lo, r_hi,
                                 rel_tol=rel_tol, points=[lam])
        return value

    power = 1.0 + alpha
    u_lo, u_hi = r_lo ** power, r_hi ** power
    value, _ = adaptive_quad(lambda u: gauss(u ** (1.0 / power)) / power, u_lo, u_hi,
                             rel_tol=rel_tol, points=[lam ** power])
    return value


# Exponential-ratio envelopes

def exp_ratio_envelope(s: float) -> float:
    """sup over I, J >= 0 of exp(-s|J-I|)(1+I)/(1+J) is at most max(1, 1/s) e^{(1-s)+}"""
    return max(1.0, 1.0 / s) * np.exp(max(1.0 - s, 0.0))


def corollary_envelope(s: float, r: float) -> float:
    """Envelope of exp(-s|J-I|)((1+I)/(1+J))**r, obtained by rescaling s by |r|"""
    if r == 0:
        return 1.0
    return exp_ratio_envelope(s / abs(r)) ** abs(r)


def _default_ratio_grid() -> np.ndarray:
    axis = np.linspace(0.0, 100.0, 201)
    I, J = np.meshgrid(axis, axis, indexing='ij')
    return np.column_stack([I.ravel(), J.ravel()])


def exp_ratio_bound_check(s: float, grid: Optional[np.ndarray] = None,
                          r_values: Sequence[float] = (-2.0, -1.0, 0.0, 1.0, 2.0)) -> VerificationReport:
    """
    Sup of exp(-s|J-I|)(1+I)/(1+J) and of the swapped ratio over (I, J) pairs,
    compared with the explicit envelope, plus the power-r corollary forms.
    """
    if s <= 0:
        raise DomainError(f"s must be positive, got {s}")
    pairs = _default_ratio_grid() if grid is None else np.asarray(grid, dtype=float)
    I, J = pairs[:, 0], pairs[:, 1]
    decay = np.exp(-s * np.abs(J - I))

    report = VerificationReport('exp-ratio')
    envelope = exp_ratio_envelope(s)
    slack = 1.0 + 1e-12
    for name, ratio in (('ratio', decay * (1.0 + I) / (1.0 + J)),
                        ('swapped_ratio', decay * (1.0 + J) / (1.0 + I))):
        sup = float(np.max(ratio))
        report.add_check(name, sup, 0.0, envelope,
                         bool(np.isfinite(sup) and sup <= envelope * slack and sup < ENVELOPE_CAP),
                         kind='bound', s=s)

    diagonal = np.isclose(I, J, rtol=0.0, atol=0.0)
    if np.any(diagonal):
        diag = decay[diagonal] * (1.0 + I[diagonal]) / (1.0 + J[diagonal])
        err = float(np.max(np.abs(diag - 1.0)))
        report.add_check('diagonal', float(diag.max()), err, 0.0, err == 0.0, kind='exact')

    for r in r_values:
        ratio = decay * ((1.0 + I) / (1.0 + J)) ** r
        sup = float(np.max(ratio))
        bound = corollary_envelope(s, r)
        report.add_check(f'corollary_r{r:g}', sup, 0.0, bound,
                         bool(np.isfinite(sup) and sup <= bound * slack), kind='bound', s=s, r=r)
    return report


def bessel_envelope_check(grid: Optional[Sequence[float]] = None,
                          config: BesselConfig = DEFAULT_BESSEL) -> VerificationReport:
    """
    I0(X)(1+sqrt X)e^{-X} stays positive and bounded on [0, 700], I0 is
    nondecreasing, agrees with its defining integral on [0, 50] and follows the
    large-argument asymptotics.
    """
    X = (np.concatenate([[0.0], np.logspace(-3.0, np.log10(700.0), 200)])
         if grid is None else np.asarray(grid, dtype=float))
    report = VerificationReport('bessel')

    scaled = np.array([bessel_i0e(x, config) for x in X])
    product = scaled * (1.0 + np.sqrt(X))
    positive = X > 0
    report.add_profile('envelope_upper', X[positive], product[positive], cap=BOUND_CAP, toward='up')
    report.add_profile('envelope_lower', X[positive], product[positive], cap=BOUND_CAP,
                       toward='up', lower=True, table=False)

    # compare log I0 to stay monotone-safe near the overflow threshold
    log_i0 = np.log(scaled) + X
    drops = np.diff(log_i0)
    report.add_check('nondecreasing', float(drops.min()), 0.0, 0.0,
                     bool(np.all(drops >= -1e-13 * np.abs(log_i0[1:]).clip(1.0))), kind='exact')

    reference_grid = np.linspace(0.0, 50.0, 101)
    errors = [abs(bessel_i0(x, config) / bessel_i0_reference(x) - 1.0) for x in reference_grid]
    worst = float(max(errors))
    report.add_check('integral_agreement', worst, worst, 1e-12, worst < 1e-12)

    asymptotic = bessel_i0e(100.0, config) * np.sqrt(200.0 * np.pi)
    report.add_check('asymptotic_x100', asymptotic, abs(asymptotic - 1.0), 0.02,
                     bool(0.98 <= asymptotic <= 1.02))
    return report


def phi_alpha_bound_check(alphas: Sequence[float], T_k: float = 1.0, k_B: float = 1.0,
                          grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """Uniform boundedness of phi_alpha over a log-spaced lambda grid"""
    lam = (np.concatenate([[0.0], np.logspace(-3.0, 3.0, 61)]) if grid is None
           else np.asarray(grid, dtype=float))
    report = VerificationReport('phi-alpha')
    for alpha in alphas:
        values = np.array([phi_alpha(x, alpha, T_k, k_B) for x in lam])
        positive = lam > 0
        report.add_profile(f'phi_alpha_{alpha:g}', lam[positive], values[positive],
                           cap=BOUND_CAP, toward='up')
        closed = phi_alpha_at_zero(alpha, T_k, k_B)
        err = abs(values[0] / closed - 1.0) if lam[0] == 0 else 0.0
        report.add_check(f'phi_alpha_{alpha:g}_at_zero', float(values[0]), err, 1e-8, err < 1e-8)
    return report
