"""
Internal-energy measures: densities, cumulative mass, integration and the partition function
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .exceptions import ArgumentError, ConvergenceError, DomainError, SamplingError
from .quadrature import adaptive_quad, interval_rule
from .reports import ENVELOPE_CAP, VerificationReport

logger = logging.getLogger(__name__)

DEFAULT_ADMISSIBILITY_GRID = np.logspace(-6.0, 3.0, 181)


def _as_energy(I, name: str = 'I') -> np.ndarray:
    values = np.asarray(I, dtype=float)
    if np.any(~np.isfinite(values)):
        raise DomainError(f"{name} must be finite")
    if np.any(values < 0):
        raise DomainError(f"{name} must be non-negative, got {values.min()}")
    return values


def _scalar_or_array(values: np.ndarray, like) -> Any:
    return float(values) if np.ndim(like) == 0 else values


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    abserr: float
    remainder: float = 0.0
    cutoff: Optional[float] = None


class EnergyLaw:
    """
    Measure dmu(I) = density(I) dI on [0, inf).

    Subclasses provide ``_density``, ``_mass``, ``_inverse_mass`` and the natural
    envelope exponents; declared exponents override the natural ones.
    """
    kind = 'abstract'

    # Envelope exponents

    @property
    def envelope_beta1(self) -> float:
        declared = getattr(self, 'declared_beta1', None)
        return self.natural_beta1 if declared is None else declared

    @property
    def envelope_beta2(self) -> float:
        declared = getattr(self, 'declared_beta2', None)
        return self.natural_beta2 if declared is None else declared

    @property
    def natural_beta1(self) -> float:
        raise NotImplementedError

    @property
    def natural_beta2(self) -> float:
        raise NotImplementedError

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Points where the density is not smooth"""
        return ()

    @property
    def is_lebesgue(self) -> bool:
        """True when the density is constant, i.e. dmu is a multiple of dI"""
        return False

    # Public evaluation

    def density(self, I):
        values = _as_energy(I)
        return _scalar_or_array(self._density(values), I)

    def mass(self, E):
        values = _as_energy(E, 'E')
        return _scalar_or_array(self._mass(values), E)

    def inverse_mass(self, m):
        values = np.asarray(m, dtype=float)
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise DomainError("mass values must be finite and non-negative")
        return _scalar_or_array(self._inverse_mass(values), m)

    def _density(self, I: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _mass(self, E: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inverse_mass(self, m: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # Integration

    def integrate(self, f: Callable[[float], float], lower: float = 0.0, upper: float = np.inf,
                  T_ref: float = 1.0, k_B: float = 1.0, rel_tol: float = 1e-10,
                  abs_tol: float = 0.0, envelope: Optional[Tuple[float, float]] = None,
                  limit: int = 200) -> IntegrationResult:
        """
        Integrate ``f`` against dmu over [lower, upper].

        Infinite upper limits use the substitution I = lower - k_B T_ref log(u).
        With ``envelope=(C, s)`` declaring |f(I)| <= C exp(-s I), the domain is
        truncated instead at a cutoff whose tail mass bound is below the
        requested tolerance, and that bound is returned as ``remainder``.
        """
        if not (np.isfinite(lower) and lower >= 0):
            raise DomainError(f"lower limit must be finite and non-negative, got {lower}")
        if upper < lower:
            raise DomainError(f"domain [{lower}, {upper}] is not well ordered")
        if upper == lower:
            return IntegrationResult(0.0, 0.0)

        points = [p for p in self.breakpoints if lower < p < upper]

        if np.isfinite(upper):
            value, abserr = adaptive_quad(lambda I: f(I) * self._density_scalar(I), lower, upper,
                                          rel_tol=rel_tol, abs_tol=abs_tol, points=points,
                                          limit=limit)
            return IntegrationResult(value, abserr)

        if envelope is not None:
            return self._integrate_truncated(f, lower, envelope, rel_tol, abs_tol, points, limit)

        if T_ref <= 0 or k_B <= 0:
            raise DomainError("T_ref and k_B must be positive")
        scale = k_B * T_ref

        def transformed(u: float) -> float:
            if u <= 0.0:
                return 0.0
            I = lower - scale * np.log(u)
            return f(I) * self._density_scalar(I) * scale / u

        u_points = [float(np.exp(-(p - lower) / scale)) for p in points]
        value, abserr = adaptive_quad(transformed, 0.0, 1.0, rel_tol=rel_tol, abs_tol=abs_tol,
                                      points=u_points, limit=limit)
        return IntegrationResult(value, abserr)

    def _integrate_truncated(self, f, lower, envelope, rel_tol, abs_tol, points, limit):
        constant, rate = envelope
        if constant < 0 or rate <= 0:
            raise DomainError("envelope needs C >= 0 and a positive decay rate")
        budget = max(abs_tol, 1e-14)
        cutoff = max(lower + 1.0, 10.0 / rate)
        tail = constant * self.exponential_tail(rate, cutoff)
        for _ in range(60):
            if tail <= 0.1 * budget:
                break
            cutoff *= 1.5
            tail = constant * self.exponential_tail(rate, cutoff)
        else:
            raise ConvergenceError(f"could not certify the tail of an envelope with rate {rate}",
                                   diagnostics={'cutoff': cutoff, 'tail': tail})
        value, abserr = adaptive_quad(lambda I: f(I) * self._density_scalar(I), lower, cutoff,
                                      rel_tol=rel_tol, abs_tol=abs_tol,
                                      points=[p for p in points if p < cutoff], limit=limit)
        return IntegrationResult(value, abserr + tail, remainder=tail, cutoff=cutoff)

    def exponential_tail(self, rate: float, cutoff: float) -> float:
        """int_{cutoff}^inf exp(-rate I) dmu(I)"""
        result = self.integrate(lambda I: np.exp(-rate * (I - cutoff)), lower=cutoff,
                                T_ref=1.0 / rate, rel_tol=1e-8)
        return result.value * np.exp(-rate * cutoff)

    def _density_scalar(self, I: float) -> float:
        return float(self._density(np.asarray(I, dtype=float)))

    # Thermodynamics

    def partition(self, T: float, k_B: float = 1.0) -> float:
        if not (T > 0 and k_B > 0):
            raise DomainError(f"temperature must be positive, got T={T}, k_B={k_B}")
        kT = k_B * T
        return self.integrate(lambda I: np.exp(-I / kT), T_ref=T, k_B=k_B, rel_tol=1e-12).value

    def mean_internal_energy(self, T: float, k_B: float = 1.0) -> float:
        kT = k_B * T
        numerator = self.integrate(lambda I: I * np.exp(-I / kT), T_ref=T, k_B=k_B,
                                   rel_tol=1e-11).value
        return numerator / self.partition(T, k_B)

    def energy_rule(self, T: float, order: int, k_B: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nodes and weights with sum w F(I) ~ int F dmu for F behaving like exp(-I/(k_B T)).
        """
        if T <= 0:
            raise DomainError("temperature must be positive")
        kT = k_B * T
        t, w = special.roots_laguerre(order)
        nodes = kT * t
        weights = kT * np.exp(np.log(w) + t) * self._density(nodes)
        return nodes, weights

    def sample_internal(self, T: float, count: int, rng: np.random.Generator,
                        k_B: float = 1.0, max_rounds: int = 50) -> np.ndarray:
        """
        Draw energies with density proportional to exp(-I/(k_B T)) dmu by rejection
        from an exponential proposal of twice the temperature.
        """
        kT = k_B * T
        rate = 0.5 / kT
        grid = np.unique(np.concatenate([np.linspace(0.0, 80.0 * kT, 4001),
                                          np.asarray(self.breakpoints, dtype=float)]))
        ratio = self._density(grid) * np.exp(-grid / (2.0 * kT)) / rate
        bound = 1.05 * float(ratio.max())
        if not np.isfinite(bound) or bound <= 0:
            raise SamplingError(f"no usable rejection bound for {self.kind} law at T={T}")

        accepted = []
        filled = 0
        acceptance = max(float(ratio.mean()) / bound, 1e-3)
        for _ in range(max_rounds):
            need = count - filled
            if need <= 0:
                break
            draws = rng.exponential(1.0 / rate, size=int(need / acceptance * 1.2) + 16)
            target = self._density(draws) * np.exp(-draws / (2.0 * kT)) / rate
            keep = draws[rng.random(draws.size) * bound < target][:need]
            accepted.append(keep)
            filled += keep.size
        if filled < count:
            raise SamplingError(f"rejection sampler produced {filled} of {count} draws "
                                f"in {max_rounds} rounds")
        return np.concatenate(accepted)

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(EnergyLaw):
    """dmu = scale * I**alpha dI"""
    alpha: float = 0.0
    scale: float = 1.0
    declared_beta1: Optional[float] = None
    declared_beta2: Optional[float] = None
    kind = 'power'

    def __post_init__(self):
        if not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")

    @property
    def natural_beta1(self) -> float:
        return self.alpha

    @property
    def natural_beta2(self) -> float:
        return self.alpha

    @property
    def is_lebesgue(self) -> bool:
        return self.alpha == 0.0

    def _density(self, I):
        return self.scale * np.power(I, self.alpha)

    def _mass(self, E):
        return self.scale * np.power(E, self.alpha + 1.0) / (self.alpha + 1.0)

    def _inverse_mass(self, m):
        return np.power(m * (self.alpha + 1.0) / self.scale, 1.0 / (self.alpha + 1.0))

    def exponential_tail(self, rate: float, cutoff: float) -> float:
        a = self.alpha + 1.0
        return float(self.scale * special.gamma(a) * special.gammaincc(a, rate * cutoff) / rate ** a)

    def partition(self, T: float, k_B: float = 1.0) -> float:
        if not (T > 0 and k_B > 0):
            raise DomainError(f"temperature must be positive, got T={T}, k_B={k_B}")
        return float(special.gamma(self.alpha + 1.0) * self.scale * (k_B * T) ** (self.alpha + 1.0))

    def mean_internal_energy(self, T: float, k_B: float = 1.0) -> float:
        return (self.alpha + 1.0) * k_B * T

    def energy_rule(self, T: float, order: int, k_B: float = 1.0):
        if T <= 0:
            raise DomainError("temperature must be positive")
        kT = k_B * T
        t, w = special.roots_genlaguerre(order, self.alpha)
        weights = self.scale * kT ** (self.alpha + 1.0) * np.exp(np.log(w) + t)
        return kT * t, weights

    def sample_internal(self, T: float, count: int, rng: np.random.Generator,
                        k_B: float = 1.0, max_rounds: int = 50) -> np.ndarray:
        return rng.gamma(shape=self.alpha + 1.0, scale=k_B * T, size=count)

    def to_dict(self):
        data = {'kind': self.kind, 'alpha': self.alpha, 'scale': self.scale}
        if self.declared_beta1 is not None:
            data['declared_beta1'] = self.declared_beta1
        if self.declared_beta2 is not None:
            data['declared_beta2'] = self.declared_beta2
        return data


@dataclass(frozen=True)
class TwoRegime(EnergyLaw):
    """c_low * I**beta1 on [0, 1] and c_high * I**beta2 on [1, inf), continuous at 1"""
    beta1: float = 0.0
    beta2: float = 1.0
    c_low: float = 1.0
    c_high: float = 1.0
    declared_beta1: Optional[float] = None
    declared_beta2: Optional[float] = None
    kind = 'two_regime'

    def __post_init__(self):
        if self.beta1 < 0 or self.beta2 < 0:
            raise DomainError("beta1 and beta2 must be non-negative")
        if not (self.c_low > 0 and self.c_high > 0):
            raise DomainError("c_low and c_high must be positive")
        if abs(self.c_low - self.c_high) > 1e-12 * max(self.c_low, self.c_high):
            raise DomainError(f"two-regime density must be continuous at I=1: "
                              f"c_low={self.c_low} differs from c_high={self.c_high}")

    @property
    def natural_beta1(self) -> float:
        return self.beta1

    @property
    def natural_beta2(self) -> float:
        return self.beta2

    @property
    def breakpoints(self):
        return (1.0,)

    @property
    def _unit_mass(self) -> float:
        return self.c_low / (self.beta1 + 1.0)

    def _density(self, I):
        return np.where(I <= 1.0, self.c_low * np.power(I, self.beta1),
                        self.c_high * np.power(I, self.beta2))

    def _mass(self, E):
        b1, b2 = self.beta1, self.beta2
        low = self.c_low * np.power(np.minimum(E, 1.0), b1 + 1.0) / (b1 + 1.0)
        high = self.c_high * (np.power(np.maximum(E, 1.0), b2 + 1.0) - 1.0) / (b2 + 1.0)
        return low + high

    def _inverse_mass(self, m):
        b1, b2 = self.beta1, self.beta2
        m1 = self._unit_mass
        low = np.power(np.minimum(m, m1) * (b1 + 1.0) / self.c_low, 1.0 / (b1 + 1.0))
        high = np.power(1.0 + np.maximum(m - m1, 0.0) * (b2 + 1.0) / self.c_high, 1.0 / (b2 + 1.0))
        return np.where(m <= m1, low, high)

    def partition(self, T: float, k_B: float = 1.0) -> float:
        if not (T > 0 and k_B > 0):
            raise DomainError(f"temperature must be positive, got T={T}, k_B={k_B}")
        kT = k_B * T
        a1, a2 = self.beta1 + 1.0, self.beta2 + 1.0
        x = 1.0 / kT
        low = self.c_low * kT ** a1 * special.gamma(a1) * special.gammainc(a1, x)
        high = self.c_high * kT ** a2 * special.gamma(a2) * special.gammaincc(a2, x)
        return float(low + high)

    def to_dict(self):
        data = {'kind': self.kind, 'beta1': self.natural_beta1, 'beta2': self.natural_beta2,
                'c_low': self.c_low, 'c_high': self.c_high}
        if self.declared_beta1 is not None:
            data['declared_beta1'] = self.declared_beta1
        if self.declared_beta2 is not None:
            data['declared_beta2'] = self.declared_beta2
        return data


@dataclass(frozen=True)
class Tabulated(EnergyLaw):
    """
    Piecewise-linear density through (grid, values).

    Below the first node the density is values[0] * (I/grid[0])**head_exponent,
    beyond the last one values[-1] * (I/grid[-1])**tail_exponent.
    """
    grid: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()
    tail_exponent: float = 0.0
    head_exponent: float = 0.0
    declared_beta1: Optional[float] = None
    declared_beta2: Optional[float] = None
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)
    _vals: np.ndarray = field(init=False, repr=False, compare=False)
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)
    kind = 'tabulated'

    def __post_init__(self):
        nodes = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != vals.shape:
            raise ArgumentError("tabulated law needs at least two (grid, value) pairs of equal length")
        if nodes[0] < 0 or np.any(np.diff(nodes) <= 0):
            raise ArgumentError("tabulated grid must be non-negative and strictly increasing")
        if np.any(vals < 0) or np.any(~np.isfinite(vals)):
            raise DomainError("tabulated density values must be finite and non-negative")
        if nodes[0] > 0 and self.head_exponent < 0:
            raise DomainError("head exponent must be non-negative")
        if self.tail_exponent < 0:
            raise DomainError("tail exponent must be non-negative")
        segments = 0.5 * (vals[1:] + vals[:-1]) * np.diff(nodes)
        head = vals[0] * nodes[0] / (self.head_exponent + 1.0)
        cumulative = head + np.concatenate([[0.0], np.cumsum(segments)])
        object.__setattr__(self, 'grid', tuple(nodes.tolist()))
        object.__setattr__(self, 'values', tuple(vals.tolist()))
        object.__setattr__(self, '_nodes', nodes)
        object.__setattr__(self, '_vals', vals)
        object.__setattr__(self, '_cumulative', cumulative)

    @property
    def natural_beta1(self) -> float:
        return self.head_exponent if self._nodes[0] > 0 else 0.0

    @property
    def natural_beta2(self) -> float:
        return self.tail_exponent

    @property
    def breakpoints(self):
        return tuple(self.grid)

    def _density(self, I):
        nodes, vals = self._nodes, self._vals
        inner = np.interp(I, nodes, vals)
        with np.errstate(divide='ignore', invalid='ignore'):
            head = vals[0] * np.power(I / nodes[0], self.head_exponent) if nodes[0] > 0 else inner
            tail = vals[-1] * np.power(I / nodes[-1], self.tail_exponent)
        return np.where(I < nodes[0], head, np.where(I > nodes[-1], tail, inner))

    def _mass(self, E):
        nodes, vals, cumulative = self._nodes, self._vals, self._cumulative
        E = np.asarray(E, dtype=float)
        idx = np.clip(np.searchsorted(nodes, E, side='right') - 1, 0, nodes.size - 2)
        x = E - nodes[idx]
        slope = (vals[idx + 1] - vals[idx]) / (nodes[idx + 1] - nodes[idx])
        inner = cumulative[idx] + vals[idx] * x + 0.5 * slope * x ** 2

        h = self.head_exponent
        head = (vals[0] * nodes[0] / (h + 1.0) * np.power(np.maximum(E, 0.0) / nodes[0], h + 1.0)
                if nodes[0] > 0 else np.zeros_like(E))

        t, last = self.tail_exponent, nodes[-1]
        ratio = np.maximum(E, last) / last
        tail = cumulative[-1] + vals[-1] * last * (np.power(ratio, t + 1.0) - 1.0) / (t + 1.0)
        return np.where(E < nodes[0], head, np.where(E > last, tail, inner))

    def _inverse_mass(self, m):
        nodes, vals, cumulative = self._nodes, self._vals, self._cumulative
        m = np.asarray(m, dtype=float)
        head_mass = cumulative[0]

        h = self.head_exponent
        with np.errstate(divide='ignore', invalid='ignore'):
            head = (nodes[0] * np.power(m * (h + 1.0) / (vals[0] * nodes[0]), 1.0 / (h + 1.0))
                    if nodes[0] > 0 and vals[0] > 0 else np.full_like(m, nodes[0]))

        idx = np.clip(np.searchsorted(cumulative, m, side='right') - 1, 0, nodes.size - 2)
        dm = m - cumulative[idx]
        width = nodes[idx + 1] - nodes[idx]
        slope = (vals[idx + 1] - vals[idx]) / width
        # root of v x + slope x**2 / 2 = dm in the stable form
        disc = np.sqrt(np.maximum(vals[idx] ** 2 + 2.0 * slope * dm, 0.0))
        with np.errstate(divide='ignore', invalid='ignore'):
            x = np.where(disc + vals[idx] > 0, 2.0 * dm / (vals[idx] + disc), 0.0)
        inner = nodes[idx] + np.clip(x, 0.0, width)

        t, last = self.tail_exponent, nodes[-1]
        excess = np.maximum(m - cumulative[-1], 0.0)
        tail = last * np.power(1.0 + excess * (t + 1.0) / (vals[-1] * last), 1.0 / (t + 1.0))
        return np.where(m < head_mass, head, np.where(m > cumulative[-1], tail, inner))

    def to_dict(self):
        data = {'kind': self.kind, 'grid': list(self.grid), 'values': list(self.values),
                'tail_exponent': self.tail_exponent, 'head_exponent': self.head_exponent}
        if self.declared_beta1 is not None:
            data['declared_beta1'] = self.declared_beta1
        if self.declared_beta2 is not None:
            data['declared_beta2'] = self.declared_beta2
        return data


def law_from_dict(data: Dict[str, Any]) -> EnergyLaw:
    """Build a law from its JSON description"""
    data = dict(data)
    kind = data.pop('kind', 'power')
    if kind == 'power':
        return PowerLaw(alpha=data.get('alpha', 0.0), scale=data.get('scale', 1.0),
                        declared_beta1=data.get('declared_beta1'),
                        declared_beta2=data.get('declared_beta2'))
    if kind == 'two_regime':
        return TwoRegime(beta1=data.get('beta1', 0.0), beta2=data.get('beta2', 1.0),
                         c_low=data.get('c_low', 1.0), c_high=data.get('c_high', 1.0),
                         declared_beta1=data.get('declared_beta1'),
                         declared_beta2=data.get('declared_beta2'))
    if kind == 'tabulated':
        return Tabulated(grid=tuple(data['grid']), values=tuple(data['values']),
                         tail_exponent=data.get('tail_exponent', 0.0),
                         head_exponent=data.get('head_exponent', 0.0),
                         declared_beta1=data.get('declared_beta1'),
                         declared_beta2=data.get('declared_beta2'))
    raise ArgumentError(f"unknown energy law kind '{kind}'")


# Module-level operations

def density(law: EnergyLaw, I):
    return law.density(I)


def mass(law: EnergyLaw, E):
    return law.mass(E)


def inverse_mass(law: EnergyLaw, m):
    return law.inverse_mass(m)


def integrate(law: EnergyLaw, f: Callable[[float], float],
              domain: Tuple[float, float] = (0.0, np.inf), **kwargs) -> float:
    lower, upper = domain
    return law.integrate(f, lower=lower, upper=upper, **kwargs).value


def partition(law: EnergyLaw, T: float, k_B: float = 1.0) -> float:
    return law.partition(T, k_B)


def energy_rule(law: EnergyLaw, T: float, order: int, k_B: float = 1.0):
    return law.energy_rule(T, order, k_B)


def mean_internal_energy(law: EnergyLaw, T: float, k_B: float = 1.0) -> float:
    return law.mean_internal_energy(T, k_B)


def mass_rule(law: EnergyLaw, total: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule for int_0^total F dmu in the mass variable m = mu[0, I]:
    nodes I_j = inverse_mass(m_j), weights are plain mass weights.
    """
    m_total = float(law.mass(total))
    m, w = interval_rule(0.0, m_total, order)
    return np.asarray(law.inverse_mass(m), dtype=float), w


def admissibility_check(law: EnergyLaw, a_values: Sequence[float] = (0.25,),
                        grid: Optional[Sequence[float]] = None,
                        cap: float = ENVELOPE_CAP) -> VerificationReport:
    """
    Empirical envelope test of the density on (0, 1] and [1, I_max].

    The density is compared with I**beta1 near the origin and with I**beta2 and
    I**(beta2 - a) at infinity; every ratio profile must stay finite, positive,
    below ``cap`` and free of growth at the grid ends.
    """
    grid = DEFAULT_ADMISSIBILITY_GRID if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ArgumentError("admissibility grid is empty")
    if np.any(grid <= 0):
        raise ArgumentError("admissibility grid must be positive")
    low, high = grid[grid <= 1.0], grid[grid >= 1.0]
    if low.size == 0 or high.size == 0:
        raise ArgumentError("admissibility grid must cover both (0, 1] and [1, I_max]")

    report = VerificationReport('energy-law-admissibility')
    beta1, beta2 = law.envelope_beta1, law.envelope_beta2
    low_ratio = law._density(low) / low ** beta1
    high_ratio = law._density(high) / high ** beta2

    report.add_profile('low_upper', low, low_ratio, cap=cap, toward='down')
    report.add_profile('low_lower', low, low_ratio, cap=cap, toward='down', lower=True, table=False)
    report.add_profile('high_upper', high, high_ratio, cap=cap, toward='up')
    for a in a_values:
        if a <= 0:
            raise DomainError(f"envelope parameter a must be positive, got {a}")
        ratio = law._density(high) / high ** (beta2 - a)
        report.add_profile(f'high_lower_a{a:g}', high, ratio, cap=cap, toward='up', lower=True)

    report.add_metric('beta1', beta1)
    report.add_metric('beta2', beta2)
    logger.debug(f"admissibility of {law.kind} law: passed={report.passed}")
    return report
