"""
Sharded Monte Carlo estimation with reproducible per-shard random streams
"""
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from scipy import special

from .exceptions import ArgumentError

logger = logging.getLogger(__name__)

# per-shard work is processed in chunks of at most this many samples
CHUNK_SIZE = 200_000

# relative floating-point floor added to statistical tolerances
NOISE_FLOOR = 1e-10

STRATIFICATIONS = ('none', 'by-energy')


@dataclass(frozen=True)
class MonteCarloConfig:
    samples: int = 100_000
    seed: int = 20240917
    shards: int = 8
    threads: int = 1
    stratification: str = 'none'
    n_sigma: float = 3.0

    def __post_init__(self):
        if int(self.samples) < 1:
            raise ArgumentError(f"samples must be >= 1, got {self.samples}")
        if int(self.shards) < 1 or int(self.threads) < 1:
            raise ArgumentError("shards and threads must be >= 1")
        if self.stratification not in STRATIFICATIONS:
            raise ArgumentError(f"unknown stratification '{self.stratification}'")
        object.__setattr__(self, 'samples', int(self.samples))
        object.__setattr__(self, 'shards', int(self.shards))
        object.__setattr__(self, 'threads', int(self.threads))

    @property
    def stratified(self) -> bool:
        return self.stratification == 'by-energy'

    def with_samples(self, samples: int) -> 'MonteCarloConfig':
        return replace(self, samples=int(samples))

    def with_seed(self, seed: int) -> 'MonteCarloConfig':
        return replace(self, seed=int(seed))

    def shard_generators(self, label: str) -> List[np.random.Generator]:
        """
        One generator per shard. Streams depend on (seed, label, shard index)
        only, never on the thread count.
        """
        root = np.random.SeedSequence(self.seed, spawn_key=(zlib.crc32(label.encode('utf-8')),))
        return [np.random.default_rng(child) for child in root.spawn(self.shards)]

    def shard_sizes(self) -> List[int]:
        base, extra = divmod(self.samples, self.shards)
        return [base + (1 if i < extra else 0) for i in range(self.shards)]


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_err: float
    samples: int
    scale: float = 0.0

    def tolerance(self, n_sigma: float = 3.0) -> float:
        return n_sigma * self.std_err + NOISE_FLOOR * self.scale

    def agrees_with(self, target: float, n_sigma: float = 3.0, extra: float = 0.0) -> bool:
        return bool(np.isfinite(self.value) and
                    abs(self.value - target) <= self.tolerance(n_sigma) + extra)

    def __sub__(self, other: 'MCEstimate') -> 'MCEstimate':
        # independent estimates: errors add in quadrature
        return MCEstimate(self.value - other.value, float(np.hypot(self.std_err, other.std_err)),
                          min(self.samples, other.samples), max(self.scale, other.scale))

    def scaled(self, factor: float) -> 'MCEstimate':
        return MCEstimate(self.value * factor, self.std_err * abs(factor), self.samples,
                          self.scale * abs(factor))

    def as_tuple(self) -> Tuple[float, float]:
        return self.value, self.std_err


@dataclass
class _Moments:
    count: int
    mean: np.ndarray
    m2: np.ndarray
    mean_abs: np.ndarray

    @classmethod
    def of(cls, values: np.ndarray) -> '_Moments':
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        mean = values.mean(axis=0)
        return cls(values.shape[0], mean, ((values - mean) ** 2).sum(axis=0),
                   np.abs(values).mean(axis=0))

    def merge(self, other: '_Moments') -> '_Moments':
        """Chan's pairwise update"""
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        total = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / total
        m2 = self.m2 + other.m2 + delta ** 2 * self.count * other.count / total
        mean_abs = (self.mean_abs * self.count + other.mean_abs * other.count) / total
        return _Moments(total, mean, m2, mean_abs)


Sampler = Callable[[np.random.Generator, int], np.ndarray]


def _run_shard(sampler: Sampler, rng: np.random.Generator, size: int, columns: int) -> _Moments:
    moments = _Moments(0, np.zeros(columns), np.zeros(columns), np.zeros(columns))
    remaining = size
    while remaining > 0:
        chunk = min(CHUNK_SIZE, remaining)
        values = np.asarray(sampler(rng, chunk), dtype=float)
        if values.shape[0] != chunk:
            raise ArgumentError(f"sampler returned {values.shape[0]} values for a chunk of {chunk}")
        moments = moments.merge(_Moments.of(values))
        remaining -= chunk
    return moments


def estimate_columns(sampler: Sampler, config: MonteCarloConfig, label: str,
                     columns: int = 1) -> List[MCEstimate]:
    """
    Sample means of the columns returned by ``sampler(rng, n)`` with their
    standard errors. Shards run on a thread pool and are reduced in shard order,
    so the result is deterministic for a fixed seed and shard count.
    """
    generators = config.shard_generators(label)
    sizes = config.shard_sizes()
    jobs = [(rng, size) for rng, size in zip(generators, sizes) if size > 0]

    if config.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda job: _run_shard(sampler, job[0], job[1], columns), jobs))
    else:
        results = [_run_shard(sampler, rng, size, columns) for rng, size in jobs]

    total = _Moments(0, np.zeros(columns), np.zeros(columns), np.zeros(columns))
    for result in results:
        total = total.merge(result)

    estimates = []
    for k in range(columns):
        if total.count > 1:
            variance = total.m2[k] / (total.count - 1)
            std_err = float(np.sqrt(max(variance, 0.0) / total.count))
        else:
            std_err = float('inf')
        estimates.append(MCEstimate(float(total.mean[k]), std_err, total.count, float(total.mean_abs[k])))
    logger.debug(f"MC '{label}': {total.count} samples over {len(jobs)} shards")
    return estimates


def estimate(sampler: Sampler, config: MonteCarloConfig, label: str) -> MCEstimate:
    return estimate_columns(sampler, config, label, columns=1)[0]


def stratified_uniform(rng: np.random.Generator, count: int, stratified: bool) -> np.ndarray:
    """Uniform draws on [0, 1), one per stratum in shuffled order when stratified"""
    if not stratified:
        return rng.random(count)
    u = (np.arange(count) + rng.random(count)) / count
    rng.shuffle(u)
    return u


def default_config(samples: Optional[int] = None, seed: Optional[int] = None) -> MonteCarloConfig:
    """Configuration seeded from the Django settings when they are available"""
    try:
        base = MonteCarloConfig(seed=getattr(settings, 'VERIFY_SEED', 20240917),
                                shards=getattr(settings, 'VERIFY_SHARDS', 8),
                                threads=getattr(settings, 'VERIFY_THREADS', 1))
    except ImproperlyConfigured:
        base = MonteCarloConfig()
    if samples is not None:
        base = base.with_samples(samples)
    if seed is not None:
        base = base.with_seed(seed)
    return base


def family_sigma(n_sigma: float, count: int) -> float:
    """
    Per-comparison sigma multiple keeping the two-sided level of ``n_sigma``
    over a family of ``count`` independent comparisons (Bonferroni).
    """
    if count <= 1:
        return float(n_sigma)
    level = special.erfc(n_sigma / np.sqrt(2.0))
    return float(np.sqrt(2.0) * special.erfcinv(level / count))
