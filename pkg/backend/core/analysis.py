"""
Galerkin matrix of K on a tensor basis and its singular-value decay.

Basis functions are products V_j(|v|) E_k(I) with

    V_j(s) = L_j^{(1/2)}(s^2/(2 kT_k)) exp(-s^2/(4 kT_k))
    E_k(I) = L_k^{(alpha)}(I/kT_i) exp(-I/(2 kT_i))

each family orthonormalized through the Cholesky factor of its Gram matrix.
Every part of K factors over velocity and energy, so the matrix is assembled
from small factor matrices:

    K = -c V1 (x) E1 + V2 (x) (E2 + E3)
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import linalg, special

from .collision_op import Proposal, collision_draw
from .energy_law import PowerLaw
from .exceptions import ArgumentError, AssemblyError, ConvergenceError, DomainError, SingularityError
from .linearized_op import LinearizedContext, transfer_rule
from .montecarlo import NOISE_FLOOR, MCEstimate, MonteCarloConfig, estimate
from .reports import VerificationReport

logger = logging.getLogger(__name__)

# Share of factor entries allowed to fail before assembly is abandoned
FLAGGED_LIMIT = 0.01

DECAY_THRESHOLD = 1e-3
STABILITY_TOLERANCE = 1e-3
SYMMETRY_TOLERANCE = 1e-8
GRAM_TOLERANCE = 1e-8


@dataclass(frozen=True)
class GalerkinBasis:
    velocity_modes: int = 6
    energy_modes: int = 4
    energy_alpha: Optional[float] = None
    order: int = 40

    def __post_init__(self):
        if self.velocity_modes < 1 or self.energy_modes < 1:
            raise DomainError("a Galerkin basis needs at least one mode per factor")
        if self.order < max(self.velocity_modes, self.energy_modes) + 2:
            raise DomainError("quadrature order must exceed the number of modes")
        if self.energy_alpha is not None and self.energy_alpha <= -1.0:
            raise DomainError("Laguerre parameter must exceed -1")

    @property
    def size(self) -> int:
        return self.velocity_modes * self.energy_modes

    def enriched(self, velocity_modes: int, energy_modes: int) -> 'GalerkinBasis':
        return GalerkinBasis(velocity_modes, energy_modes, self.energy_alpha,
                             max(self.order, velocity_modes + energy_modes + 24))

    def bind(self, ctx: LinearizedContext) -> 'BoundBasis':
        return BoundBasis(self, ctx)

    def to_dict(self) -> Dict:
        return {'velocity_modes': self.velocity_modes, 'energy_modes': self.energy_modes,
                'energy_alpha': self.energy_alpha, 'order': self.order}


@dataclass
class BoundBasis:
    """Basis evaluated at quadrature nodes for one linearization point"""
    basis: GalerkinBasis
    ctx: LinearizedContext
    speeds: np.ndarray = field(init=False)
    speed_weights: np.ndarray = field(init=False)
    energies: np.ndarray = field(init=False)
    energy_weights: np.ndarray = field(init=False)
    velocity_factor: np.ndarray = field(init=False)
    energy_factor: np.ndarray = field(init=False)

    def __post_init__(self):
        ctx, basis = self.ctx, self.basis
        kT = ctx.kT_k
        # sum W F(s) ~ int_0^inf s^2 F(s) ds for F ~ exp(-s^2/(2 kT))
        x, w = special.roots_genlaguerre(basis.order, 0.5)
        self.speeds = np.sqrt(2.0 * kT * x)
        self.speed_weights = 0.5 * (2.0 * kT) ** 1.5 * np.exp(np.log(w) + x)
        self.energies, self.energy_weights = ctx.law.energy_rule(ctx.maxwellian.T_i, basis.order,
                                                                 ctx.maxwellian.k_B)

        velocity_gram = 4.0 * np.pi * self._gram(self.velocity_raw(self.speeds), self.speed_weights)
        energy_gram = self._gram(self.energy_raw(self.energies), self.energy_weights)
        self.velocity_factor = self._inverse_cholesky(velocity_gram, 'velocity')
        self.energy_factor = self._inverse_cholesky(energy_gram, 'energy')

    @property
    def alpha(self) -> float:
        if self.basis.energy_alpha is not None:
            return self.basis.energy_alpha
        law = self.ctx.law
        return law.alpha if isinstance(law, PowerLaw) else 0.0

    def velocity_raw(self, s) -> np.ndarray:
        """Raw velocity modes, shape s.shape + (velocity_modes,)"""
        x = np.asarray(s, dtype=float) ** 2 / (2.0 * self.ctx.kT_k)
        modes = [special.eval_genlaguerre(j, 0.5, x) for j in range(self.basis.velocity_modes)]
        return np.stack(modes, axis=-1) * np.exp(-0.5 * x)[..., None]

    def energy_raw(self, I) -> np.ndarray:
        t = np.asarray(I, dtype=float) / self.ctx.kT_i
        modes = [special.eval_genlaguerre(k, self.alpha, t) for k in range(self.basis.energy_modes)]
        return np.stack(modes, axis=-1) * np.exp(-0.5 * t)[..., None]

    def velocity_modes(self, s) -> np.ndarray:
        return self.velocity_raw(s) @ self.velocity_factor.T

    def energy_modes(self, I) -> np.ndarray:
        return self.energy_raw(I) @ self.energy_factor.T

    @staticmethod
    def _gram(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return values.T @ (weights[:, None] * values)

    @staticmethod
    def _inverse_cholesky(gram: np.ndarray, name: str) -> np.ndarray:
        try:
            lower = linalg.cholesky(gram, lower=True)
        except linalg.LinAlgError as exc:
            raise AssemblyError(f"{name} Gram matrix is not positive definite") from exc
        return linalg.solve_triangular(lower, np.eye(gram.shape[0]), lower=True)

    def orthonormal(self, raw: np.ndarray, factor: np.ndarray) -> np.ndarray:
        """C raw C^T for a factor matrix assembled on raw modes"""
        return factor @ raw @ factor.T

    def gram_errors(self) -> Tuple[float, float]:
        """Gram matrices of the orthonormal modes against the identity, on a finer rule"""
        fine = BoundBasis(GalerkinBasis(self.basis.velocity_modes, self.basis.energy_modes,
                                        self.basis.energy_alpha, 2 * self.basis.order), self.ctx)
        V = self.velocity_modes(fine.speeds)
        E = self.energy_modes(fine.energies)
        velocity = 4.0 * np.pi * self._gram(V, fine.speed_weights)
        energy = self._gram(E, fine.energy_weights)
        return (float(np.max(np.abs(velocity - np.eye(velocity.shape[0])))),
                float(np.max(np.abs(energy - np.eye(energy.shape[0])))))


@dataclass
class GalerkinMatrix:
    matrix: np.ndarray
    kappa1_part: np.ndarray
    flagged: int
    entries: int
    basis: GalerkinBasis

    @property
    def flagged_fraction(self) -> float:
        return self.flagged / max(self.entries, 1)


def _guarded(compute: Callable[[], float]) -> float:
    try:
        value = float(compute())
    except (ConvergenceError, SingularityError) as exc:
        logger.debug(f"Galerkin entry failed: {exc}")
        return float('nan')
    return value


def _sphere_average(s: np.ndarray, t: np.ndarray, q: float) -> np.ndarray:
    """int_{-1}^{1} (s^2 + t^2 - 2 s t u)^{q/2} du for s, t > 0"""
    return ((s + t) ** (q + 2.0) - np.abs(s - t) ** (q + 2.0)) / ((q + 2.0) * s * t)


def _velocity_factors(bound: BoundBasis) -> Tuple[np.ndarray, np.ndarray]:
    ctx = bound.ctx
    model = ctx.model
    s, W = bound.speeds, bound.speed_weights
    raw = bound.velocity_raw(s)
    # V_j(s) exp(-s^2/(4 kT)) at the nodes
    damped = raw * np.exp(-s * s / (4.0 * ctx.kT_k))[:, None]
    S, T = np.meshgrid(s, s, indexing='ij')
    coupling = _sphere_average(S, T, model.kinetic.radial_power)
    constant = 8.0 * np.pi ** 2 * model.kinetic.sphere_constant() * model.scale
    weighted = W[:, None] * damped
    v1 = constant * weighted.T @ coupling @ weighted

    n = bound.basis.velocity_modes
    images = np.full((s.size, n), np.nan)
    for m, speed in enumerate(s):
        for j in range(n):
            images[m, j] = _guarded(lambda: ctx.velocity.integral_over_eta(
                speed, radial=lambda r: bound.velocity_raw(r)[..., j]))
    v2 = 4.0 * np.pi * (W[:, None] * raw).T @ images
    return v1, v2


def _energy_factors(bound: BoundBasis) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    ctx = bound.ctx
    I, w = bound.energies, bound.energy_weights
    raw = bound.energy_raw(I)
    damped = raw * np.exp(-I / (2.0 * ctx.kT_i))[:, None]
    A = ctx.model.averaged_internal_batch(I[:, None], I[None, :])
    weighted = w[:, None] * damped
    e1 = weighted.T @ A @ weighted

    transfers = {}
    for kind in ('exchange', 'reflected'):
        images = np.full(raw.shape, np.nan)
        for a, energy in enumerate(I):
            def image():
                nodes, weights = transfer_rule(ctx, energy, kind, bound.basis.order)
                return weights @ bound.energy_raw(nodes)
            try:
                images[a] = image()
            except (ConvergenceError, SingularityError) as exc:
                logger.debug(f"energy transfer failed at I={energy:.4g}: {exc}")
        transfers[kind] = (w[:, None] * raw).T @ images
    return e1, transfers['exchange'], transfers['reflected']


def _count_flagged(*factors: np.ndarray) -> Tuple[int, int]:
    flagged = sum(int(np.sum(~np.isfinite(f))) for f in factors)
    return flagged, sum(f.size for f in factors)


def assemble_K_matrix(ctx: LinearizedContext, basis: GalerkinBasis) -> GalerkinMatrix:
    """
    Entries <phi_a, K phi_b> with a = (j, k) ordered velocity-major. Factor
    entries whose quadrature fails are flagged and zeroed; AssemblyError when
    more than 1% of them fail.
    """
    bound = basis.bind(ctx)
    v1, v2 = _velocity_factors(bound)
    e1, e2, e3 = _energy_factors(bound)

    flagged, entries = _count_flagged(v2, e2, e3)
    if flagged:
        fraction = flagged / entries
        if fraction > FLAGGED_LIMIT:
            raise AssemblyError(f"{flagged} of {entries} Galerkin factor entries failed "
                                f"({100.0 * fraction:.2f}%)")
        logger.warning(f"{flagged} of {entries} Galerkin factor entries failed and were set to zero")
        v2, e2, e3 = (np.nan_to_num(f, nan=0.0, posinf=0.0, neginf=0.0) for f in (v2, e2, e3))

    Cv, Ce = bound.velocity_factor, bound.energy_factor
    v1, v2 = bound.orthonormal(v1, Cv), bound.orthonormal(v2, Cv)
    e1, e23 = bound.orthonormal(e1, Ce), bound.orthonormal(e2 + e3, Ce)

    kappa1_part = -ctx.c * np.kron(v1, e1)
    matrix = kappa1_part + np.kron(v2, e23)
    if not np.all(np.isfinite(matrix)):
        raise AssemblyError("assembled Galerkin matrix has non-finite entries")
    logger.info(f"Assembled {matrix.shape[0]}x{matrix.shape[1]} Galerkin matrix "
                f"({basis.velocity_modes} velocity x {basis.energy_modes} energy modes)")
    return GalerkinMatrix(matrix, kappa1_part, flagged, entries, basis)


def singular_values(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or not np.all(np.isfinite(matrix)):
        raise ArgumentError("singular values need a finite two-dimensional matrix")
    return np.linalg.svd(matrix, compute_uv=False)


def singular_value_report(matrix: np.ndarray, reference: Optional[np.ndarray] = None,
                          suite: str = 'singular-values') -> VerificationReport:
    """
    Singular values, their decay profile sigma_k / sigma_1 and, with a
    ``reference`` matrix from a richer basis, the stability of sigma_1.
    """
    report = VerificationReport(suite)
    sigma = singular_values(matrix)
    increase = float(np.max(np.diff(sigma), initial=0.0))
    report.add_check('nonincreasing', float(sigma[0]) if sigma.size else 0.0, max(increase, 0.0), 0.0,
                     increase <= 0.0, kind='exact')
    report.add_check('finite', float(np.max(np.abs(sigma), initial=0.0)), 0.0, 0.0,
                     bool(np.all(np.isfinite(sigma))), kind='exact')

    leading = float(sigma[0]) if sigma.size else 0.0
    decay = sigma / leading if leading > 0 else np.zeros_like(sigma)
    below = np.nonzero(decay < DECAY_THRESHOLD)[0]
    report.add_table('singular_values', ['index', 'sigma', 'ratio'],
                     zip(range(1, sigma.size + 1), sigma, decay))
    report.add_table('matrix', [f'col{j}' for j in range(np.shape(matrix)[1])], np.asarray(matrix))
    report.add_metric('singular_values', sigma.tolist())
    report.add_metric('reaches_decay_threshold', bool(below.size))
    report.add_metric('first_index_below_threshold', int(below[0]) + 1 if below.size else None)

    if reference is not None:
        richer = singular_values(reference)
        change = abs(richer[0] - leading) / max(abs(richer[0]), 1e-300)
        report.add_check('leading_stability', float(richer[0]), change, STABILITY_TOLERANCE,
                         change < STABILITY_TOLERANCE)
        count = min(sigma.size, richer.size, 4)
        report.add_metric('leading_changes',
                          (np.abs(richer[:count] - sigma[:count]) / max(richer[0], 1e-300)).tolist())
    return report


def leading_entry_mc(ctx: LinearizedContext, mc: MonteCarloConfig, label: str = 'galerkin-00') -> MCEstimate:
    """
    <phi_0, K phi_0> = int nu_bar M / n for phi_0 = M^{1/2} / n^{1/2}, by
    sampling both colliding states from M / n.
    """
    proposal = Proposal(ctx.maxwellian.with_density(1.0))
    n = ctx.maxwellian.n

    def sampler(rng, count):
        v, I = proposal.draw(rng, count)
        v_star, I_star, sigma, total, m_total, J = collision_draw(rng, count, proposal, ctx.law, I,
                                                                  mc.stratified)
        B = ctx.model.eval_B_batch(v, v_star, I, I_star, J, sigma)
        return n * 4.0 * np.pi * m_total * B

    return estimate(sampler, mc, label)


def spectrum_check(ctx: LinearizedContext, mc: MonteCarloConfig,
                   basis: Optional[GalerkinBasis] = None,
                   enriched: Tuple[int, int] = (8, 6)) -> VerificationReport:
    """Galerkin assembly at two basis sizes with structural and Monte Carlo checks"""
    basis = basis or GalerkinBasis()
    report = VerificationReport('spectrum', seed=mc.seed)
    bound = basis.bind(ctx)
    velocity_error, energy_error = bound.gram_errors()
    report.add_check('gram_velocity', velocity_error, velocity_error, GRAM_TOLERANCE,
                     velocity_error < GRAM_TOLERANCE, kind='quadrature')
    report.add_check('gram_energy', energy_error, energy_error, GRAM_TOLERANCE,
                     energy_error < GRAM_TOLERANCE, kind='quadrature')

    coarse = assemble_K_matrix(ctx, basis)
    fine = assemble_K_matrix(ctx, basis.enriched(*enriched))
    asymmetry = float(np.max(np.abs(coarse.kappa1_part - coarse.kappa1_part.T)))
    size = float(np.max(np.abs(coarse.kappa1_part), initial=0.0))
    report.add_check('kappa1_symmetric', asymmetry, asymmetry, SYMMETRY_TOLERANCE * max(size, 1.0),
                     asymmetry <= SYMMETRY_TOLERANCE * max(size, 1.0))

    oracle = leading_entry_mc(ctx, mc)
    report.add_statistical('entry_00_mc', oracle.value, oracle.std_err, float(coarse.matrix[0, 0]),
                           mc.n_sigma, floor=1e-6 * abs(coarse.matrix[0, 0]) + NOISE_FLOOR * oracle.scale)
    report.add_metric('basis', basis.to_dict())
    report.add_metric('enriched_basis', fine.basis.to_dict())
    report.add_metric('flagged_entries', coarse.flagged + fine.flagged)
    report.add_child(singular_value_report(coarse.matrix, reference=fine.matrix))
    return report
