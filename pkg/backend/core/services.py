"""
Services for loading run configurations and running verification suites
"""
import json
import logging
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
from django.conf import settings
from rest_framework import serializers

from . import (analysis, collision_op, cross_section, equilibrium, kinematics, linearized_op, special_fn,
               velocity_kernel)
from .cross_section import CrossSectionModel, KineticFactor, model_from_dict
from .energy_law import EnergyLaw, PowerLaw, admissibility_check, law_from_dict
from .equilibrium import Maxwellian, maxwellian_from_dict
from .exceptions import ConfigurationError, ResonantError
from .linearized_op import LinearizedContext
from .montecarlo import MonteCarloConfig, default_config
from .reports import VerificationReport
from .serializers import SUITE_NAMES, RunConfigSerializer
from .velocity_kernel import KernelOrders

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Validated run configuration with the numerical objects it describes"""
    law: EnergyLaw
    model: CrossSectionModel
    maxwellian: Maxwellian
    mc: MonteCarloConfig
    orders: KernelOrders
    energy_order: int
    a: float
    alpha: float
    hs_rel_tol: float
    hs_levels: int
    checks: Dict[str, Any]
    suite: Optional[str] = None
    out: Optional[str] = None
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def context(self) -> LinearizedContext:
        return LinearizedContext(self.maxwellian, self.model, self.a, self.alpha, self.orders, self.energy_order)

    def rng(self, label: str) -> np.random.Generator:
        """Generator for one suite, fixed by (seed, label)"""
        seed = np.random.SeedSequence(self.mc.seed, spawn_key=(zlib.crc32(label.encode('utf-8')),))
        return np.random.default_rng(seed)


class ConfigService:
    """Service for reading and validating run configurations"""

    @staticmethod
    def resolve_path(path: Union[str, Path, None]) -> Optional[Path]:
        """Explicit paths as given, else relative to the config directory, else the default config"""
        config_dir = Path(settings.VERIFY_CONFIG_DIR)
        if path is None:
            default = config_dir / settings.VERIFY_DEFAULT_CONFIG
            return default if default.exists() else None
        path = Path(path)
        if path.exists() or path.is_absolute():
            return path
        return config_dir / path

    @staticmethod
    def read(path: Union[str, Path, None]) -> Dict[str, Any]:
        resolved = ConfigService.resolve_path(path)
        if resolved is None:
            logger.info("No configuration file found, using built-in defaults")
            return {}
        if not resolved.exists():
            raise ConfigurationError(f"Configuration file not found: {resolved}")
        try:
            data = json.loads(resolved.read_text())
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Malformed configuration {resolved}: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration {resolved} must hold a JSON object")
        logger.info(f"Loaded configuration from {resolved}")
        return data

    @staticmethod
    def build(data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """
        Validate ``data`` and build the numerical objects. ``overrides`` holds
        command-line Monte Carlo settings (samples, seed, threads) and wins
        over the file.
        """
        data = dict(data)
        mc_overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        if mc_overrides:
            data['monte_carlo'] = {**data.get('monte_carlo', {}), **mc_overrides}

        serializer = RunConfigSerializer(data=data)
        try:
            serializer.is_valid(raise_exception=True)
        except serializers.ValidationError as e:
            raise ConfigurationError('Invalid configuration', details=e.detail)
        validated = serializer.validated_data

        try:
            law = law_from_dict(dict(validated['law']))
            model = model_from_dict(dict(validated['cross_section']), law)
            maxwellian = maxwellian_from_dict(validated['maxwellian'], law)
            mc_data = validated['monte_carlo']
            mc = replace(default_config(samples=mc_data['samples'], seed=mc_data.get('seed')),
                         stratification=mc_data['stratification'], n_sigma=mc_data['n_sigma'])
            if mc_data.get('shards'):
                mc = replace(mc, shards=mc_data['shards'])
            if mc_data.get('threads'):
                mc = replace(mc, threads=mc_data['threads'])
            q = validated['quadrature']
            run = RunConfig(
                law=law,
                model=model,
                maxwellian=maxwellian,
                mc=mc,
                orders=KernelOrders(q['psi_order'], q['radial_order'], q['polar_order'], q['azimuth_order']),
                energy_order=q['energy_order'],
                a=validated['linearization']['a'],
                alpha=validated['linearization']['alpha'],
                hs_rel_tol=q['hs_rel_tol'],
                hs_levels=q['hs_levels'],
                checks=dict(validated['checks']),
                suite=validated.get('suite'),
                out=validated.get('out'),
            )
            run.context  # raises on an inadmissible linearization point
        except ResonantError as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"Invalid configuration: {e}")

        run.raw = json.loads(json.dumps(validated))
        run.raw['monte_carlo'].update(seed=mc.seed, shards=mc.shards, threads=mc.threads)
        return run

    @staticmethod
    def load(path: Union[str, Path, None] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        return ConfigService.build(ConfigService.read(path), overrides)


class SuiteService:
    """Service for running the named verification suites"""

    @staticmethod
    def _guarded(report: VerificationReport, name: str, build: Callable[[], VerificationReport]) -> None:
        """Attach a child report; numerical failures become a failed check instead of aborting the suite"""
        try:
            report.add_child(build())
        except ResonantError as e:
            logger.warning(f"[{report.suite}] {name} aborted: {e}")
            report.add_check(f'{name}_completed', float('nan'), float('nan'), 0.0, False,
                             kind='exception', error_type=type(e).__name__, message=str(e))

    @staticmethod
    def kinematics(run: RunConfig) -> VerificationReport:
        report = VerificationReport('verify-kinematics', seed=run.mc.seed)
        rng = run.rng('verify-kinematics')
        count = run.checks['collisions']
        SuiteService._guarded(report, 'conservation', lambda: kinematics.conservation_check(rng, count))
        SuiteService._guarded(report, 'za_roundtrip', lambda: kinematics.za_roundtrip_check(rng, count))
        SuiteService._guarded(report, 'sphere_cap', lambda: kinematics.sphere_cap_check(run.mc))
        return report

    @staticmethod
    def jacobian(run: RunConfig) -> VerificationReport:
        report = VerificationReport('verify-jacobian', seed=run.mc.seed)
        SuiteService._guarded(report, 'jacobian', lambda: kinematics.jacobian_check(run.mc))
        return report

    @staticmethod
    def cross_section(run: RunConfig) -> VerificationReport:
        report = VerificationReport('verify-cross-section', seed=run.mc.seed)
        rng = run.rng('verify-cross-section')
        model = run.model
        steps = [
            ('symmetry', lambda: cross_section.check_symmetry(model, run.checks['tensor_samples'], rng)),
            ('bk_envelope', lambda: cross_section.bk_envelope_check(model)),
            ('bi_envelope', lambda: cross_section.bi_envelope_check(model)),
            ('bi_regime', lambda: cross_section.bi_regime_check(model, run.a)),
            ('bbar_bound', lambda: cross_section.bbar_bound_check(model)),
            ('bbar_symmetry', lambda: cross_section.bbar_symmetry_check(model, rng)),
            ('normalization', lambda: equilibrium.normalization_check(run.maxwellian)),
            ('sampling', lambda: equilibrium.sampling_check(run.maxwellian, run.checks['collisions'], rng)),
            ('admissibility', lambda: admissibility_check(run.law, (run.a,))),
        ]
        for name, build in steps:
            SuiteService._guarded(report, name, build)
        return report

    @staticmethod
    def htheorem(run: RunConfig) -> VerificationReport:
        report = VerificationReport('verify-htheorem', seed=run.mc.seed)
        rng = run.rng('verify-htheorem')
        law = run.law
        if not law.is_lebesgue:
            logger.warning("Entropy checks need the Lebesgue energy law; using it instead of the configured law")
            law = PowerLaw()
        model = replace(run.model, law=law)
        SuiteService._guarded(report, 'mixture_conservation',
                              lambda: collision_op.mixture_conservation_check(model, law, run.mc))
        SuiteService._guarded(report, 'htheorem', lambda: collision_op.htheorem_check(model, law, run.mc, rng))
        SuiteService._guarded(report, 'two_temperature',
                              lambda: collision_op.two_temperature_check(model, law, run.mc, rng,
                                                                         points=run.checks['points']))
        return report

    @staticmethod
    def kernel_equivalence(run: RunConfig) -> VerificationReport:
        report = VerificationReport('verify-kernel-equivalence', seed=run.mc.seed)
        rng = run.rng('verify-kernel-equivalence')
        ctx = run.context
        points = run.checks['points']
        steps = [
            ('kernel_equivalence', lambda: linearized_op.kernel_equivalence_check(ctx, run.mc, rng, points)),
            ('monatomic_equivalence_sine', lambda: linearized_op.monatomic_equivalence_check(
                ctx.kT_k, run.mc, rng, points, KineticFactor.interpolated(0.5), suite='k2m-equivalence-sine')),
            ('decomposition', lambda: linearized_op.decomposition_check(ctx, run.mc, rng, min(points, 5))),
            ('linearized_prediction', lambda: linearized_op.linearized_prediction_check(
                ctx, run.mc, rng, run.checks['epsilon'])),
        ]
        for name, build in steps:
            SuiteService._guarded(report, name, build)
        return report

    @staticmethod
    def phi_alphas(run: RunConfig) -> List[float]:
        """Configured phi_alpha exponents, else 1, -delta1 and delta2 of the cross-section"""
        configured = run.checks.get('phi_alphas')
        if configured:
            return list(configured)
        return sorted({1.0, -run.model.delta1 or 0.0, run.model.delta2})

    @staticmethod
    def bounds(run: RunConfig) -> VerificationReport:
        report = VerificationReport('verify-bounds', seed=run.mc.seed)
        rng = run.rng('verify-bounds')
        ctx = run.context
        m = run.maxwellian
        steps = [
            ('tensor_bound', lambda: linearized_op.tensor_bound_check(ctx, rng, run.checks['tensor_samples'])),
            ('kappa2_definition', lambda: linearized_op.kappa2_definition_check(ctx, rng)),
            ('kappa_i_bound', lambda: linearized_op.kappa_i_bound_check(ctx)),
            ('kappa_i_integral', lambda: linearized_op.kappa_i_integral_check(ctx)),
            ('kappa_i_l2', lambda: linearized_op.kappa_i_l2_check(ctx)),
            ('kappa2_integral', lambda: linearized_op.kappa2_integral_check(ctx)),
            ('psi_m_bound', lambda: velocity_kernel.psi_m_bound_check(ctx.velocity, run.model.delta2, rng)),
            ('kappa_m_bounds', lambda: velocity_kernel.kappa_m_bounds_check(ctx.velocity)),
            ('kappa1', lambda: linearized_op.kappa1_check(ctx, rng)),
            ('nu_bar', lambda: linearized_op.nu_bar_check(ctx, run.mc, rng)),
            ('bessel_envelope', lambda: special_fn.bessel_envelope_check()),
            ('phi_alpha', lambda: special_fn.phi_alpha_bound_check(
                SuiteService.phi_alphas(run), m.T_k, m.k_B)),
            ('exp_ratio', lambda: special_fn.exp_ratio_bound_check(1.0 / (4.0 * m.kT_i))),
            ('admissibility', lambda: admissibility_check(run.law, (run.a,))),
        ]
        for name, build in steps:
            SuiteService._guarded(report, name, build)
        return report

    @staticmethod
    def tail(run: RunConfig) -> VerificationReport:
        report = VerificationReport('verify-tail', seed=run.mc.seed)
        ctx = run.context
        SuiteService._guarded(report, 'tail_decay',
                              lambda: linearized_op.tail_decay_check(ctx, R_values=run.checks['tail_radii']))
        SuiteService._guarded(report, 'translation', lambda: linearized_op.translation_continuity_check(
            ctx, radius=run.checks['translation_radius'], shifts=run.checks['shift_ladder']))
        return report

    @staticmethod
    def hs_norm(run: RunConfig) -> VerificationReport:
        report = VerificationReport('hs-norm', seed=run.mc.seed)
        SuiteService._guarded(report, 'hs_norm', lambda: linearized_op.hs_norm_check(
            run.context, run.hs_rel_tol, run.hs_levels))
        return report

    @staticmethod
    def spectrum(run: RunConfig) -> VerificationReport:
        report = VerificationReport('spectrum', seed=run.mc.seed)
        g = run.checks['galerkin']
        basis = analysis.GalerkinBasis(g['velocity_modes'], g['energy_modes'], order=g['order'])
        enriched = (g['enriched_velocity_modes'], g['enriched_energy_modes'])
        SuiteService._guarded(report, 'spectrum',
                              lambda: analysis.spectrum_check(run.context, run.mc, basis, enriched))
        return report

    @staticmethod
    def all(run: RunConfig) -> VerificationReport:
        report = VerificationReport('all', seed=run.mc.seed)
        for name in SUITE_NAMES:
            if name == 'all':
                continue
            logger.info(f"Running suite '{name}'")
            report.add_child(SUITE_RUNNERS[name](run))
        return report

    @staticmethod
    def run(name: str, run: RunConfig) -> VerificationReport:
        if name not in SUITE_RUNNERS:
            raise ConfigurationError(f"Unknown suite '{name}'", details={'suite': SUITE_NAMES})
        logger.info(f"Running '{name}' with {run.mc.samples} samples, seed {run.mc.seed}")
        report = SUITE_RUNNERS[name](run)
        report.config = run.raw
        report.finish()
        status = 'passed' if report.passed else f"failed ({', '.join(report.failed_checks)})"
        logger.info(f"Suite '{name}' {status} in {report.wall_time:.1f}s")
        return report


SUITE_RUNNERS: Dict[str, Callable[[RunConfig], VerificationReport]] = {
    'verify-kinematics': SuiteService.kinematics,
    'verify-jacobian': SuiteService.jacobian,
    'verify-cross-section': SuiteService.cross_section,
    'verify-htheorem': SuiteService.htheorem,
    'verify-kernel-equivalence': SuiteService.kernel_equivalence,
    'verify-bounds': SuiteService.bounds,
    'verify-tail': SuiteService.tail,
    'hs-norm': SuiteService.hs_norm,
    'spectrum': SuiteService.spectrum,
    'all': SuiteService.all,
}
