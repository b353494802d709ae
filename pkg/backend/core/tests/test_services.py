import json
import tempfile
from pathlib import Path
from unittest import mock

from django.test import SimpleTestCase, override_settings

from core import linearized_op, velocity_kernel
from core.exceptions import ConfigurationError
from core.reports import VerificationReport
from core.serializers import RunConfigSerializer
from core.services import SUITE_RUNNERS, ConfigService, SuiteService


class RunConfigSerializerTests(SimpleTestCase):

    def validate(self, data):
        serializer = RunConfigSerializer(data=data)
        return serializer.is_valid(), serializer

    def test_empty_config_gets_defaults(self):
        valid, serializer = self.validate({})
        self.assertTrue(valid, serializer.errors)
        data = serializer.validated_data
        self.assertEqual(data['monte_carlo']['samples'], 1_000_000)
        self.assertEqual(data['law']['kind'], 'power')
        self.assertEqual(data['checks']['galerkin']['velocity_modes'], 6)

    def test_unknown_keys(self):
        valid, serializer = self.validate({'colour': 'blue'})
        self.assertFalse(valid)
        self.assertIn('colour', serializer.errors)
        valid, serializer = self.validate({'law': {'kind': 'power', 'colour': 'blue'}})
        self.assertFalse(valid)
        self.assertIn('law', serializer.errors)

    def test_cross_section_ranges(self):
        valid, serializer = self.validate({'cross_section': {'delta2': 0.6}})
        self.assertFalse(valid)
        self.assertIn('cross_section', serializer.errors)

    def test_linearization_exponents(self):
        valid, _ = self.validate({'linearization': {'a': 0.9, 'alpha': 0.2}})
        self.assertFalse(valid)
        valid, _ = self.validate({'linearization': {'a': 0.9, 'alpha': 0.04}})
        self.assertTrue(valid)
        valid, _ = self.validate({'cross_section': {'gamma': 1.0}, 'linearization': {'a': 0.6}})
        self.assertFalse(valid)

    def test_moving_maxwellian(self):
        valid, serializer = self.validate({'maxwellian': {'u': [1.0, 0.0, 0.0]}})
        self.assertFalse(valid)
        self.assertIn('maxwellian', serializer.errors)

    def test_tabulated_law_needs_table(self):
        valid, _ = self.validate({'law': {'kind': 'tabulated', 'grid': [0.0, 1.0]}})
        self.assertFalse(valid)


class ConfigServiceTests(SimpleTestCase):

    def test_build_defaults(self):
        run = ConfigService.build({})
        self.assertEqual(run.mc.samples, 1_000_000)
        self.assertEqual(run.context.a_exponent, 0.25)
        self.assertIsNone(run.suite)

    def test_overrides_win(self):
        run = ConfigService.build({'monte_carlo': {'samples': 10, 'seed': 1}},
                                  {'samples': 500, 'seed': 3, 'threads': None})
        self.assertEqual((run.mc.samples, run.mc.seed), (500, 3))
        self.assertEqual(run.raw['monte_carlo']['seed'], 3)

    def test_invalid_data(self):
        with self.assertRaises(ConfigurationError) as cm:
            ConfigService.build({'cross_section': {'gamma': 3.0}})
        self.assertIn('cross_section', cm.exception.details)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            ConfigService.load('/nonexistent/resonant/config.json')

    def test_malformed_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'broken.json'
            path.write_text('{"law": ')
            with self.assertRaises(ConfigurationError):
                ConfigService.load(str(path))
            path.write_text('[1, 2]')
            with self.assertRaises(ConfigurationError):
                ConfigService.load(str(path))

    def test_relative_to_config_dir(self):
        with tempfile.TemporaryDirectory() as tmp:
            (Path(tmp) / 'small.json').write_text(json.dumps({'monte_carlo': {'samples': 42}, 'suite': 'spectrum'}))
            with override_settings(VERIFY_CONFIG_DIR=Path(tmp)):
                run = ConfigService.load('small.json')
        self.assertEqual(run.mc.samples, 42)
        self.assertEqual(run.suite, 'spectrum')

    def test_no_default_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            with override_settings(VERIFY_CONFIG_DIR=Path(tmp)):
                self.assertIsNone(ConfigService.resolve_path(None))
                self.assertEqual(ConfigService.read(None), {})

    def test_suite_rng_is_reproducible(self):
        run = ConfigService.build({'monte_carlo': {'seed': 5}})
        self.assertEqual(run.rng('a').random(), run.rng('a').random())
        self.assertNotEqual(run.rng('a').random(), run.rng('b').random())

    def test_maxwellian_section(self):
        run = ConfigService.build({'maxwellian': {'n': 2.0, 'T_i': 3.0, 'k_B': 0.5}})
        self.assertEqual((run.maxwellian.n, run.maxwellian.T_i, run.maxwellian.k_B), (2.0, 3.0, 0.5))
        self.assertEqual(run.context.kT_i, 1.5)

    def test_gamma_one_config(self):
        run = ConfigService.load('gamma_one.json')
        self.assertEqual(run.model.gamma, 1.0)
        self.assertEqual(run.model.internal.terms, ((1.0, 1.0),))
        self.assertEqual(run.suite, 'verify-tail')
        self.assertAlmostEqual(run.context.decay_exponent, 0.25)
        report = linearized_op.tail_decay_check(run.context, R_values=(2.0, 4.0, 8.0))
        self.assertTrue(report.passed, report.failed_checks)


class SuiteServiceTests(SimpleTestCase):

    def test_every_suite_has_a_runner(self):
        from core.serializers import SUITE_NAMES
        self.assertEqual(set(SUITE_RUNNERS), set(SUITE_NAMES))

    def test_guarded_failure_becomes_a_check(self):
        from core.exceptions import ConvergenceError

        def failing():
            raise ConvergenceError('did not converge')

        report = VerificationReport('parent')
        SuiteService._guarded(report, 'step', failing)
        self.assertFalse(report.passed)
        self.assertEqual(report.failed_checks, ['step_completed'])
        self.assertEqual(report.checks[0].kind, 'exception')

    def test_guarded_success_attaches_child(self):
        report = VerificationReport('parent')
        SuiteService._guarded(report, 'step', lambda: VerificationReport('child'))
        self.assertEqual([c.suite for c in report.children], ['child'])
        self.assertTrue(report.passed)


class PhiAlphaTests(SimpleTestCase):

    def test_default_exponents(self):
        self.assertEqual(SuiteService.phi_alphas(ConfigService.build({})), [0.0, 1.0])

    def test_exponents_follow_cross_section(self):
        run = ConfigService.build({'cross_section': {'delta1': 0.5, 'delta2': 0.25}})
        self.assertEqual(SuiteService.phi_alphas(run), [-0.5, 0.25, 1.0])

    def test_configured_exponents(self):
        run = ConfigService.build({'checks': {'phi_alphas': [0.5, -0.25]}})
        self.assertEqual(SuiteService.phi_alphas(run), [0.5, -0.25])

    def test_unbounded_exponent_rejected(self):
        with self.assertRaises(ConfigurationError) as cm:
            ConfigService.build({'checks': {'phi_alphas': [2.0]}})
        self.assertIn('checks', cm.exception.details)


class BoundsSuiteTests(SimpleTestCase):
    """verify-bounds on the default configuration, heavy quadrature checks stubbed"""

    STUBBED = {
        linearized_op: ('kappa2_definition_check', 'kappa_i_bound_check', 'kappa_i_integral_check',
                        'kappa_i_l2_check', 'kappa2_integral_check', 'kappa1_check', 'nu_bar_check'),
        velocity_kernel: ('psi_m_bound_check', 'kappa_m_bounds_check'),
    }

    def setUp(self):
        for module, names in self.STUBBED.items():
            for name in names:
                patcher = mock.patch.object(module, name, return_value=VerificationReport('stub'))
                patcher.start()
                self.addCleanup(patcher.stop)

    def test_default_config(self):
        run = ConfigService.load(None, {'samples': 1000})
        report = SuiteService.bounds(run)
        self.assertEqual([c.name for c in report.checks if c.kind == 'exception'], [])
        children = {c.suite: c for c in report.children}
        self.assertEqual(len(report.children), 14)
        self.assertTrue(children['phi-alpha'].passed, children['phi-alpha'].failed_checks)
        self.assertEqual(sorted(r.name for r in children['phi-alpha'].checks),
                         ['phi_alpha_0', 'phi_alpha_0_at_zero', 'phi_alpha_1', 'phi_alpha_1_at_zero'])
        self.assertTrue(children['tensor-bound'].passed)
