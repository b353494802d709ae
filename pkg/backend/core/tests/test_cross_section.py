import numpy as np
from django.test import SimpleTestCase

from core import cross_section
from core.cross_section import CrossSectionModel, InternalFactor, KineticFactor, model_from_dict
from core.energy_law import PowerLaw
from core.exceptions import DomainError


class EvalTests(SimpleTestCase):

    def test_default_model_example(self):
        value = cross_section.eval_B(CrossSectionModel(), [2.0, 0.0, 0.0], [0.0, 0.0, 0.0],
                                     0.5, 0.5, 0.3, [0.0, 1.0, 0.0])
        self.assertAlmostEqual(value, 2.0, places=14)

    def test_outside_support(self):
        value = cross_section.eval_B(CrossSectionModel(), [2.0, 0.0, 0.0], np.zeros(3), 0.5, 0.5, 2.0,
                                     [0.0, 1.0, 0.0])
        self.assertEqual(value, 0.0)

    def test_grazing_limit(self):
        v = [0.3, 0.1, -0.2]
        self.assertEqual(cross_section.eval_B(CrossSectionModel(), v, v, 0.5, 0.5, 0.3, [0.0, 0.0, 1.0]), 0.0)

    def test_parameter_ranges(self):
        with self.assertRaises(DomainError):
            CrossSectionModel(delta2=0.5)
        with self.assertRaises(DomainError):
            CrossSectionModel(gamma=2.0)
        with self.assertRaises(DomainError):
            KineticFactor.interpolated(1.5)

    def test_presets(self):
        model = model_from_dict({'preset': 'maxwell'}, PowerLaw())
        self.assertEqual(model.kinetic.radial_power, 0.0)
        model = model_from_dict({'preset': 'interpolated-alpha', 'delta1': 0.5}, PowerLaw())
        self.assertEqual(model.kinetic.family, 'interpolated')
        self.assertEqual(model.delta1, 0.5)

    def test_preset_takes_top_level_gamma(self):
        model = model_from_dict({'preset': 'hard-sphere-like', 'gamma': 0.5}, PowerLaw())
        self.assertEqual(model.gamma, 0.5)
        self.assertEqual(model.internal.terms, ((1.0, 0.5),))
        self.assertAlmostEqual(model.internal.max_gamma, 0.5)


class AveragedTests(SimpleTestCase):

    def test_constant_integrand(self):
        model = CrossSectionModel(kinetic=KineticFactor.power(0.0))
        value = cross_section.averaged_Bbar(model, [1.0, 0.0, 0.0], [0.0, 0.5, 0.0], 0.4, 1.1)
        self.assertAlmostEqual(value, 4.0 * np.pi, places=10)

    def test_quadrature_matches_factorized_form(self):
        model = CrossSectionModel(kinetic=KineticFactor.interpolated(0.5), law=PowerLaw(alpha=1.0),
                                  internal=InternalFactor.normalized_power(0.5), gamma=0.5)
        v, v_star = np.array([1.0, -0.5, 0.2]), np.array([-0.4, 0.3, 0.9])
        quadrature = cross_section.averaged_Bbar(model, v, v_star, 0.7, 1.3)
        factorized = cross_section.averaged_Bbar_factorized(model, np.linalg.norm(v - v_star), 0.7, 1.3)
        self.assertAlmostEqual(quadrature / factorized, 1.0, delta=1e-8)

    def test_zero_energy(self):
        self.assertEqual(cross_section.averaged_Bbar(CrossSectionModel(), np.ones(3), np.zeros(3), 0.0, 0.0), 0.0)


class CheckTests(SimpleTestCase):

    def test_symmetry_of_default_model(self):
        report = cross_section.check_symmetry(CrossSectionModel(), 2000, np.random.default_rng(2))
        self.assertTrue(report.passed, report.failed_checks)
        reversibility = next(c for c in report.checks if c.name == 'micro_reversibility')
        self.assertLess(reversibility.estimate, 1e-12)

    def test_asymmetric_internal_factor_fails(self):
        model = CrossSectionModel(internal=InternalFactor.asymmetric())
        report = cross_section.check_symmetry(model, 500, np.random.default_rng(2))
        self.assertFalse(report.passed)
        symmetry = next(c for c in report.checks if c.name == 'symmetry')
        self.assertGreater(symmetry.estimate, 0.0)

    def test_bk_envelope(self):
        self.assertTrue(cross_section.bk_envelope_check(CrossSectionModel()).passed)
        self.assertTrue(cross_section.bk_envelope_check(CrossSectionModel(kinetic=KineticFactor.interpolated(0.5))).passed)
        self.assertFalse(cross_section.bk_envelope_check(CrossSectionModel(kinetic=KineticFactor.power(3.0))).passed)

    def test_bi_envelope(self):
        law = PowerLaw(alpha=1.0)
        model = CrossSectionModel(law=law, internal=InternalFactor.normalized_power(0.5), gamma=0.5)
        self.assertTrue(cross_section.bi_envelope_check(model).passed)
        combination = CrossSectionModel(law=law, gamma=0.5,
                                        internal=InternalFactor.linear_combination([(1.0, 0.0), (1.0, 0.5)]))
        self.assertTrue(cross_section.bi_envelope_check(combination).passed)
