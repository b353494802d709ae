import numpy as np
from django.test import SimpleTestCase

from core import collision_op
from core.collision_op import Proposal
from core.cross_section import CrossSectionModel
from core.densities import ZERO, maxwellian_density, mixture_density
from core.energy_law import PowerLaw
from core.equilibrium import Maxwellian
from core.exceptions import ArgumentError
from core.montecarlo import MonteCarloConfig


class CollisionOperatorTests(SimpleTestCase):

    def setUp(self):
        self.law = PowerLaw(alpha=1.0)
        self.model = CrossSectionModel(law=self.law)
        self.M = Maxwellian(n=1.5, T_k=1.2, T_i=0.8, law=self.law)
        self.mc = MonteCarloConfig(samples=4000, seed=11, shards=2)

    def test_maxwellian_is_an_equilibrium(self):
        result = collision_op.q_eval(maxwellian_density(self.M), [0.4, -0.2, 1.0], 0.7, self.model,
                                     self.law, self.mc, proposal=Proposal(self.M.with_density(1.0)))
        self.assertGreater(result.scale, 0.0)
        self.assertLessEqual(abs(result.value), 1e-10 * result.scale)

    def test_default_proposal_uses_reference(self):
        result = collision_op.q_eval(maxwellian_density(self.M), np.zeros(3), 0.3, self.model, self.law, self.mc)
        self.assertLessEqual(abs(result.value), 1e-10 * result.scale)

    def test_zero_density(self):
        result = collision_op.q_eval(ZERO, np.zeros(3), 1.0, self.model, self.law, self.mc,
                                     proposal=Proposal(self.M.with_density(1.0)))
        self.assertEqual(result.value, 0.0)
        self.assertEqual(result.scale, 0.0)

    def test_negative_energy(self):
        with self.assertRaises(ArgumentError):
            collision_op.q_eval(ZERO, np.zeros(3), -1.0, self.model, self.law, self.mc)

    def test_unknown_test_function(self):
        with self.assertRaises(ArgumentError):
            collision_op.resolve_test_function('v4')
        self.assertTrue(callable(collision_op.resolve_test_function('|v|^2')))


class WeakFormTests(SimpleTestCase):

    def setUp(self):
        self.law = PowerLaw(alpha=1.0)
        self.model = CrossSectionModel(law=self.law)
        self.mc = MonteCarloConfig(samples=20_000, seed=5, shards=2, n_sigma=5.0)
        self.mixture = mixture_density([
            (0.6, Maxwellian(u=(0.5, 0.0, 0.0), T_k=1.0, T_i=1.0, law=self.law)),
            (0.4, Maxwellian(u=(-0.5, 0.25, 0.0), T_k=2.0, T_i=0.5, law=self.law)),
        ], label='bimodal')

    def test_symmetrized_mass_moment_vanishes_per_draw(self):
        result = collision_op.weak_moment(self.mixture, '1', self.model, self.law, self.mc, symmetrized=True)
        self.assertEqual(result.value, 0.0)
        self.assertGreater(result.scale, 0.0)

    def test_symmetrized_energy_moments_vanish(self):
        for name in ('|v|^2', 'I'):
            result = collision_op.weak_moment(self.mixture, name, self.model, self.law, self.mc,
                                              symmetrized=True)
            self.assertLessEqual(abs(result.value), 1e-10 * result.scale, name)

    def test_mixture_conservation(self):
        report = collision_op.mixture_conservation_check(self.model, self.law, self.mc)
        self.assertTrue(report.passed, report.failed_checks)
        names = {c.name for c in report.checks}
        for invariant in collision_op.INVARIANTS:
            self.assertIn(f'{invariant}_forms_agree', names)

    def test_two_temperature_equilibrium(self):
        report = collision_op.two_temperature_check(self.model, self.law, self.mc, np.random.default_rng(2),
                                                    points=3)
        self.assertTrue(report.passed, report.failed_checks)
        zero = next(c for c in report.checks if c.name == 'zero_density')
        self.assertEqual(zero.estimate, 0.0)


class EntropyTests(SimpleTestCase):

    def setUp(self):
        self.law = PowerLaw()
        self.model = CrossSectionModel(law=self.law)
        self.mc = MonteCarloConfig(samples=100_000, seed=17, shards=4, n_sigma=4.0)

    def test_plain_form_at_equilibrium(self):
        f = maxwellian_density(Maxwellian(T_k=1.0, T_i=3.0, law=self.law))
        plain = collision_op.entropy_dissipation(f, self.model, self.law, self.mc, symmetrized=False)
        self.assertLessEqual(abs(plain.value), 1e-10 * plain.scale)

    def test_zero_density_is_rejected(self):
        with self.assertRaises(ArgumentError):
            collision_op.entropy_dissipation(ZERO, self.model, self.law, self.mc)

    def test_htheorem(self):
        report = collision_op.htheorem_check(self.model, self.law, self.mc, np.random.default_rng(8),
                                             family_size=2)
        self.assertTrue(report.passed, report.failed_checks)
        checks = {c.name: c for c in report.checks}
        self.assertLess(checks['mixture_dissipation_negative'].estimate, 0.0)
        for name in ('equilibrium', 'two_temperature', 'mixture', 'random_mixture_0', 'random_mixture_1'):
            self.assertIn(f'{name}_forms_agree', checks)
