import numpy as np
from django.test import SimpleTestCase

from core import energy_law
from core.energy_law import EnergyLaw, PowerLaw, Tabulated, TwoRegime, admissibility_check, law_from_dict
from core.exceptions import DomainError


class PowerLawTests(SimpleTestCase):

    def test_density(self):
        self.assertEqual(energy_law.density(PowerLaw(), 0.5), 1.0)
        self.assertAlmostEqual(energy_law.density(PowerLaw(alpha=0.5), 4.0), 2.0, places=14)

    def test_mass(self):
        self.assertAlmostEqual(energy_law.mass(PowerLaw(), 2.0), 2.0, places=14)
        self.assertAlmostEqual(energy_law.mass(PowerLaw(alpha=1.0), 1.0), 0.5, places=14)

    def test_negative_energy_rejected(self):
        with self.assertRaises(DomainError):
            PowerLaw().density(-1.0)
        with self.assertRaises(DomainError):
            PowerLaw(alpha=-0.5)

    def test_integrate_exponential(self):
        value = energy_law.integrate(PowerLaw(), lambda I: np.exp(-I))
        self.assertAlmostEqual(value, 1.0, delta=1e-10)

    def test_integrate_zero_and_constant(self):
        law = PowerLaw(alpha=1.0)
        self.assertEqual(energy_law.integrate(law, lambda I: 0.0, (0.0, 3.0)), 0.0)
        self.assertAlmostEqual(energy_law.integrate(law, lambda I: 1.0, (0.0, 2.0)), law.mass(2.0), places=10)

    def test_partition_closed_form(self):
        self.assertAlmostEqual(energy_law.partition(PowerLaw(), 1.0), 1.0, places=12)
        self.assertAlmostEqual(energy_law.partition(PowerLaw(alpha=1.0), 2.0), 4.0, places=12)

    def test_partition_matches_integration(self):
        law = PowerLaw(alpha=1.0)
        integrated = EnergyLaw.partition(law, 2.0)
        self.assertAlmostEqual(integrated / 4.0, 1.0, delta=1e-9)

    def test_energy_rule_reproduces_partition(self):
        law = PowerLaw(alpha=1.0)
        nodes, weights = energy_law.energy_rule(law, 2.0, 20)
        self.assertAlmostEqual(weights @ np.exp(-nodes / 2.0), 4.0, places=10)

    def test_inverse_mass(self):
        law = PowerLaw(alpha=0.5, scale=2.0)
        E = np.array([0.1, 1.0, 7.5])
        np.testing.assert_allclose(law.inverse_mass(law.mass(E)), E, rtol=1e-12)


class OtherLawTests(SimpleTestCase):

    def test_two_regime_needs_continuity(self):
        with self.assertRaises(DomainError):
            TwoRegime(beta1=0.0, beta2=1.0, c_low=1.0, c_high=2.0)

    def test_two_regime_partition(self):
        law = TwoRegime(beta1=0.0, beta2=1.0)
        self.assertAlmostEqual(law.partition(1.5) / EnergyLaw.partition(law, 1.5), 1.0, delta=1e-9)

    def test_two_regime_inverse_mass(self):
        law = TwoRegime(beta1=0.5, beta2=2.0)
        E = np.array([0.25, 1.0, 3.0])
        np.testing.assert_allclose(law.inverse_mass(law.mass(E)), E, rtol=1e-12)

    def test_tabulated_at_nodes(self):
        law = Tabulated(grid=(0.0, 1.0, 2.0), values=(1.0, 3.0, 2.0))
        np.testing.assert_array_equal(law.density(np.array([0.0, 1.0, 2.0])), [1.0, 3.0, 2.0])

    def test_tabulated_mass_is_trapezoid(self):
        law = Tabulated(grid=(0.0, 1.0, 2.0), values=(1.0, 3.0, 2.0))
        self.assertAlmostEqual(law.mass(2.0), 2.0 + 2.5, places=12)
        self.assertAlmostEqual(float(law.inverse_mass(law.mass(1.5))), 1.5, places=10)

    def test_law_from_dict(self):
        law = law_from_dict({'kind': 'power', 'alpha': 1.0, 'scale': 3.0})
        self.assertEqual(law, PowerLaw(alpha=1.0, scale=3.0))
        self.assertIsInstance(law_from_dict({'kind': 'two_regime', 'beta1': 0.0, 'beta2': 1.0}), TwoRegime)


class AdmissibilityTests(SimpleTestCase):

    def test_declared_exponents_match(self):
        report = admissibility_check(PowerLaw(alpha=1.0, scale=3.0, declared_beta1=1.0, declared_beta2=1.0))
        self.assertTrue(report.passed)
        low = next(c for c in report.checks if c.name == 'low_upper')
        self.assertAlmostEqual(low.estimate, 3.0, places=10)

    def test_exponent_mismatch_fails(self):
        report = admissibility_check(PowerLaw(alpha=0.5, declared_beta1=2.0))
        self.assertFalse(report.passed)
        self.assertIn('low_upper', report.failed_checks)

    def test_declared_exponent_from_dict(self):
        law = law_from_dict({'kind': 'power', 'alpha': 0.5, 'declared_beta1': 2.0})
        self.assertEqual(law.declared_beta1, 2.0)
        self.assertEqual(law_from_dict(law.to_dict()), law)
        report = admissibility_check(law)
        self.assertFalse(report.passed)
        self.assertIn('low_upper', report.failed_checks)

    def test_tabulated_declared_exponents_from_dict(self):
        law = law_from_dict({'kind': 'tabulated', 'grid': [0.0, 1.0, 2.0], 'values': [0.0, 1.0, 2.0],
                             'declared_beta1': 1.0, 'declared_beta2': 1.0})
        self.assertEqual((law.declared_beta1, law.declared_beta2), (1.0, 1.0))

    def test_two_regime_passes(self):
        self.assertTrue(admissibility_check(TwoRegime(beta1=0.0, beta2=1.0)).passed)
