import numpy as np
from django.test import SimpleTestCase
from scipy import special

from core import special_fn
from core.exceptions import DomainError
from core.special_fn import BesselConfig, ScaledValue


class BesselTests(SimpleTestCase):

    def test_known_values(self):
        self.assertEqual(special_fn.bessel_i0(0.0), 1.0)
        self.assertAlmostEqual(special_fn.bessel_i0(1.0), 1.2660658777520082, places=12)

    def test_matches_scipy_on_both_branches(self):
        for X in (0.5, 5.0, 14.9, 15.1, 40.0, 300.0):
            self.assertAlmostEqual(special_fn.bessel_i0(X) / special.i0(X), 1.0, delta=1e-10)

    def test_asymptotic_ratio(self):
        ratio = special_fn.bessel_i0(10.0) * np.sqrt(20.0 * np.pi) / np.exp(10.0)
        self.assertTrue(0.98 <= ratio <= 1.02)

    def test_overflow(self):
        with self.assertRaises(DomainError):
            special_fn.bessel_i0(800.0)
        scaled = special_fn.bessel_i0(800.0, BesselConfig(overflow='scaled'))
        self.assertIsInstance(scaled, ScaledValue)
        self.assertAlmostEqual(scaled.log_value, np.log(special.i0e(800.0)) + 800.0, places=8)

    def test_scaled_envelope(self):
        for X in (1.0, 10.0, 100.0, 700.0):
            product = special_fn.bessel_i0e(X) * (1.0 + np.sqrt(X))
            self.assertTrue(0.3 < product < 2.0, (X, product))


class PhiAlphaTests(SimpleTestCase):

    def test_gaussian_half_integral(self):
        self.assertAlmostEqual(special_fn.phi_alpha(0.0, 0.0, 1.0), np.sqrt(np.pi / 2.0), places=9)
        self.assertAlmostEqual(special_fn.phi_alpha_at_zero(0.0, 1.0), np.sqrt(np.pi / 2.0), places=14)

    def test_negative_exponent_at_zero(self):
        expected = special_fn.phi_alpha_at_zero(-0.5, 1.0)
        self.assertAlmostEqual(expected, 2.0 ** -0.75 * special.gamma(0.25), places=12)
        self.assertAlmostEqual(special_fn.phi_alpha(0.0, -0.5, 1.0) / expected, 1.0, delta=1e-8)

    def test_domain(self):
        with self.assertRaises(DomainError):
            special_fn.phi_alpha(1.0, -1.0, 1.0)
        with self.assertRaises(DomainError):
            special_fn.phi_alpha(-1.0, 0.0, 1.0)


class ExpRatioTests(SimpleTestCase):

    def test_bound_holds(self):
        report = special_fn.exp_ratio_bound_check(0.5)
        self.assertTrue(report.passed, report.failed_checks)
        diagonal = next(c for c in report.checks if c.name == 'diagonal')
        self.assertEqual(diagonal.estimate, 1.0)

    def test_corollary_at_zero_power(self):
        self.assertEqual(special_fn.corollary_envelope(0.3, 0.0), 1.0)

    def test_rejects_non_positive_rate(self):
        with self.assertRaises(DomainError):
            special_fn.exp_ratio_bound_check(0.0)
