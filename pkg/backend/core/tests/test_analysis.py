import numpy as np
from django.test import SimpleTestCase

from core import analysis
from core.analysis import GalerkinBasis
from core.exceptions import ArgumentError, DomainError


class BasisTests(SimpleTestCase):

    def test_size(self):
        self.assertEqual(GalerkinBasis(3, 2, order=10).size, 6)

    def test_order_must_exceed_modes(self):
        with self.assertRaises(DomainError):
            GalerkinBasis(6, 4, order=7)
        with self.assertRaises(DomainError):
            GalerkinBasis(0, 4)

    def test_enriched(self):
        richer = GalerkinBasis(2, 2, order=8).enriched(4, 3)
        self.assertEqual((richer.velocity_modes, richer.energy_modes), (4, 3))
        self.assertGreaterEqual(richer.order, 31)


class SingularValueTests(SimpleTestCase):

    def test_diagonal(self):
        np.testing.assert_allclose(analysis.singular_values(np.diag([1.0, 3.0, 2.0])), [3.0, 2.0, 1.0])

    def test_non_finite(self):
        with self.assertRaises(ArgumentError):
            analysis.singular_values(np.array([[np.nan]]))
        with self.assertRaises(ArgumentError):
            analysis.singular_values(np.ones(3))

    def test_report(self):
        report = analysis.singular_value_report(np.diag([3.0, 2.0, 1.0]), reference=np.diag([3.0, 2.0, 1.0, 0.5]))
        self.assertTrue(report.passed, report.failed_checks)
        np.testing.assert_allclose(report.metrics['singular_values'], [3.0, 2.0, 1.0])
        np.testing.assert_allclose(report.tables['singular_values']['rows'][0], [1, 3.0, 1.0])
