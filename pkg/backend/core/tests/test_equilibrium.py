import numpy as np
from django.test import SimpleTestCase

from core import equilibrium
from core.energy_law import PowerLaw
from core.equilibrium import Maxwellian, maxwellian_from_dict
from core.exceptions import DomainError


class MaxwellianTests(SimpleTestCase):

    def test_peak_value(self):
        M = Maxwellian()
        self.assertAlmostEqual(equilibrium.evaluate(M, np.zeros(3), 0.0), (2.0 * np.pi) ** -1.5, places=14)

    def test_peak_value_uses_partition(self):
        M = Maxwellian(n=2.0, T_i=2.0, law=PowerLaw(alpha=1.0))
        expected = 2.0 / 4.0 * (2.0 * np.pi) ** -1.5
        self.assertAlmostEqual(M.eval(np.zeros(3), 0.0), expected, places=14)

    def test_total_density(self):
        M = Maxwellian(n=3.0, T_k=1.5, T_i=2.0, law=PowerLaw(alpha=1.0))
        self.assertAlmostEqual(equilibrium.total_density(M) / 3.0, 1.0, delta=1e-6)

    def test_normalization_check(self):
        self.assertTrue(equilibrium.normalization_check(Maxwellian(law=PowerLaw(alpha=0.5))).passed)

    def test_sqrt_eval(self):
        M = Maxwellian(T_k=2.0)
        v, I = np.array([0.3, -1.0, 0.2]), 0.7
        self.assertAlmostEqual(M.sqrt_eval(v, I) ** 2, M.eval(v, I), places=15)

    def test_invalid_parameters(self):
        with self.assertRaises(DomainError):
            Maxwellian(T_k=0.0)
        with self.assertRaises(DomainError):
            Maxwellian(n=-1.0)
        with self.assertRaises(DomainError):
            Maxwellian().eval(np.zeros(3), -1.0)

    def test_zero_density(self):
        self.assertEqual(Maxwellian(n=0.0).eval(np.ones(3), 1.0), 0.0)

    def test_sample_shapes(self):
        v, I = Maxwellian().sample(100, np.random.default_rng(1))
        self.assertEqual(v.shape, (100, 3))
        self.assertEqual(I.shape, (100,))
        self.assertTrue(np.all(I >= 0))
        states = equilibrium.sample(Maxwellian(), 5, np.random.default_rng(1))
        self.assertEqual(len(states), 5)

    def test_from_dict(self):
        M = maxwellian_from_dict({'n': 2.0, 'T_k': 3.0}, PowerLaw())
        self.assertEqual((M.n, M.T_k, M.T_i), (2.0, 3.0, 1.0))
