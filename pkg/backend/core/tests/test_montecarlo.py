import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ArgumentError
from core.montecarlo import MCEstimate, MonteCarloConfig, estimate, estimate_columns, family_sigma


def gaussian_sampler(rng, n):
    return rng.standard_normal(n) + 2.0


class EstimateTests(SimpleTestCase):

    def test_thread_count_does_not_change_result(self):
        serial = estimate(gaussian_sampler, MonteCarloConfig(samples=40_000, seed=7, shards=8, threads=1), 'g')
        pooled = estimate(gaussian_sampler, MonteCarloConfig(samples=40_000, seed=7, shards=8, threads=4), 'g')
        self.assertEqual(serial.value, pooled.value)
        self.assertEqual(serial.std_err, pooled.std_err)

    def test_labels_give_independent_streams(self):
        config = MonteCarloConfig(samples=1000, seed=7, shards=2)
        self.assertNotEqual(estimate(gaussian_sampler, config, 'a').value,
                            estimate(gaussian_sampler, config, 'b').value)

    def test_mean_and_error(self):
        result = estimate(gaussian_sampler, MonteCarloConfig(samples=100_000, seed=3), 'mean')
        self.assertEqual(result.samples, 100_000)
        self.assertAlmostEqual(result.std_err, 1.0 / np.sqrt(100_000), delta=2e-4)
        self.assertTrue(result.agrees_with(2.0, n_sigma=5.0))

    def test_constant_sampler(self):
        result = estimate(lambda rng, n: np.full(n, 1.5), MonteCarloConfig(samples=5000, shards=3), 'const')
        self.assertEqual(result.value, 1.5)
        self.assertEqual(result.std_err, 0.0)
        self.assertEqual(result.scale, 1.5)

    def test_columns(self):
        def sampler(rng, n):
            x = rng.random(n)
            return np.column_stack([x, 2.0 * x])
        first, second = estimate_columns(sampler, MonteCarloConfig(samples=2000, shards=2), 'cols', columns=2)
        self.assertAlmostEqual(second.value, 2.0 * first.value, places=12)

    def test_sampler_size_mismatch(self):
        with self.assertRaises(ArgumentError):
            estimate(lambda rng, n: np.zeros(n + 1), MonteCarloConfig(samples=10, shards=1), 'bad')

    def test_invalid_config(self):
        with self.assertRaises(ArgumentError):
            MonteCarloConfig(samples=0)
        with self.assertRaises(ArgumentError):
            MonteCarloConfig(stratification='latin')

    def test_shard_sizes(self):
        self.assertEqual(MonteCarloConfig(samples=10, shards=4).shard_sizes(), [3, 3, 2, 2])


class EstimateArithmeticTests(SimpleTestCase):

    def test_difference_adds_errors_in_quadrature(self):
        diff = MCEstimate(3.0, 3.0, 10, 1.0) - MCEstimate(1.0, 4.0, 20, 2.0)
        self.assertEqual(diff.value, 2.0)
        self.assertAlmostEqual(diff.std_err, 5.0)
        self.assertEqual(diff.samples, 10)
        self.assertEqual(diff.scale, 2.0)

    def test_family_sigma(self):
        self.assertEqual(family_sigma(3.0, 1), 3.0)
        self.assertGreater(family_sigma(3.0, 10), 3.0)
