import numpy as np
from django.test import SimpleTestCase

from core import kinematics
from core.exceptions import DegenerateConfigurationError, DomainError, SingularityError
from core.kinematics import CollisionParams, State, ZAPoint


class CollisionRuleTests(SimpleTestCase):

    def test_post_velocities_example(self):
        v_post, v_star_post = kinematics.post_velocities([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        np.testing.assert_allclose(v_post, [0.0, 1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(v_star_post, [0.0, -1.0, 0.0], atol=1e-15)

    def test_sigma_along_relative_velocity_is_identity(self):
        v, v_star = np.array([1.0, 2.0, -0.5]), np.array([-0.3, 0.4, 1.0])
        sigma = (v - v_star) / np.linalg.norm(v - v_star)
        v_post, v_star_post = kinematics.post_velocities(v, v_star, sigma)
        np.testing.assert_allclose(v_post, v, atol=1e-14)
        np.testing.assert_allclose(v_star_post, v_star, atol=1e-14)

    def test_post_energies(self):
        self.assertEqual(kinematics.post_energies(1.0, 2.0, 0.0), 3.0)
        self.assertEqual(kinematics.post_energies(1.0, 2.0, 3.0), 0.0)
        self.assertAlmostEqual(kinematics.post_energies(0.7, 0.3, 0.4), 0.6, places=15)
        with self.assertRaises(DomainError):
            kinematics.post_energies(1.0, 2.0, 3.5)

    def test_degenerate_collision_conserves_exactly(self):
        state = State(np.array([0.5, -1.0, 2.0]), 0.0)
        residuals = kinematics.conservation_residuals((state, state), CollisionParams([0.0, 0.0, 1.0], 0.0))
        self.assertEqual(residuals, (0.0, 0.0, 0.0))

    def test_conservation_check(self):
        report = kinematics.conservation_check(np.random.default_rng(3), count=20_000)
        self.assertTrue(report.passed, report.failed_checks)


class ChangeOfVariablesTests(SimpleTestCase):

    def test_forward_midpoint(self):
        point = kinematics.za_forward([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        np.testing.assert_allclose(point.z, [0.5, 0.5, 0.0])
        self.assertAlmostEqual(np.linalg.norm(point.z), np.sqrt(2.0) / 2.0, places=15)

    def test_roundtrip(self):
        rng = np.random.default_rng(11)
        for Theta, sigma in zip(kinematics.sample_sphere(rng, 50), kinematics.sample_sphere(rng, 50)):
            back_Theta, back_sigma = kinematics.za_inverse(kinematics.za_forward(Theta, sigma))
            np.testing.assert_allclose(back_Theta, Theta, atol=1e-12)
            np.testing.assert_allclose(back_sigma, sigma, atol=1e-12)

    def test_roundtrip_check(self):
        report = kinematics.za_roundtrip_check(np.random.default_rng(5), count=20_000)
        self.assertTrue(report.passed, report.failed_checks)

    def test_degenerate_pairs(self):
        with self.assertRaises(DegenerateConfigurationError):
            kinematics.za_forward([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
        with self.assertRaises(DegenerateConfigurationError):
            ZAPoint(np.zeros(3), 0.0)

    def test_jacobian(self):
        self.assertAlmostEqual(kinematics.za_jacobian([0.5, 0.0, 0.0]), 8.0, places=14)
        self.assertAlmostEqual(kinematics.za_jacobian([0.0, 0.6, 0.8]), 4.0, places=14)
        with self.assertRaises(SingularityError):
            kinematics.za_jacobian(np.zeros(3))

    def test_sphere_cap_area(self):
        self.assertAlmostEqual(kinematics.sphere_cap_area(np.sqrt(0.5)), 2.0 * np.pi, places=12)
        self.assertLess(kinematics.sphere_cap_area(1.0 - 1e-9), 1e-7)
        with self.assertRaises(DomainError):
            kinematics.sphere_cap_area(1.0)
