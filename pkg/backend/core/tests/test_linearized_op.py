import numpy as np
from django.test import SimpleTestCase

from core import linearized_op
from core.cross_section import CrossSectionModel, InternalFactor, KineticFactor
from core.energy_law import PowerLaw
from core.equilibrium import Maxwellian
from core.exceptions import ArgumentError, DomainError, SingularityError
from core.linearized_op import LinearizedContext
from core.montecarlo import MonteCarloConfig
from core.velocity_kernel import KernelOrders

SMALL_ORDERS = KernelOrders(8, 8, 8, 4)


def zero(w, J):
    return np.zeros(np.broadcast(np.asarray(w)[..., 0], np.asarray(J)).shape)


def bump(w, J):
    return np.exp(-0.25 * np.sum(w * w, axis=-1) - 0.5 * np.asarray(J))


class ContextTests(SimpleTestCase):

    def test_defaults(self):
        ctx = LinearizedContext()
        self.assertAlmostEqual(ctx.decay_exponent, 1.0 - 0.2 - 0.25)

    def test_moving_maxwellian(self):
        with self.assertRaises(DomainError):
            LinearizedContext(maxwellian=Maxwellian(u=(1.0, 0.0, 0.0)))

    def test_exponent_ranges(self):
        with self.assertRaises(DomainError):
            LinearizedContext(a_exponent=1.0)
        with self.assertRaises(DomainError):
            LinearizedContext(a_exponent=0.5, alpha_exponent=0.3)

    def test_law_mismatch(self):
        with self.assertRaises(ArgumentError):
            LinearizedContext(maxwellian=Maxwellian(law=PowerLaw(alpha=1.0)))


class CollisionFrequencyTests(SimpleTestCase):
    """Constant cross section: nu_bar = 4 pi n everywhere"""

    def test_constant_kernel(self):
        model = CrossSectionModel(kinetic=KineticFactor.power(0.0))
        for n in (1.0, 2.0):
            ctx = LinearizedContext(maxwellian=Maxwellian(n=n), model=model)
            for v in ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]):
                with self.subTest(n=n, v=v):
                    self.assertAlmostEqual(linearized_op.nu_bar(ctx, v, 0.5) / (4.0 * np.pi * n), 1.0,
                                           delta=1e-8)

    def test_monte_carlo_agrees(self):
        ctx = LinearizedContext()
        exact = linearized_op.nu_bar(ctx, [0.5, 0.0, 0.0], 1.0)
        mc = linearized_op.nu_bar_mc(ctx, [0.5, 0.0, 0.0], 1.0, MonteCarloConfig(samples=50_000, seed=5))
        self.assertTrue(mc.agrees_with(exact, n_sigma=5.0))

    def test_negative_energy(self):
        with self.assertRaises(DomainError):
            linearized_op.nu_bar(LinearizedContext(), np.zeros(3), -0.1)


class KernelTests(SimpleTestCase):

    def setUp(self):
        self.ctx = LinearizedContext()
        self.mc = MonteCarloConfig(samples=4000, seed=9, shards=2)

    def test_diagonal_is_singular(self):
        with self.assertRaises(SingularityError):
            linearized_op.kappa2_eval(self.ctx, [0.1, 0.2, 0.3], 1.0, [0.1, 0.2, 0.3], 0.5)

    def test_psi_at_zero_shift(self):
        with self.assertRaises(SingularityError):
            linearized_op.psi_eval(self.ctx, np.ones(3), np.zeros(3), 1.0, 1.0, 0.5)

    def test_unknown_energy_kernel(self):
        with self.assertRaises(ArgumentError):
            linearized_op.energy_kernel(self.ctx, 1.0, 0.5, kind='mirrored')

    def test_energy_kernel_positive(self):
        self.assertGreater(linearized_op.energy_kernel(self.ctx, 1.0, 0.5), 0.0)

    def test_energy_kernel_origin(self):
        with self.assertRaises(SingularityError):
            linearized_op.kappa_i_eval(self.ctx, 0.0, 0.0)

    def test_kappa1_sign(self):
        value = linearized_op.kappa1_eval(self.ctx, [0.3, 0.0, 0.0], 0.5, [0.0, -0.4, 0.2], 1.0)
        self.assertLessEqual(value, 0.0)

    def test_kappa2_below_tensor_product(self):
        v, eta = [0.5, 0.0, 0.0], [0.0, 0.7, 0.0]
        kappa2 = linearized_op.kappa2_eval(self.ctx, v, 0.5, eta, 0.8)
        bound = linearized_op.kappa_k_eval(self.ctx, v, eta) * linearized_op.kappa_i_eval(self.ctx, 0.5, 0.8)
        self.assertGreaterEqual(kappa2, 0.0)
        self.assertLessEqual(kappa2, bound * (1.0 + 1e-8))

    def test_k2_of_zero(self):
        self.assertEqual(linearized_op.k2_direct(self.ctx, zero, [0.3, 0.0, 0.0], 0.5, self.mc).value, 0.0)
        self.assertEqual(linearized_op.k2_kernel(self.ctx, zero, [0.3, 0.0, 0.0], 0.5,
                                                 orders=SMALL_ORDERS, energy_order=8), 0.0)

    def test_substituted_k3_reuses_k2_draws(self):
        v = [0.3, -0.4, 0.1]
        k2 = linearized_op.k2_direct(self.ctx, bump, v, 0.5, self.mc)
        k3 = linearized_op.k3_direct(self.ctx, bump, v, 0.5, self.mc, mode='substituted', label='k2')
        self.assertEqual(k2.value, k3.value)

    def test_unknown_k3_mode(self):
        with self.assertRaises(ArgumentError):
            linearized_op.k3_direct(self.ctx, bump, np.zeros(3), 0.5, self.mc, mode='mirrored')


class KappaDefinitionTests(SimpleTestCase):

    def test_definition_matches_product_form(self):
        ctx = LinearizedContext()
        v, eta = [0.5, -0.2, 0.1], [0.1, 0.6, -0.3]
        defining = linearized_op.kappa2_defining(ctx, v, 0.4, eta, 0.9)
        product = linearized_op.kappa2_eval(ctx, v, 0.4, eta, 0.9)
        self.assertGreater(defining, 0.0)
        self.assertAlmostEqual(defining / product, 1.0, delta=1e-6)

    def test_exchange_weight_lowers_kappa2(self):
        ctx = LinearizedContext(model=CrossSectionModel(exchange=0.5))
        v, eta = [0.5, 0.0, 0.0], [0.0, 0.7, 0.0]
        defining = linearized_op.kappa2_defining(ctx, v, 0.5, eta, 0.8)
        self.assertAlmostEqual(defining / linearized_op.kappa2_eval(ctx, v, 0.5, eta, 0.8), 1.0, delta=1e-6)
        bound = linearized_op.kappa_k_eval(ctx, v, eta) * linearized_op.kappa_i_eval(ctx, 0.5, 0.8)
        self.assertLess(defining, bound)

    def test_definition_check(self):
        report = linearized_op.kappa2_definition_check(LinearizedContext(), np.random.default_rng(4), points=2)
        self.assertTrue(report.passed, report.failed_checks)
        self.assertEqual(len(report.checks), 4)

    def test_diagonal_is_singular(self):
        with self.assertRaises(SingularityError):
            linearized_op.kappa2_defining(LinearizedContext(), np.ones(3), 0.5, np.ones(3), 0.5)


class OperatorCheckTests(SimpleTestCase):

    def setUp(self):
        self.ctx = LinearizedContext()
        self.mc = MonteCarloConfig(samples=20_000, seed=23, shards=2, n_sigma=5.0)

    def test_hs_norm(self):
        report = linearized_op.hs_norm_check(self.ctx)
        self.assertTrue(report.passed, report.failed_checks)
        self.assertGreater(report.metrics['hs_norm_squared'], 0.0)

    def test_kernel_equivalence(self):
        report = linearized_op.kernel_equivalence_check(self.ctx, self.mc, np.random.default_rng(6), points=2)
        self.assertTrue(report.passed, report.failed_checks)
        checks = {c.name: c for c in report.checks}
        self.assertEqual(checks['k3_substituted_identity'].error, 0.0)
        self.assertEqual(checks['zero_function'].estimate, 0.0)

    def test_decomposition(self):
        report = linearized_op.decomposition_check(self.ctx, self.mc, np.random.default_rng(7), points=2)
        self.assertTrue(report.passed, report.failed_checks)
        self.assertEqual(len(report.checks), 2)

    def test_tail_decay(self):
        report = linearized_op.tail_decay_check(self.ctx, R_values=(2.0, 4.0, 8.0))
        self.assertTrue(report.passed, report.failed_checks)
        tails = report.metrics['gaussian_normalized_tails']
        self.assertGreater(tails[0], tails[-1])

    def test_translation_continuity(self):
        report = linearized_op.translation_continuity_check(self.ctx)
        self.assertTrue(report.passed, report.failed_checks)
        norms = [row[1] for row in report.tables['translation_norms']['rows']]
        self.assertEqual(norms, sorted(norms, reverse=True))


class ConstantGammaOneTests(SimpleTestCase):
    """gamma = 1 with the constant and linear energy laws"""

    def context(self, alpha: float) -> LinearizedContext:
        law = PowerLaw(alpha=alpha)
        model = CrossSectionModel(internal=InternalFactor.normalized_power(1.0), law=law, gamma=1.0)
        return LinearizedContext(maxwellian=Maxwellian(law=law), model=model, a_exponent=0.25)

    def test_decay_exponent(self):
        self.assertAlmostEqual(self.context(0.0).decay_exponent, 0.25)

    def test_tail_decay(self):
        for alpha in (0.0, 1.0):
            report = linearized_op.tail_decay_check(self.context(alpha), R_values=(2.0, 4.0, 8.0))
            self.assertTrue(report.passed, (alpha, report.failed_checks))
            self.assertAlmostEqual(report.metrics['decay_exponent'], 0.25)

    def test_hs_norm_finite(self):
        value, record = linearized_op.hs_norm_kappa1(self.context(0.0))
        self.assertTrue(np.isfinite(value))
        self.assertGreater(value, 0.0)
