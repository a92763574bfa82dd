import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from dynamics.cocycle import ContinuousCocycle, DiscreteCocycle
from dynamics.dichotomy import autonomous_certificate, discrete_autonomous_certificate
from dynamics.exceptions import DomainError, RobustnessHypothesisError
from dynamics.noise import TimeGrid
from dynamics.robustness import (constants_scan, decomposition_diagnostics, delta_threshold,
                                 gronwall_constants, linear_random_perturbation_check, measured_delta,
                                 power_iteration_projection, projection_transport_residual,
                                 robust_constants, robust_dichotomy_continuous,
                                 robust_dichotomy_discrete)

INTEGER_WINDOW = TimeGrid(-16.0, 16.0, 1.0)


def rotation(angle):
    return np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])


class ConstantsTests(SimpleTestCase):
    def test_threshold_closed_form(self):
        self.assertAlmostEqual(delta_threshold(math.log(2.0)), 1.0 / 3.0, places=14)
        with self.assertRaises(DomainError):
            delta_threshold(0.0)

    def test_gronwall_without_perturbation(self):
        a_tilde, b_tilde = gronwall_constants(math.log(2.0), 0.0)
        self.assertEqual((a_tilde, b_tilde), (math.log(2.0), math.log(2.0)))

    def test_gronwall_reference_values(self):
        a_tilde, b_tilde = gronwall_constants(math.log(2.0), 0.1, D=1.0)
        self.assertAlmostEqual(a_tilde, 0.49801, delta=2e-5)
        self.assertAlmostEqual(b_tilde, 0.63777, delta=2e-5)
        constants = robust_constants(1.0, math.log(2.0), 0.1)
        self.assertAlmostEqual(constants.rho, 0.3, places=12)
        self.assertAlmostEqual(constants.alpha_tilde, a_tilde, places=12)

    def test_gronwall_rates_shrink_and_split(self):
        a = math.log(2.0)
        a_tilde, b_tilde = gronwall_constants(a, 0.1)
        self.assertLess(a_tilde, a)
        self.assertGreater(b_tilde, a_tilde)
        with self.assertRaises(DomainError):
            gronwall_constants(a, 0.34)

    def test_zero_delta_collapses_to_base(self):
        constants = robust_constants(2.0, math.log(2.0), 0.0)
        self.assertAlmostEqual(constants.bound, 2.0, delta=1e-12)
        self.assertAlmostEqual(constants.alpha_tilde, math.log(2.0), delta=1e-12)
        self.assertEqual((constants.d1, constants.d2, constants.rho), (1.0, 1.0, 0.0))

    def test_hypothesis_is_enforced(self):
        with self.assertRaises(RobustnessHypothesisError) as caught:
            robust_constants(1.0, math.log(2.0), 0.4)
        self.assertAlmostEqual(caught.exception.threshold, 1.0 / 3.0)
        with self.assertRaises(DomainError):
            robust_constants(0.5, 1.0, 0.0)

    def test_scan_is_monotone(self):
        scan = constants_scan(1.0, math.log(2.0), [0.0, 0.05, 0.1, 0.2, 0.3])
        bounds = [c.bound for c in scan]
        rates = [c.alpha_tilde for c in scan]
        self.assertEqual(bounds, sorted(bounds))
        self.assertEqual(rates, sorted(rates, reverse=True))
        self.assertEqual(set(scan[2].to_dict()), {'delta', 'threshold', 'rho', 'alpha_tilde',
                                                  'beta_tilde', 'D1', 'D2', 'M', 'K', 'alpha'})


class DiscreteRobustnessTests(SimpleTestCase):
    def test_scalar_perturbation(self):
        base = DiscreteCocycle.constant([[0.5]])
        perturbed = DiscreteCocycle.constant([[0.55]])
        base_cert = discrete_autonomous_certificate([[0.5]])
        self.assertAlmostEqual(measured_delta(base, perturbed, base_cert.bound, INTEGER_WINDOW), 0.05)
        cert = robust_dichotomy_discrete(base, base_cert, perturbed, INTEGER_WINDOW)
        self.assertTrue(cert.verification.passed)
        self.assertLessEqual(cert.exponent, -math.log(0.55) + 1e-9)
        self.assertGreaterEqual(cert.bound, base_cert.bound)
        assert_allclose(cert.stable(3), [[1.0]], atol=1e-9)

    def test_rotated_saddle(self):
        A = np.diag([0.5, 2.0])
        R = rotation(0.01)
        base = DiscreteCocycle.constant(A)
        perturbed = DiscreteCocycle.constant(R @ A @ R.T)
        cert = robust_dichotomy_discrete(base, discrete_autonomous_certificate(A), perturbed,
                                         INTEGER_WINDOW)
        self.assertTrue(cert.verification.passed)
        expected = R @ np.diag([1.0, 0.0]) @ R.T
        assert_allclose(cert.stable(0), expected, atol=1e-8)
        assert_allclose(power_iteration_projection(perturbed, 0), expected, atol=1e-8)
        self.assertLessEqual(projection_transport_residual(perturbed, cert, range(-8, 8)), 1e-8)

    def test_large_perturbation_is_refused(self):
        base = DiscreteCocycle.constant([[0.5]])
        with self.assertRaises(RobustnessHypothesisError):
            robust_dichotomy_discrete(base, discrete_autonomous_certificate([[0.5]]),
                                      DiscreteCocycle.constant([[0.8]]), INTEGER_WINDOW)

    def test_dimension_mismatch(self):
        with self.assertRaises(DomainError):
            robust_dichotomy_discrete(DiscreteCocycle.constant([[0.5]]),
                                      discrete_autonomous_certificate([[0.5]]),
                                      DiscreteCocycle.constant(np.eye(2)), INTEGER_WINDOW)

    def test_decomposition_rates(self):
        A = np.diag([0.5, 2.0])
        cocycle = DiscreteCocycle.constant(A)
        diagnostics = decomposition_diagnostics(cocycle, discrete_autonomous_certificate(A), 0)
        self.assertAlmostEqual(diagnostics.forward_rate, math.log(2.0), places=6)
        self.assertAlmostEqual(diagnostics.backward_rate, math.log(2.0), places=6)
        self.assertTrue(diagnostics.passed)


class ContinuousRobustnessTests(SimpleTestCase):
    def test_small_time_dependent_perturbation(self):
        A = np.diag([-1.0, 1.0])
        base = ContinuousCocycle.constant(A)
        perturbed = ContinuousCocycle(
            lambda t: A + 0.02 * np.array([[math.sin(t), 1.0], [0.0, math.cos(t)]]), 2, name='perturbed'
        )
        window = TimeGrid(-4.0, 4.0, 0.25)
        base_cert = autonomous_certificate(A)
        cert = robust_dichotomy_continuous(base, base_cert, perturbed, window)
        self.assertFalse(cert.discrete)
        self.assertTrue(cert.verification.passed)
        self.assertLess(cert.exponent, base_cert.exponent)
        self.assertIn('k_hat', cert.notes)
        self.assertAlmostEqual(cert.bound, max(1.0, cert.notes['m_hat']))
        stable = cert.stable(0.5)
        assert_allclose(stable @ stable, stable, atol=1e-6)

    def test_lifted_unperturbed_bound(self):
        A = np.diag([-1.0, 1.0])
        base = ContinuousCocycle.constant(A)
        base_cert = autonomous_certificate(A)
        cert = robust_dichotomy_continuous(base, base_cert, base, TimeGrid(-2.0, 2.0, 0.25), verify=False)
        # K sup_{0<=t<=1} ||e^{At}|| e^{beta t} with ||e^{At}|| = e^t
        expected = base_cert.bound * math.exp(1.0 + base_cert.exponent)
        self.assertAlmostEqual(cert.notes['k_hat'], expected, delta=0.05 * expected)
        self.assertAlmostEqual(cert.exponent, base_cert.exponent, places=12)


class LinearPerturbationCheckTests(SimpleTestCase):
    def test_zero_perturbation_is_satisfied(self):
        check = linear_random_perturbation_check(np.diag([-1.0, 1.0]), lambda t: np.zeros((2, 2)),
                                                 TimeGrid(-4.0, 4.0, 1.0))
        self.assertEqual(check.epsilon_measured, 0.0)
        self.assertTrue(check.satisfied)
        self.assertEqual(check.to_dict()['verdict'], 'satisfied')

    def test_large_perturbation_is_flagged(self):
        check = linear_random_perturbation_check(np.diag([-1.0, 1.0]), lambda t: 10.0 * np.eye(2),
                                                 TimeGrid(-4.0, 4.0, 1.0))
        self.assertAlmostEqual(check.epsilon_measured, 10.0, places=9)
        self.assertFalse(check.satisfied)
        self.assertEqual(check.verdict, 'hypothesis not satisfied')
