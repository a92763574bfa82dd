import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose
from scipy import linalg

from dynamics.cocycle import ContinuousCocycle, DiscreteCocycle
from dynamics.dichotomy import (ConstantProjections, DichotomyCertificate, GreenKernel, LiftedProjections,
                                TabulatedProjections, autonomous_certificate, discrete_autonomous_certificate,
                                green_eval, projection_distance_bound, projection_distance, restricted_inverse,
                                riesz_projection, spectral_projection, verify_dichotomy)
from dynamics.exceptions import DomainError, IsomorphismError, NonHyperbolicError, WindowError
from dynamics.noise import TimeGrid

WINDOW = TimeGrid(-4.0, 4.0, 0.25)
INTEGER_WINDOW = TimeGrid(-4.0, 4.0, 1.0)


class SpectralProjectionTests(SimpleTestCase):
    def test_two_by_two_split(self):
        A = np.array([[0.0, 1.0], [2.0, -1.0]])
        unstable, gap = spectral_projection(A)
        assert_allclose(unstable, [[2 / 3, 1 / 3], [2 / 3, 1 / 3]], atol=1e-10)
        assert_allclose(unstable @ unstable, unstable, atol=1e-12)
        assert_allclose(unstable @ A, A @ unstable, atol=1e-12)
        self.assertAlmostEqual(gap, 1.0)

    def test_contour_quadrature_agrees(self):
        A = np.array([[0.0, 1.0], [2.0, -1.0]])
        unstable, _ = spectral_projection(A)
        assert_allclose(riesz_projection(A, center=1.0, radius=1.0), unstable, atol=1e-8)

    def test_centre_is_rejected(self):
        with self.assertRaises(NonHyperbolicError) as caught:
            spectral_projection([[0.0, 1.0], [-1.0, 0.0]])
        self.assertLess(caught.exception.gap, 1e-8)
        with self.assertRaises(NonHyperbolicError):
            discrete_autonomous_certificate([[1.0, 0.0], [0.0, 0.5]])


class CertificateTests(SimpleTestCase):
    def test_bound_and_exponent_domain(self):
        projections = ConstantProjections(np.eye(1))
        with self.assertRaises(DomainError):
            DichotomyCertificate(bound=0.5, exponent=1.0, projections=projections)
        with self.assertRaises(DomainError):
            DichotomyCertificate(bound=1.0, exponent=0.0, projections=projections)

    def test_scalar_stable_equation(self):
        cert = autonomous_certificate([[-2.0]], margin=0.1)
        self.assertAlmostEqual(cert.exponent, 1.8)
        self.assertEqual(cert.bound, 1.0)
        assert_allclose(cert.stable(3.0), [[1.0]])

    def test_jordan_block_needs_transient_bound(self):
        A = np.array([[-1.0, 1.0], [0.0, -1.0]])
        cert = autonomous_certificate(A, margin=0.1)
        times = np.linspace(0.0, 20.0, 2001)
        scan = max(np.linalg.norm(linalg.expm(A * t), 2) * math.exp(cert.exponent * t) for t in times)
        self.assertGreater(cert.bound, 1.0)
        self.assertGreaterEqual(cert.bound, scan * (1 - 1e-3))

    def test_discrete_saddle(self):
        cert = discrete_autonomous_certificate(np.diag([0.5, 2.0]), margin=0.1)
        self.assertTrue(cert.discrete)
        self.assertAlmostEqual(cert.exponent, math.log(2.0) * 0.9)
        assert_allclose(cert.stable(0), np.diag([1.0, 0.0]), atol=1e-12)

    def test_tabulated_projections(self):
        table = TabulatedProjections({0: np.eye(2), 1: np.zeros((2, 2))})
        self.assertEqual(table.span, (0, 1))
        with self.assertRaises(DomainError):
            table.stable(0.5)
        with self.assertRaises(WindowError):
            table.stable(3)

    def test_lifted_projections_follow_the_flow(self):
        A = np.array([[-1.0, 0.0], [1.0, 1.0]])
        c = ContinuousCocycle.constant(A)
        spectral = autonomous_certificate(A).stable(0.0)
        lifted = LiftedProjections(c, TabulatedProjections({0: spectral, 1: spectral}))
        assert_allclose(lifted.stable(0.5), spectral, atol=1e-8)


class VerificationTests(SimpleTestCase):
    def setUp(self):
        self.saddle = np.diag([-1.0, 1.0])
        self.cocycle = ContinuousCocycle.constant(self.saddle)
        self.cert = autonomous_certificate(self.saddle)

    def test_continuous_saddle_passes(self):
        report = verify_dichotomy(self.cocycle, self.cert, WINDOW)
        self.assertTrue(report.passed, report.failed_axioms())
        self.assertGreater(report.pairs, 0)
        self.assertTrue(report.to_dict()['passed'])

    def test_discrete_saddle_passes(self):
        A = np.diag([0.5, 2.0])
        report = verify_dichotomy(DiscreteCocycle.constant(A), discrete_autonomous_certificate(A),
                                  INTEGER_WINDOW)
        self.assertTrue(report.passed, report.failed_axioms())

    def test_doubled_exponent_fails(self):
        cheat = DichotomyCertificate(bound=self.cert.bound, exponent=2 * self.cert.exponent + 0.5,
                                     projections=self.cert.projections)
        report = verify_dichotomy(self.cocycle, cheat, WINDOW)
        self.assertFalse(report.passed)
        self.assertIn('forward_decay', report.failed_axioms())

    def test_identity_stable_projection_fails(self):
        cheat = DichotomyCertificate(bound=1.0, exponent=0.5, projections=ConstantProjections(np.eye(2)))
        report = verify_dichotomy(self.cocycle, cheat, WINDOW)
        self.assertFalse(report.axiom('forward_decay').passed)

    def test_identity_unstable_projection_fails(self):
        cheat = DichotomyCertificate(bound=1.0, exponent=0.5,
                                     projections=ConstantProjections(np.zeros((2, 2))))
        report = verify_dichotomy(self.cocycle, cheat, WINDOW)
        self.assertFalse(report.axiom('backward_decay').passed)

    def test_non_invariant_projection_fails(self):
        tilted = ConstantProjections([[1.0, 1.0], [0.0, 0.0]])
        cheat = DichotomyCertificate(bound=2.0, exponent=0.5, projections=tilted)
        report = verify_dichotomy(self.cocycle, cheat, WINDOW)
        self.assertFalse(report.axiom('commutation').passed)

    def test_singular_flow_is_reported(self):
        c = DiscreteCocycle.constant(np.array([[2.0, 0.0], [0.0, 0.0]]))
        cert = DichotomyCertificate(bound=1.0, exponent=0.5, discrete=True,
                                    projections=ConstantProjections(np.diag([1.0, 0.0])))
        report = verify_dichotomy(c, cert, INTEGER_WINDOW)
        self.assertTrue(report.isomorphism_violation)
        self.assertFalse(report.axiom('invertibility').passed)


class GreenKernelTests(SimpleTestCase):
    def test_scalar_branches(self):
        stable = GreenKernel(ContinuousCocycle.constant([[-1.0]]), autonomous_certificate([[-1.0]]))
        self.assertAlmostEqual(green_eval(stable, 2.0, 1.0)[0, 0], math.exp(-1.0), places=8)
        self.assertEqual(green_eval(stable, 1.0, 2.0)[0, 0], 0.0)

        unstable = GreenKernel(ContinuousCocycle.constant([[1.0]]), autonomous_certificate([[1.0]]))
        self.assertEqual(unstable(2.0, 1.0)[0, 0], 0.0)
        self.assertAlmostEqual(unstable(1.0, 2.0)[0, 0], -math.exp(-1.0), places=8)

    def test_singular_backward_branch(self):
        c = DiscreteCocycle.constant(np.array([[0.0]]))
        cert = DichotomyCertificate(bound=1.0, exponent=1.0, discrete=True,
                                    projections=ConstantProjections(np.zeros((1, 1))))
        with self.assertRaises(IsomorphismError):
            GreenKernel(c, cert)(0, 1)

    def test_restricted_inverse_on_unstable_range(self):
        phi = np.diag([0.5, 2.0])
        unstable = np.diag([0.0, 1.0])
        inverse, condition = restricted_inverse(phi, unstable, unstable)
        assert_allclose(inverse, np.diag([0.0, 0.5]), atol=1e-12)
        self.assertAlmostEqual(condition, 1.0)


class ProjectionDistanceTests(SimpleTestCase):
    def test_distance_and_bound(self):
        a = discrete_autonomous_certificate(np.diag([0.5, 2.0]))
        self.assertEqual(projection_distance(a, a, INTEGER_WINDOW), 0.0)
        bound = projection_distance_bound(math.log(2), math.log(2), 0.01)
        self.assertAlmostEqual(bound, 0.01 * 1.0 / (1 - 0.25))
        with self.assertRaises(DomainError):
            projection_distance_bound(0.0, 1.0, 0.01)

    def test_window_outside_tabulated_nodes(self):
        a = discrete_autonomous_certificate(np.diag([0.5, 2.0]))
        table = TabulatedProjections({n: a.stable(n) for n in range(-2, 3)})
        b = DichotomyCertificate(bound=a.bound, exponent=a.exponent, projections=table, discrete=True)
        self.assertEqual(projection_distance(a, b, TimeGrid(-2.0, 2.0, 1.0)), 0.0)
        with self.assertRaisesMessage(WindowError, 'projections are defined on [-2, 2]') as raised:
            projection_distance(a, b, INTEGER_WINDOW)
        self.assertEqual(raised.exception.required_extension, 2.0)

    def test_lifted_projections_report_node_span(self):
        c = ContinuousCocycle.constant(np.diag([-1.0, 1.0]))
        table = TabulatedProjections({n: np.diag([1.0, 0.0]) for n in range(-3, 4)})
        self.assertEqual(LiftedProjections(c, table).span, (-3, 3))
        self.assertEqual(ConstantProjections(np.eye(2)).span, (-math.inf, math.inf))
