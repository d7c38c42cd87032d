import math

import numpy as np
from django.test import SimpleTestCase

from autodiff.jets import Jet4
from autodiff.tape import Tape
from core.exceptions import ConfigurationError, NumericalError, SingularityError, UsageError
from core.rng import seeded_generator

from .equations import (
    NwsParams, ParabolicPde, allen_cahn_problem, exact_allen_cahn, exact_nws, exact_residual_probe,
    get_problem, nws_problem, residual,
)


def _constant_field(value):
    return Jet4.constant(value)


def _random_points(stream, count=1000):
    return seeded_generator(17, stream).uniform(0.0, 1.0, size=(count, 2))


class NwsTests(SimpleTestCase):
    def setUp(self):
        self.pde = nws_problem(NwsParams(0.1))

    def test_coefficients(self):
        self.assertEqual(self.pde.coefficients, (1.0, 2.0, -3.0, 2))
        self.assertEqual((self.pde.a, self.pde.b, self.pde.T), (0.0, 1.0, 1.0))

    def test_initial_and_boundary_data(self):
        self.assertEqual(float(self.pde.f(0.7)), 0.1)
        self.assertAlmostEqual(float(self.pde.g(0.0)), 0.1, places=15)
        self.assertAlmostEqual(float(self.pde.h(0.0)), 0.1, places=15)
        t = np.linspace(0.0, 1.0, 11)
        np.testing.assert_array_equal(self.pde.g(t), self.pde.h(t))

    def test_exact_values(self):
        self.assertAlmostEqual(float(exact_nws(0.1, 0.3, 0.0)), 0.1, places=15)
        e2 = math.exp(2.0)
        expected = -0.2 * e2 / (-2.0 + 0.3 * (1.0 - e2))
        self.assertAlmostEqual(float(exact_nws(0.1, 0.5, 1.0)), expected, places=14)
        self.assertAlmostEqual(float(exact_nws(0.1, 0.5, 1.0)), 0.377307, places=5)

    def test_long_time_limit(self):
        self.assertAlmostEqual(float(exact_nws(0.1, 0.0, 20.0)), 2.0 / 3.0, places=12)

    def test_exact_is_independent_of_x(self):
        t = np.full(5, 0.37)
        values = exact_nws(0.1, np.linspace(0.0, 1.0, 5), t)
        self.assertEqual(len(set(values.tolist())), 1)

    def test_singular_lambda_rejected(self):
        with self.assertRaises(ConfigurationError):
            nws_problem(NwsParams(-0.2))
        with self.assertRaises(ConfigurationError):
            nws_problem(NwsParams(float('nan')))

    def test_singular_exact_evaluation(self):
        # -2 + 3 lam (1 - e^{2t}) = 0 at t = ln(1 - 2 / (3 lam)) / 2
        lam = -1.0
        t = 0.5 * math.log(1.0 + 2.0 / 3.0)
        with self.assertRaises(SingularityError):
            exact_nws(lam, 0.0, t)

    def test_exact_solution_satisfies_equation(self):
        self.assertLessEqual(exact_residual_probe(self.pde, _random_points('nws-probe')), 1e-10)

    def test_data_is_consistent(self):
        self.assertLessEqual(self.pde.consistency_error(), 1e-12)


class AllenCahnTests(SimpleTestCase):
    def setUp(self):
        self.pde = allen_cahn_problem()

    def test_coefficients(self):
        self.assertEqual(self.pde.coefficients, (1.0, 1.0, -1.0, 3))

    def test_initial_and_boundary_data(self):
        self.assertEqual(float(self.pde.f(0.0)), -0.5)
        self.assertEqual(float(self.pde.g(0.0)), -0.5)
        self.assertEqual(float(self.pde.h(0.0)), float(self.pde.f(1.0)))

    def test_exact_values(self):
        self.assertEqual(float(exact_allen_cahn(0.0, 0.0)), -0.5)
        self.assertAlmostEqual(float(exact_allen_cahn(1.0, 0.0)), -0.5 + 0.5 * math.tanh(0.3536), places=15)
        self.assertAlmostEqual(float(exact_allen_cahn(1.0, 0.0)), -0.330215, places=5)
        t = np.linspace(0.0, 1.0, 7)
        np.testing.assert_array_equal(exact_allen_cahn(0.0, t), self.pde.g(t))

    def test_monotone_and_bounded(self):
        x = np.linspace(0.0, 1.0, 50)
        t = np.linspace(0.0, 1.0, 50)
        along_x = exact_allen_cahn(x, 0.4)
        along_t = exact_allen_cahn(0.6, t)
        self.assertTrue(np.all(np.diff(along_x) > 0))
        self.assertTrue(np.all(np.diff(along_t) < 0))
        self.assertTrue(np.all((along_x > -1) & (along_x < 0)))

    def test_exact_residual_reflects_rounded_wave_number(self):
        worst = exact_residual_probe(self.pde, _random_points('allen-cahn-probe'))
        self.assertLessEqual(worst, 5e-5)
        self.assertGreater(worst, 0.0)

    def test_data_is_consistent(self):
        self.assertLessEqual(self.pde.consistency_error(), 1e-12)


class ResidualTests(SimpleTestCase):
    def test_nws_equilibrium(self):
        pde = nws_problem()
        self.assertAlmostEqual(float(residual(pde, _constant_field(2.0 / 3.0), 0.5, 0.5)), 0.0, places=15)

    def test_allen_cahn_equilibrium(self):
        self.assertEqual(float(residual(allen_cahn_problem(), _constant_field(1.0), 0.5, 0.5)), 0.0)

    def test_allen_cahn_half(self):
        self.assertEqual(float(residual(allen_cahn_problem(), _constant_field(0.5), 0.2, 0.1)), -0.375)

    def test_negative_field_power(self):
        # u^3 keeps the sign of u
        value = residual(allen_cahn_problem(), _constant_field(-0.5), 0.2, 0.1)
        self.assertEqual(float(value), 0.375)

    def test_source_term(self):
        pde = ParabolicPde(m=0.0, n=0.0, o=0.0, p=2, f=lambda x: 0.0, g=lambda t: 0.0, h=lambda t: 0.0,
                           eta=lambda x, t, u, u_x: x + t)
        self.assertEqual(float(residual(pde, _constant_field(0.0), 0.25, 0.5)), -0.75)

    def test_non_finite_jet(self):
        with self.assertRaises(NumericalError):
            residual(nws_problem(), Jet4(float('nan'), 0.0, 0.0, 0.0), 0.1, 0.1)

    def test_taped_residual_is_differentiable(self):
        tape = Tape()
        u = tape.parameter(0.5)
        jet = Jet4(u, 0.0, 0.0, 0.0)
        r = residual(allen_cahn_problem(), jet, 0.2, 0.1)
        # d/du (-u + u^3) = -1 + 3u^2
        self.assertAlmostEqual(float(tape.grad(r)[u]), -0.25)

    def test_zero_pde_probe(self):
        pde = ParabolicPde(m=0.0, n=0.0, o=0.0, p=2, f=lambda x: 0.0, g=lambda t: 0.0, h=lambda t: 0.0,
                           exact=lambda x, t: 0.0 * x + 0.0 * t)
        self.assertEqual(exact_residual_probe(pde, _random_points('zero-probe', 20)), 0.0)

    def test_probe_needs_exact(self):
        pde = ParabolicPde(m=1.0, n=0.0, o=0.0, p=2, f=lambda x: 0.0, g=lambda t: 0.0, h=lambda t: 0.0)
        with self.assertRaises(UsageError):
            exact_residual_probe(pde, [[0.1, 0.2]])


class ProblemValidationTests(SimpleTestCase):
    def test_interval_and_horizon(self):
        data = dict(m=1.0, n=0.0, o=0.0, p=2, f=lambda x: 0.0, g=lambda t: 0.0, h=lambda t: 0.0)
        with self.assertRaises(ConfigurationError):
            ParabolicPde(a=1.0, b=0.0, **data)
        with self.assertRaises(ConfigurationError):
            ParabolicPde(T=0.0, **data)

    def test_registry(self):
        self.assertEqual(get_problem('nws', 0.2).name, 'nws')
        self.assertEqual(float(get_problem('nws', 0.2).f(0.5)), 0.2)
        self.assertEqual(get_problem('allen-cahn').name, 'allen-cahn')
        with self.assertRaises(ConfigurationError):
            get_problem('burgers')
