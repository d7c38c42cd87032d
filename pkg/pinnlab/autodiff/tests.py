import math

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DomainError, SingularityError, UsageError
from core.rng import seeded_generator

from . import tape as ops
from .checks import derivative_check, scaled_error
from .functions import erf, exp, tanh
from .jets import Jet4, jet_seed
from .tape import Tape, grad


def _components(jet):
    return tuple(float(v) for v in jet.values())


class JetSeedTests(SimpleTestCase):
    def test_seed_definition(self):
        t, x = jet_seed(0.5, 0.3)
        self.assertEqual(_components(t), (0.5, 1.0, 0.0, 0.0))
        self.assertEqual(_components(x), (0.3, 0.0, 1.0, 0.0))

    def test_zero_point_and_corner(self):
        self.assertEqual([_components(j) for j in jet_seed(0, 0)],
                         [(0.0, 1.0, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0)])
        self.assertEqual([_components(j) for j in jet_seed(1, 1)],
                         [(1.0, 1.0, 0.0, 0.0), (1.0, 0.0, 1.0, 0.0)])

    def test_non_finite_rejected(self):
        with self.assertRaises(DomainError):
            jet_seed(float('nan'), 0.1)
        with self.assertRaises(DomainError):
            jet_seed(0.1, float('inf'))

    def test_array_seeds(self):
        t, x = jet_seed(np.array([0.1, 0.2]), np.array([0.3, 0.4]))
        np.testing.assert_array_equal(t.dt, [1.0, 1.0])
        np.testing.assert_array_equal(x.dx, [1.0, 1.0])
        np.testing.assert_array_equal(x.dt, [0.0, 0.0])


class JetArithmeticTests(SimpleTestCase):
    def test_square_has_second_derivative_two(self):
        x = Jet4(2.0, 0.0, 1.0, 0.0)
        self.assertEqual(_components(x * x), (4.0, 0.0, 4.0, 2.0))

    def test_constant_power(self):
        c = Jet4.constant(1.7)
        self.assertEqual(_components(c ** 3), (1.7 ** 3, 0.0, 0.0, 0.0))

    def test_tanh_at_zero(self):
        _, x = jet_seed(0.0, 0.0)
        self.assertEqual(_components(tanh(x)), (0.0, 0.0, 1.0, 0.0))

    def test_product_rule_for_second_derivative(self):
        rng = seeded_generator(11, 'jet-product')
        for _ in range(20):
            a = Jet4(*rng.normal(size=4))
            b = Jet4(*rng.normal(size=4))
            expected = a.dxx * b.val + 2 * a.dx * b.dx + a.val * b.dxx
            self.assertEqual(float((a * b).dxx), expected)

    def test_division_by_zero_valued_jet(self):
        with self.assertRaises(SingularityError):
            Jet4(1.0, 0.0, 1.0, 0.0) / Jet4(0.0, 1.0, 0.0, 0.0)
        with self.assertRaises(SingularityError):
            Jet4(1.0) / 0.0

    def test_reciprocal_matches_closed_form(self):
        x = Jet4(2.0, 0.0, 1.0, 0.0)
        value, _, first, second = _components(1.0 / x)
        self.assertAlmostEqual(value, 0.5)
        self.assertAlmostEqual(first, -0.25)
        self.assertAlmostEqual(second, 0.25)

    def test_negative_power(self):
        x = Jet4(2.0, 0.0, 1.0, 0.0)
        np.testing.assert_allclose(_components(x ** -2), (0.25, 0.0, -0.25, 0.375))

    def test_non_integer_power_rejected(self):
        with self.assertRaises(UsageError):
            Jet4(2.0) ** 0.5

    def test_chain_rule_through_exp(self):
        _, x = jet_seed(0.0, 0.7)
        out = exp(2.0 * x)
        e = math.exp(1.4)
        np.testing.assert_allclose(_components(out), (e, 0.0, 2 * e, 4 * e))


class ReverseSweepTests(SimpleTestCase):
    def test_product(self):
        tape = Tape()
        a, b = tape.parameter(3.0), tape.parameter(4.0)
        adjoints = grad(a * b)
        self.assertEqual(float(adjoints[a]), 4.0)
        self.assertEqual(float(adjoints[b]), 3.0)

    def test_square(self):
        tape = Tape()
        theta = tape.parameter(5.0)
        self.assertEqual(float(grad(theta ** 2)[theta]), 10.0)

    def test_sum_of_squares(self):
        tape = Tape()
        leaves = [tape.parameter(1.0) for _ in range(3)]
        root = leaves[0] * leaves[0] + leaves[1] * leaves[1] + leaves[2] * leaves[2]
        adjoints = grad(root)
        self.assertEqual([float(adjoints[leaf]) for leaf in leaves], [2.0, 2.0, 2.0])

    def test_unreachable_leaf_gets_zero(self):
        tape = Tape()
        a, b = tape.parameter(2.0), tape.parameter(np.ones(3))
        adjoints = grad(a * a)
        np.testing.assert_array_equal(adjoints[b], np.zeros(3))

    def test_empty_tape(self):
        with self.assertRaises(UsageError):
            Tape().backward(None)

    def test_non_scalar_root(self):
        tape = Tape()
        v = tape.parameter(np.ones(2))
        with self.assertRaises(UsageError):
            tape.backward(v * 2.0)

    def test_mixing_tapes_is_rejected(self):
        a, b = Tape().parameter(1.0), Tape().parameter(2.0)
        with self.assertRaises(UsageError):
            a + b

    def test_division_by_zero_on_tape(self):
        tape = Tape()
        with self.assertRaises(SingularityError):
            tape.parameter(1.0) / tape.parameter(0.0)

    def test_bias_broadcast_is_summed(self):
        tape = Tape()
        bias = tape.parameter(np.array([1.0, 2.0]))
        rows = np.arange(6.0).reshape(3, 2)
        root = ops.total(rows + bias)
        np.testing.assert_array_equal(grad(root)[bias], [3.0, 3.0])

    def test_linear_matches_matrix_calculus(self):
        rng = seeded_generator(3, 'linear')
        tape = Tape()
        a = tape.parameter(rng.normal(size=(4, 3)))
        w = tape.parameter(rng.normal(size=(2, 3)))
        root = ops.total(ops.linear(a, w))
        adjoints = grad(root)
        np.testing.assert_allclose(adjoints[a], np.ones((4, 2)) @ w.value)
        np.testing.assert_allclose(adjoints[w], np.ones((4, 2)).T @ a.value)

    def test_linearity(self):
        a_coef, b_coef = 1.5, -0.25

        def f(u, v):
            return tanh(u) * v

        def g(u, v):
            return exp(u - v)

        def gradient(build):
            tape = Tape()
            u, v = tape.parameter(0.3), tape.parameter(-0.8)
            adjoints = grad(build(u, v))
            return np.array([float(adjoints[u]), float(adjoints[v])])

        combined = gradient(lambda u, v: a_coef * f(u, v) + b_coef * g(u, v))
        separate = a_coef * gradient(f) + b_coef * gradient(g)
        np.testing.assert_allclose(combined, separate, rtol=0, atol=1e-12)

    def test_replay_is_bitwise_identical(self):
        tape = Tape()
        u = tape.parameter(np.linspace(-1, 1, 7))
        root = ops.mean(erf(u) * tanh(u) + exp(u) ** 3)
        first = tape.grad(root)[u].copy()
        second = tape.grad(root)[u]
        self.assertEqual(first.tobytes(), second.tobytes())


class FiniteDifferenceTests(SimpleTestCase):
    PRIMITIVES = {
        'exp': exp,
        'tanh': tanh,
        'erf': erf,
        'cube': lambda x: x ** 3,
        'reciprocal': lambda x: 1.0 / (1.0 + x * x),
        'composite': lambda x: exp(tanh(x)) * erf(0.5 * x),
    }

    def test_primitives_at_random_points(self):
        rng = seeded_generator(2024, 'primitive-check')
        points = rng.uniform(-2.0, 2.0, size=100)
        for name, fn in self.PRIMITIVES.items():
            for point in points:
                report = derivative_check(fn, [point], step=1e-4)
                self.assertTrue(report.passed(1e-5, 1e-3), f"{name} at {point}: {report}")

    def test_two_coordinate_function(self):
        def f(t, x):
            return exp(-1.0 * t) * tanh(x) + x * x * t

        rng = seeded_generator(5, 'two-coordinate')
        for t, x in rng.uniform(0.0, 1.0, size=(20, 2)):
            self.assertTrue(derivative_check(f, [t, x]).passed())

    def test_exp_example(self):
        self.assertLessEqual(derivative_check(exp, [0.7], step=1e-4).worst, 1e-6)

    def test_cubic_second_derivative(self):
        report = derivative_check(lambda x: x * x * x, [2.0], step=1e-4)
        self.assertLessEqual(report.second_order, 1e-5)

    def test_constant(self):
        report = derivative_check(lambda x: 3.0, [0.4])
        self.assertEqual(report.worst, 0.0)

    def test_non_positive_step(self):
        with self.assertRaises(UsageError):
            derivative_check(exp, [0.1], step=0.0)

    def test_scaled_error(self):
        self.assertEqual(scaled_error(2.0, 2.0), 0.0)
        self.assertAlmostEqual(scaled_error(101.0, 100.0), 1 / 101)
        self.assertAlmostEqual(scaled_error(1e-3, 0.0), 1e-3)
