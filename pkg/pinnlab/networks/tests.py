import math
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from autodiff import tape as ops
from autodiff.checks import central_difference, derivative_check, scaled_error, second_difference
from autodiff.functions import ElementaryFunction, tanh
from autodiff.tape import Tape
from core.exceptions import (
    CheckpointError, ConfigurationError, CorruptPayloadError, MalformedHeaderError, ShapeMismatchError,
    TruncatedPayloadError, UsageError,
)
from core.rng import seeded_generator

from .activations import ACTIVATIONS, GELU, SIGMOID, gelu, gelu_prime, gelu_second, get_activation
from .checkpoint import MAGIC, encode, load_checkpoint, save_checkpoint
from .mlp import LayerParams, Network, evaluate_jet, forward, forward_jet, init_glorot, predict


class Square(ElementaryFunction):
    name = 'square'

    def derivative(self, x, order):
        self._check_order(order)
        x = np.asarray(x, dtype=np.float64)
        if order == 0:
            return x * x
        if order == 1:
            return 2.0 * x
        if order == 2:
            return np.full_like(x, 2.0)
        return np.zeros_like(x)


def _layers(*pairs):
    return tuple(LayerParams(np.array(w, dtype=float), np.array(b, dtype=float)) for w, b in pairs)


def _random_points(seed, count):
    rng = seeded_generator(seed, 'network-tests')
    return rng.uniform(0.0, 1.0, size=count), rng.uniform(0.0, 1.0, size=count)


class InitTests(SimpleTestCase):
    def test_parameter_counts(self):
        self.assertEqual(init_glorot([2] + [20] * 8 + [1]).parameter_count, 3021)
        self.assertEqual(init_glorot([2] + [40] * 8 + [1]).parameter_count, 11641)

    def test_same_seed_gives_identical_network(self):
        first = init_glorot([2, 20, 20, 1], seed=7)
        second = init_glorot([2, 20, 20, 1], seed=7)
        self.assertTrue(first.same_as(second))
        self.assertFalse(first.same_as(init_glorot([2, 20, 20, 1], seed=8)))

    def test_glorot_bounds_and_zero_biases(self):
        net = init_glorot([2, 30, 10, 1], seed=1)
        for layer in net.layers:
            fan_out, fan_in = layer.weights.shape
            self.assertLessEqual(np.max(np.abs(layer.weights)), math.sqrt(6.0 / (fan_in + fan_out)))
            np.testing.assert_array_equal(layer.biases, 0.0)

    def test_invalid_sizes(self):
        with self.assertRaises(ConfigurationError):
            init_glorot([2])
        with self.assertRaises(ConfigurationError):
            init_glorot([3, 5, 1])
        with self.assertRaises(ConfigurationError):
            init_glorot([2, 0, 1])

    def test_unknown_activation(self):
        with self.assertRaises(ConfigurationError):
            init_glorot([2, 4, 1], activation='swish')

    def test_flat_parameters_round_trip(self):
        net = init_glorot([2, 6, 1], seed=3)
        flat = net.parameters()
        self.assertEqual(flat.shape, (net.parameter_count,))
        self.assertTrue(net.with_parameters(flat).same_as(net))
        with self.assertRaises(UsageError):
            net.with_parameters(flat[:-1])


class ForwardTests(SimpleTestCase):
    def test_zero_network_outputs_zero(self):
        net = Network(_layers((np.zeros((3, 2)), np.zeros(3)), (np.zeros((1, 3)), [0.0])))
        self.assertEqual(float(forward(net, [0.2, 0.9])[0]), 0.0)

    def test_output_bias_is_constant_output(self):
        net = Network(_layers((np.zeros((3, 2)), np.zeros(3)), (np.zeros((1, 3)), [1.25])))
        for z in ([0.0, 0.0], [0.5, 0.3], [1.0, 1.0]):
            self.assertEqual(float(forward(net, z)[0]), 1.25)

    def test_single_tanh_neuron(self):
        net = Network(_layers(([[1.0, 0.0]], [0.0]), ([[1.0]], [0.0])), activation='tanh')
        self.assertAlmostEqual(float(forward(net, [0.5, 0.3])[0]), 0.46211715726000974, places=15)

    def test_input_shape_is_checked(self):
        net = init_glorot([2, 3, 1])
        with self.assertRaises(UsageError):
            forward(net, [0.1, 0.2, 0.3])
        with self.assertRaises(UsageError):
            forward(net, 0.5)

    def test_forward_and_jet_value_agree_bitwise(self):
        net = init_glorot([2, 20, 20, 20, 1], seed=4)
        t, x = _random_points(1, 64)
        plain = predict(net, t, x)
        self.assertEqual(plain.tobytes(), evaluate_jet(net, t, x).val.tobytes())
        self.assertEqual(plain.tobytes(), forward_jet(net, t, x).values()[0].tobytes())

    def test_tanh_output_is_bounded(self):
        net = init_glorot([2, 16, 16, 1], activation='tanh', seed=9)
        last = net.layers[-1]
        bound = np.sum(np.abs(last.weights)) + np.sum(np.abs(last.biases))
        rng = seeded_generator(9, 'bound-check')
        z = rng.uniform(-50.0, 50.0, size=(500, 2))
        self.assertTrue(np.all(np.abs(forward(net, z)) <= bound))


class JetTests(SimpleTestCase):
    def test_zero_weight_network_jet(self):
        net = Network(_layers((np.zeros((4, 2)), np.zeros(4)), (np.zeros((1, 4)), [0.3])))
        jet = forward_jet(net, 0.4, 0.6)
        self.assertEqual(tuple(float(v) for v in jet.values()), (0.3, 0.0, 0.0, 0.0))

    def test_quadratic_harness(self):
        with mock.patch.dict(ACTIVATIONS, {'square': Square()}):
            net = Network(_layers(([[0.0, 1.0]], [0.0]), ([[1.0]], [0.0])), activation='square')
            jet = evaluate_jet(net, 0.25, 0.7)
        val, dt, dx, dxx = (float(v) for v in jet.values())
        self.assertAlmostEqual(val, 0.49)
        self.assertEqual(dt, 0.0)
        self.assertAlmostEqual(dx, 1.4)
        self.assertEqual(dxx, 2.0)

    def test_jet_matches_finite_differences(self):
        step = 1e-4
        for seed in range(3):
            net = init_glorot([2, 8, 8, 1], seed=seed)

            def u(t, x):
                return predict(net, t, x)

            t, x = _random_points(seed + 10, 5)
            for point in zip(t, x):
                jet = evaluate_jet(net, point[0], point[1])
                self.assertLessEqual(scaled_error(jet.dt, central_difference(u, point, 0, step)), 1e-5)
                self.assertLessEqual(scaled_error(jet.dx, central_difference(u, point, 1, step)), 1e-5)
                self.assertLessEqual(scaled_error(jet.dxx, second_difference(u, point, 1, step)), 1e-3)

    def test_non_finite_input(self):
        with self.assertRaises(UsageError):
            evaluate_jet(init_glorot([2, 3, 1]), float('nan'), 0.5)


class ParameterGradientTests(SimpleTestCase):
    def test_squared_output_loss_gradient(self):
        t, x = _random_points(42, 6)
        step = 1e-6
        for seed in range(10):
            net = init_glorot([2, 5, 5, 1], activation='tanh', seed=seed)

            def loss(flat):
                return float(np.sum(predict(net.with_parameters(flat), t, x) ** 2))

            tape = Tape()
            taped = net.on_tape(tape)
            u = taped.values(t, x)
            gradient = taped.flat_gradient(ops.total(u * u))

            flat = net.parameters()
            reference = np.empty_like(flat)
            for i in range(flat.size):
                up, down = flat.copy(), flat.copy()
                up[i] += step
                down[i] -= step
                reference[i] = (loss(up) - loss(down)) / (2 * step)
            self.assertLessEqual(scaled_error(gradient, reference), 1e-5, f"seed {seed}")

    def test_leaves_follow_flat_order(self):
        net = init_glorot([2, 3, 1], seed=2)
        taped = net.on_tape(Tape())
        self.assertEqual([leaf.name for leaf in taped.leaves], ['W1', 'b1', 'W2', 'b2'])
        flat = np.concatenate([leaf.value.ravel() for leaf in taped.leaves])
        np.testing.assert_array_equal(flat, net.parameters())


class ActivationTests(SimpleTestCase):
    def test_gelu_values(self):
        self.assertEqual(float(gelu(0.0)), 0.0)
        self.assertAlmostEqual(float(gelu(1.0)), 0.8413447460685429, places=15)
        self.assertAlmostEqual(float(gelu(-1.0)), -0.15865525393145707, places=15)

    def test_gelu_derivatives_at_zero(self):
        self.assertAlmostEqual(float(gelu_prime(0.0)), 0.5)
        self.assertAlmostEqual(float(gelu_second(0.0)), 2.0 / math.sqrt(2.0 * math.pi))

    def test_smooth_activations_against_finite_differences(self):
        rng = seeded_generator(8, 'activation-check')
        for fn in (GELU, SIGMOID, tanh):
            for point in rng.uniform(-3.0, 3.0, size=25):
                report = derivative_check(fn, [point])
                self.assertTrue(report.passed(), f"{fn.name} at {point}: {report}")

    def test_lookup(self):
        self.assertIs(get_activation('gelu'), GELU)
        with self.assertRaises(ConfigurationError):
            get_activation('softplus')


class CheckpointTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / 'net.bin'

    def tearDown(self):
        self.directory.cleanup()

    def test_round_trip_is_bitwise(self):
        net = init_glorot([2, 20, 20, 1], activation='sigmoid', seed=5)
        save_checkpoint(net, self.path)
        loaded = load_checkpoint(self.path)
        self.assertTrue(loaded.same_as(net))
        t, x = _random_points(5, 100)
        self.assertEqual(predict(net, t, x).tobytes(), predict(loaded, t, x).tobytes())

    def test_header_layout(self):
        data = encode(init_glorot([2, 3, 1]))
        self.assertEqual(data[:8], MAGIC)
        self.assertEqual(data[8:10], b'\x01\x00')
        self.assertEqual(data[10:15], b'\x04gelu')
        self.assertEqual(len(data), 8 + 3 + 4 + 4 + 3 * 4 + 8 * (2 * 3 + 3 + 3 + 1))

    def test_empty_file(self):
        self.path.write_bytes(b'')
        with self.assertRaises(MalformedHeaderError):
            load_checkpoint(self.path)

    def test_bad_magic(self):
        self.path.write_bytes(b'NOTACKPT' + encode(init_glorot([2, 3, 1]))[8:])
        with self.assertRaises(MalformedHeaderError):
            load_checkpoint(self.path)

    def test_truncated_payload(self):
        self.path.write_bytes(encode(init_glorot([2, 3, 1]))[:-5])
        with self.assertRaises(TruncatedPayloadError):
            load_checkpoint(self.path)

    def test_trailing_bytes(self):
        self.path.write_bytes(encode(init_glorot([2, 3, 1])) + b'\x00' * 8)
        with self.assertRaises(ShapeMismatchError):
            load_checkpoint(self.path)

    def test_non_finite_parameters(self):
        data = encode(init_glorot([2, 3, 1]))
        for value in (math.nan, math.inf, -math.inf):
            with self.subTest(value=value):
                self.path.write_bytes(data[:-8] + np.float64(value).astype('<f8').tobytes())
                with self.assertRaises(CorruptPayloadError) as cm:
                    load_checkpoint(self.path)
                self.assertIsInstance(cm.exception, CheckpointError)
                self.assertEqual(cm.exception.exit_code, 1)

    def test_expected_sizes(self):
        save_checkpoint(init_glorot([2, 3, 1]), self.path)
        with self.assertRaises(ShapeMismatchError):
            load_checkpoint(self.path, expected_sizes=[2, 4, 1])
        self.assertEqual(load_checkpoint(self.path, expected_sizes=[2, 3, 1]).layer_sizes, [2, 3, 1])

    def test_missing_file(self):
        with self.assertRaises(MalformedHeaderError):
            load_checkpoint(self.path)
