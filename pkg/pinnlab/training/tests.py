import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from autodiff.checks import scaled_error
from autodiff.tape import Tape
from core.csvio import read_rows
from core.exceptions import ConfigurationError, NumericalError, TrainingAborted
from core.rng import seeded_generator
from networks.mlp import LayerParams, Network, init_glorot, predict
from problems.equations import allen_cahn_problem, nws_problem
from sampling.points import SampleSet, sample_uniform

from .losses import LossBreakdown, loss_bound, loss_data, loss_init, loss_res, total_loss
from .optim import DEFAULT_SCHEDULE, AdamState, adam_step, gd_step, lr_at, validate_schedule
from .trainer import TrainConfig, fit, loss_and_gradient, train, write_history_csv


def constant_network(value, width=4):
    layers = (
        LayerParams(np.zeros((width, 2)), np.zeros(width)),
        LayerParams(np.zeros((1, width)), np.array([value])),
    )
    return Network(layers)


def small_samples(pde, seed=0):
    return sample_uniform(pde, 6, 6, 12, seed=seed)


class LossTests(SimpleTestCase):
    def setUp(self):
        self.nws = nws_problem()
        self.samples = sample_uniform(self.nws, 250, 250, 100, seed=0)

    def test_constant_initial_condition_fits_exactly(self):
        self.assertEqual(float(loss_init(constant_network(0.1), self.samples).value), 0.0)

    def test_zero_network_initial_loss(self):
        self.assertAlmostEqual(float(loss_init(constant_network(0.0), self.samples).value), 0.01, places=15)

    def test_single_point(self):
        samples = SampleSet(np.array([[0.0, 0.5, 0.1]]), np.array([[0.5, 0.0, 0.1]]),
                            np.array([[0.5, 0.5]]), 0)
        self.assertAlmostEqual(float(loss_init(constant_network(0.3), samples).value), 0.04, places=15)

    def test_boundary_loss_of_own_predictions(self):
        net = init_glorot([2, 5, 1], seed=1)
        boundary = self.samples.boundary.copy()
        boundary[:, 2] = predict(net, boundary[:, 0], boundary[:, 1])
        samples = SampleSet(self.samples.initial, boundary, self.samples.collocation, 0)
        self.assertLessEqual(float(loss_bound(net, samples).value), 1e-20)

    def test_zero_network_boundary_at_time_zero(self):
        boundary = np.array([[0.0, 0.0, float(self.nws.g(0.0))], [0.0, 1.0, float(self.nws.h(0.0))]])
        samples = SampleSet(self.samples.initial, boundary, self.samples.collocation, 0)
        self.assertAlmostEqual(float(loss_bound(constant_network(0.0), samples).value), 0.01, places=15)

    def test_doubled_misfit_quadruples_loss(self):
        boundary = self.samples.boundary.copy()
        doubled = boundary.copy()
        doubled[:, 2] *= 2.0
        zero = constant_network(0.0)
        single = loss_bound(zero, SampleSet(self.samples.initial, boundary, self.samples.collocation, 0))
        double = loss_bound(zero, SampleSet(self.samples.initial, doubled, self.samples.collocation, 0))
        self.assertEqual(float(double.value), 4.0 * float(single.value))

    def test_residual_loss_at_equilibria(self):
        self.assertAlmostEqual(float(loss_res(constant_network(2.0 / 3.0), self.nws, self.samples).value), 0.0,
                               places=20)
        allen_cahn = allen_cahn_problem()
        samples = small_samples(allen_cahn)
        self.assertEqual(float(loss_res(constant_network(1.0), allen_cahn, samples).value), 0.0)
        self.assertAlmostEqual(float(loss_res(constant_network(0.5), allen_cahn, samples).value), 0.140625,
                               places=15)

    def test_total_loss(self):
        self.assertAlmostEqual(total_loss((0.1, 0.2, 0.3)), 0.6, places=15)
        self.assertAlmostEqual(total_loss((0.1, 0.2, 0.3), (2.0, 0.0, 1.0)), 0.5, places=15)
        self.assertEqual(total_loss((0.0, 0.0, 0.0)), 0.0)

    def test_data_loss_is_a_sum(self):
        points = [[0.1, 0.2], [0.3, 0.4]]
        loss = loss_data(constant_network(1.0), points, [0.0, 3.0])
        self.assertAlmostEqual(float(loss.value), 5.0, places=14)

    def test_losses_share_one_tape(self):
        taped = init_glorot([2, 4, 1]).on_tape(Tape())
        parts = (loss_init(taped, self.samples), loss_bound(taped, self.samples),
                 loss_res(taped, self.nws, self.samples))
        self.assertTrue(all(part.tape is taped.tape for part in parts))


class ScheduleTests(SimpleTestCase):
    def test_default_schedule(self):
        self.assertEqual(lr_at(DEFAULT_SCHEDULE, 0), 1e-2)
        self.assertEqual(lr_at(DEFAULT_SCHEDULE, 500), 1e-2)
        self.assertEqual(lr_at(DEFAULT_SCHEDULE, 1000), 1e-3)
        self.assertEqual(lr_at(DEFAULT_SCHEDULE, 2000), 1e-3)
        self.assertEqual(lr_at(DEFAULT_SCHEDULE, 10000), 5e-4)

    def test_invalid_schedules(self):
        with self.assertRaises(ConfigurationError):
            validate_schedule([(0, 1e-2), (3000, 1e-3), (1000, 5e-4)])
        with self.assertRaises(ConfigurationError):
            validate_schedule([(10, 1e-2)])
        with self.assertRaises(ConfigurationError):
            validate_schedule([(0, 0.0)])
        with self.assertRaises(ConfigurationError):
            validate_schedule([])


class OptimizerTests(SimpleTestCase):
    def test_first_adam_step(self):
        params, state = adam_step(np.array([0.0]), np.array([0.5]), AdamState.zeros(1), 0.01)
        self.assertAlmostEqual(float(params[0]), -0.01, places=8)
        self.assertEqual(state.step, 1)

    def test_zero_gradient_leaves_parameters(self):
        start = np.array([0.3, -1.2, 4.0])
        params, state = adam_step(start, np.zeros(3), AdamState.zeros(3), 0.01)
        np.testing.assert_array_equal(params, start)
        np.testing.assert_array_equal(state.m, 0.0)

    def test_moments_decay_without_gradient(self):
        state = AdamState(np.array([0.1]), np.array([0.01]), 1)
        _, state = adam_step(np.array([0.0]), np.array([0.0]), state, 0.01)
        self.assertAlmostEqual(float(state.m[0]), 0.09)
        self.assertAlmostEqual(float(state.v[0]), 0.00999)

    def test_sign_symmetry(self):
        params, _ = adam_step(np.zeros(2), np.array([0.7, -0.7]), AdamState.zeros(2), 0.01)
        self.assertEqual(params[0], -params[1])

    def test_non_finite_gradient(self):
        with self.assertRaises(NumericalError):
            adam_step(np.zeros(2), np.array([np.nan, 0.0]), AdamState.zeros(2), 0.01)
        with self.assertRaises(NumericalError):
            gd_step(np.zeros(1), np.array([np.inf]), 0.1)

    def test_gradient_descent(self):
        np.testing.assert_array_equal(gd_step(np.array([1.0, 2.0]), np.array([0.5, -0.5]), 0.5), [0.75, 2.25])


class TrainConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = TrainConfig()
        self.assertEqual(config.iterations, 20000)
        self.assertEqual(config.schedule, DEFAULT_SCHEDULE)
        self.assertEqual(config.weights, (1.0, 1.0, 1.0))

    def test_invalid_values(self):
        for bad in ({'alpha': 0.0, 'beta': 0.0, 'gamma': 0.0}, {'alpha': -1.0}, {'iterations': -1},
                    {'optimizer': 'lbfgs'}, {'beta1': 1.0}, {'schedule': ((5, 1e-3),)}):
            with self.assertRaises(ConfigurationError, msg=str(bad)):
                TrainConfig(**bad)


class TrainTests(SimpleTestCase):
    def setUp(self):
        self.pde = nws_problem()
        self.samples = small_samples(self.pde)
        self.net = init_glorot([2, 8, 8, 1], seed=3)

    def test_zero_iterations(self):
        result = train(self.pde, self.net, self.samples, TrainConfig(iterations=0))
        self.assertTrue(result.network.same_as(self.net))
        self.assertEqual(result.history, [])

    def test_history_rows(self):
        config = TrainConfig(iterations=4, alpha=2.0, gamma=0.5)
        history = train(self.pde, self.net, self.samples, config).history
        self.assertEqual([row.iteration for row in history], [0, 1, 2, 3])
        for row in history:
            expected = 2.0 * row.init_loss + 1.0 * row.bound_loss + 0.5 * row.res_loss
            self.assertLessEqual(abs(row.total - expected), 1e-15 * abs(expected))
            self.assertTrue(min(row.init_loss, row.bound_loss, row.res_loss) >= 0)

    def test_determinism(self):
        config = TrainConfig(iterations=5)
        first = train(self.pde, self.net, self.samples, config)
        second = train(self.pde, self.net, self.samples, config)
        self.assertTrue(first.network.same_as(second.network))
        totals = [(row.init_loss, row.bound_loss, row.res_loss, row.total) for row in first.history]
        self.assertEqual(totals, [(row.init_loss, row.bound_loss, row.res_loss, row.total)
                                  for row in second.history])

    def test_gradient_matches_finite_differences(self):
        _, gradient = loss_and_gradient(self.net, self.pde, self.samples)
        base = self.net.parameters()
        step = 1e-5
        indices = seeded_generator(1, 'gradient-indices').choice(base.size, size=20, replace=False)
        for index in indices:
            up, down = base.copy(), base.copy()
            up[index] += step
            down[index] -= step
            loss_up = loss_and_gradient(self.net.with_parameters(up), self.pde, self.samples)[0].total
            loss_down = loss_and_gradient(self.net.with_parameters(down), self.pde, self.samples)[0].total
            reference = (loss_up - loss_down) / (2 * step)
            self.assertLessEqual(scaled_error(gradient[index], reference), 1e-4, f"parameter {index}")

    def test_scaled_weights_give_identical_descent(self):
        k, lr = 4.0, 1e-3
        plain = TrainConfig(iterations=3, optimizer='gd', schedule=((0, lr),))
        scaled = TrainConfig(iterations=3, optimizer='gd', schedule=((0, lr / k),), alpha=k, beta=k, gamma=k)

        breakdown, gradient = loss_and_gradient(self.net, self.pde, self.samples)
        scaled_breakdown, scaled_gradient = loss_and_gradient(self.net, self.pde, self.samples, scaled.weights)
        self.assertEqual(scaled_breakdown.total, k * breakdown.total)
        np.testing.assert_array_equal(scaled_gradient, k * gradient)

        first = train(self.pde, self.net, self.samples, plain).network
        second = train(self.pde, self.net, self.samples, scaled).network
        np.testing.assert_array_equal(first.parameters(), second.parameters())

    def test_self_generated_targets(self):
        samples = self.samples
        initial, boundary = samples.initial.copy(), samples.boundary.copy()
        initial[:, 2] = predict(self.net, initial[:, 0], initial[:, 1])
        boundary[:, 2] = predict(self.net, boundary[:, 0], boundary[:, 1])
        own = SampleSet(initial, boundary, samples.collocation, samples.seed)

        taped = self.net.on_tape(Tape())
        data_loss = loss_init(taped, own) + loss_bound(taped, own)
        self.assertEqual(float(data_loss.value), 0.0)
        gradient = taped.flat_gradient(data_loss)
        params, _ = adam_step(self.net.parameters(), gradient, AdamState.zeros(gradient.size), 1e-2)
        np.testing.assert_array_equal(params, self.net.parameters())

    def test_non_finite_loss_aborts(self):
        good = LossBreakdown(0.1, 0.1, 0.1, 0.3)
        bad = LossBreakdown(float('nan'), 0.1, 0.1, float('nan'))
        size = self.net.parameter_count
        outcomes = iter([(good, np.zeros(size)), (good, np.zeros(size)), (bad, None)])

        with mock.patch('training.trainer.loss_and_gradient', side_effect=lambda *args: next(outcomes)):
            with self.assertRaises(TrainingAborted) as caught:
                train(self.pde, self.net, self.samples, TrainConfig(iterations=10))
        self.assertEqual(caught.exception.iteration, 2)
        self.assertEqual(caught.exception.last_breakdown, good)
        self.assertEqual(caught.exception.exit_code, 2)

    def test_history_csv(self):
        history = train(self.pde, self.net, self.samples, TrainConfig(iterations=2)).history
        with tempfile.TemporaryDirectory() as directory:
            header, rows = read_rows(write_history_csv(history, Path(directory) / 'history.csv'))
        self.assertEqual(header, ['iteration', 'lr', 'init_loss', 'bound_loss', 'res_loss', 'total',
                                  'elapsed_seconds'])
        self.assertEqual(len(rows), 2)
        self.assertEqual(float(rows[1][5]), history[1].total)


class FitTests(SimpleTestCase):
    def test_fit_reduces_data_loss(self):
        points = seeded_generator(4, 'fit-points').uniform(0.0, 1.0, size=(20, 2))
        targets = 0.5 + 0.2 * points[:, 1]
        net, losses = fit(init_glorot([2, 8, 1], seed=4), points, targets,
                          TrainConfig(iterations=300, schedule=((0, 1e-2),)))
        self.assertEqual(len(losses), 300)
        self.assertLess(losses[-1], 0.1 * losses[0])
        self.assertEqual(net.layer_sizes, [2, 8, 1])
