import math
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from core.csvio import read_rows
from core.exceptions import ConfigurationError, UsageError
from core.rng import seeded_generator
from networks.mlp import LayerParams, Network, init_glorot
from problems.equations import WAVE_NUMBER, ParabolicPde, allen_cahn_problem, nws_problem
from sampling.points import make_grid

from .baselines import BASELINES_SHA256, PUBLISHED_PINN, baseline_tables, fixture_digest, published_timing
from .benchmark import TimingRecord, linear_fit, timing_benchmark
from .export import export_csv, export_norms_csv, import_metrics_csv
from .fields import gradient_field
from .metrics import MetricsReport, absolute_error_grid, l2_norm, linf_norm
from .tables import PINN_LABEL, published_comparison


def oracle(pde, offset=0.0):
    def predictor(t, x):
        return pde.exact(x, t) + offset

    return predictor


def constant_network(value):
    return Network((LayerParams(np.zeros((3, 2)), np.zeros(3)), LayerParams(np.zeros((1, 3)), [value])))


class NormTests(SimpleTestCase):
    def test_examples(self):
        self.assertAlmostEqual(l2_norm([3e-5, 4e-5]), 5e-5, places=18)
        self.assertEqual(l2_norm([0.0, 0.0]), 0.0)
        self.assertEqual(linf_norm([0.0, 0.0]), 0.0)
        self.assertEqual(linf_norm([1e-5, -3e-5]), 3e-5)

    def test_empty(self):
        with self.assertRaises(UsageError):
            l2_norm([])
        with self.assertRaises(UsageError):
            linf_norm(np.zeros(0))

    def test_norm_inequalities(self):
        rng = seeded_generator(6, 'norms')
        for _ in range(20):
            errors = rng.uniform(0.0, 1e-3, size=50)
            self.assertLessEqual(linf_norm(errors), l2_norm(errors))
            self.assertLessEqual(l2_norm(errors), math.sqrt(50) * linf_norm(errors) * (1 + 1e-12))


class ErrorGridTests(SimpleTestCase):
    def setUp(self):
        self.pde = nws_problem()
        self.grid = make_grid(0.1, 0.1, self.pde)

    def test_oracle_has_zero_error(self):
        report = absolute_error_grid(oracle(self.pde), self.pde, self.grid)
        self.assertEqual(report.max_abs_error, 0.0)
        self.assertEqual(report.error_grid.shape, (11, 11))

    def test_constant_offset(self):
        report = absolute_error_grid(oracle(self.pde, 1e-5), self.pde, self.grid)
        np.testing.assert_allclose(report.error_grid, 1e-5, rtol=1e-9)
        np.testing.assert_allclose(report.linf, 1e-5, rtol=1e-9)
        self.assertEqual(len(report.l2_by_t), len(self.grid.t))
        self.assertEqual(report.max_abs_error, max(value for _, value in report.linf_by_t))

    def test_network_predictor(self):
        report = absolute_error_grid(constant_network(0.1), self.pde, self.grid)
        np.testing.assert_allclose(report.error_grid[0], 0.0, atol=1e-16)
        self.assertGreater(report.max_abs_error, 0.2)
        self.assertAlmostEqual(report.value_at(0.3, 0.0), 0.0, places=15)

    def test_missing_exact_solution(self):
        pde = ParabolicPde(m=1.0, n=0.0, o=0.0, p=2, f=lambda x: 0.0, g=lambda t: 0.0, h=lambda t: 0.0)
        with self.assertRaises(UsageError):
            absolute_error_grid(constant_network(0.0), pde, self.grid)


class BaselineTests(SimpleTestCase):
    def test_fixture_checksum(self):
        self.assertEqual(fixture_digest(), BASELINES_SHA256)

    def test_published_values(self):
        nws = {table.method: table for table in baseline_tables('nws')}
        self.assertEqual(list(nws), ['UCBS', 'TCBS', 'ECBS', PUBLISHED_PINN])
        self.assertEqual(nws['ECBS'].value_at(0.2, 0.2), 6.068e-4)
        self.assertEqual(nws[PUBLISHED_PINN].value_at(0.2, 0.2), 6.270e-6)
        np.testing.assert_array_equal(nws['UCBS'].errors[1], nws['UCBS'].errors[2])

        allen_cahn = {table.method: table for table in baseline_tables('allen-cahn')}
        self.assertEqual(allen_cahn['N-P'].value_at(0.1, 0.01), 1.06e-3)
        self.assertEqual(allen_cahn['TCB-CM'].errors.shape, (11, 6))
        self.assertEqual(np.max(allen_cahn[PUBLISHED_PINN].errors), 5.10e-6)

    def test_unknown_problem(self):
        with self.assertRaises(ConfigurationError):
            baseline_tables('burgers')
        with self.assertRaises(ConfigurationError):
            baseline_tables('timing')

    def test_published_timings_are_linear(self):
        for problem in ('nws', 'allen-cahn'):
            counts, seconds = published_timing(problem)
            self.assertEqual(len(counts), 10)
            self.assertGreaterEqual(linear_fit(counts, seconds).r_squared, 0.98)


class ComparisonTableTests(SimpleTestCase):
    def test_nws_oracle_table(self):
        table = published_comparison(oracle(nws_problem()), 'nws')
        self.assertEqual(table.pinn.shape, (4, 5))
        self.assertLessEqual(np.max(table.pinn), 1e-15)
        self.assertEqual(table.dominance_summary(), {'UCBS': True, 'TCBS': True, 'ECBS': True,
                                                      PUBLISHED_PINN: True})
        text = table.render()
        self.assertIn('ECBS', text)
        self.assertIn('6.068e-04', text)

    def test_allen_cahn_boundary_rows_are_exempt(self):
        table = published_comparison(oracle(allen_cahn_problem()), 'allen-cahn')
        self.assertEqual(table.pinn.shape, (11, 6))
        self.assertEqual(table.interior().tolist(), [False] + [True] * 9 + [False])
        self.assertTrue(table.dominance('N-P'))
        self.assertTrue(table.dominance('TCB-CM'))

    def test_poor_network_loses(self):
        table = published_comparison(constant_network(0.0), 'nws')
        self.assertFalse(table.dominance('ECBS'))

    def test_problem_mismatch(self):
        with self.assertRaises(UsageError):
            published_comparison(constant_network(0.0), 'nws', trained_on='allen-cahn')

    def test_unknown_column(self):
        table = published_comparison(oracle(nws_problem()), 'nws')
        with self.assertRaises(UsageError):
            table.errors('FDM')
        self.assertEqual(table.methods[-1], PINN_LABEL)


class BenchmarkTests(SimpleTestCase):
    def test_perfect_linear_fit(self):
        counts = np.arange(1000, 10001, 1000)
        fit = linear_fit(counts, 0.01 * counts + 0.5)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=12)
        self.assertAlmostEqual(fit.slope, 0.01, places=12)
        self.assertAlmostEqual(fit.intercept, 0.5, places=9)

    def test_record_validation(self):
        with self.assertRaises(ConfigurationError):
            TimingRecord.from_timings([2000, 1000], [1.0, 2.0])
        with self.assertRaises(ConfigurationError):
            TimingRecord.from_timings([1000, 2000], [-1.0, 2.0])

    def test_monotonicity(self):
        self.assertTrue(TimingRecord.from_timings([1000, 2000], [1.0, 1.9]).is_monotone())
        self.assertFalse(TimingRecord.from_timings([1000, 2000], [1.0, 1.2]).is_monotone())

    def test_benchmark_counts_forward_passes(self):
        calls = []
        net = init_glorot([2, 4, 1])

        def clock():
            return len(calls) * 1e-3

        with mock.patch('evaluation.benchmark.forward', side_effect=lambda *args: calls.append(1)):
            record = timing_benchmark(net, nws_problem(), counts=[100, 200, 300], repeats=2, clock=clock)
        self.assertEqual(len(calls), 2 * (100 + 200 + 300))
        np.testing.assert_allclose(record.seconds, [0.1, 0.2, 0.3])
        self.assertAlmostEqual(record.fit.r_squared, 1.0, places=12)

    def test_real_timing(self):
        record = timing_benchmark(init_glorot([2, 8, 1]), nws_problem(), counts=[20, 40], repeats=1)
        self.assertEqual(record.point_counts.tolist(), [20, 40])
        self.assertTrue(np.all(record.seconds >= 0))

    def test_invalid_counts(self):
        with self.assertRaises(ConfigurationError):
            timing_benchmark(init_glorot([2, 4, 1]), nws_problem(), counts=[])
        with self.assertRaises(ConfigurationError):
            timing_benchmark(init_glorot([2, 4, 1]), nws_problem(), counts=[200, 100])


class GradientFieldTests(SimpleTestCase):
    def test_nws_exact_has_no_x_gradient(self):
        pde = nws_problem()
        field = gradient_field(constant_network(0.1), pde, make_grid(0.25, 0.25, pde))
        self.assertEqual(field.exact_u_x.shape, (5, 5))
        np.testing.assert_array_equal(field.exact_u_x, 0.0)
        np.testing.assert_array_equal(field.predicted_u_t, 0.0)
        self.assertTrue(np.all(field.exact_u_t > 0))

    def test_allen_cahn_closed_form(self):
        pde = allen_cahn_problem()
        grid = make_grid(0.5, 0.5, pde)
        field = gradient_field(constant_network(0.0), pde, grid)
        t, x = grid.mesh()
        slope = 0.5 * (1.0 - np.tanh(WAVE_NUMBER * x - 0.75 * t) ** 2)
        np.testing.assert_allclose(field.exact_u_x, WAVE_NUMBER * slope, rtol=1e-12)
        np.testing.assert_allclose(field.exact_u_t, -0.75 * slope, rtol=1e-12)
        self.assertAlmostEqual(field.max_deviation(), float(np.max(0.75 * slope)), places=12)


class ExportTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def test_metrics_round_trip(self):
        pde = allen_cahn_problem()
        report = absolute_error_grid(init_glorot([2, 6, 1], seed=2), pde, make_grid(0.2, 0.25, pde))
        restored = import_metrics_csv(export_csv(report, self.root / 'errors.csv'))
        np.testing.assert_array_equal(restored.t, report.t)
        np.testing.assert_array_equal(restored.x, report.x)
        np.testing.assert_array_equal(restored.exact, report.exact)
        np.testing.assert_array_equal(restored.predicted, report.predicted)
        np.testing.assert_array_equal(restored.error_grid, report.error_grid)

    def test_published_grid_row_count(self):
        pde = nws_problem()
        report = absolute_error_grid(oracle(pde), pde, make_grid(0.004, 0.004, pde))
        _, rows = read_rows(export_csv(report, self.root / 'errors.csv'))
        self.assertEqual(len(rows), 63001)

    def test_empty_report(self):
        empty = MetricsReport(np.zeros(0), np.zeros(0), np.zeros((0, 0)), np.zeros((0, 0)))
        path = export_csv(empty, self.root / 'empty.csv')
        self.assertEqual(path.read_text().strip(), 't,x,exact,predicted,abs_error')
        self.assertEqual(import_metrics_csv(path).max_abs_error, 0.0)

    def test_norms(self):
        pde = nws_problem()
        report = absolute_error_grid(oracle(pde, 1e-5), pde, make_grid(0.5, 0.5, pde))
        header, rows = read_rows(export_norms_csv(report, self.root / 'norms.csv'))
        self.assertEqual(header, ['t', 'l2', 'linf'])
        self.assertEqual(len(rows), 3)

    def test_tables_timing_and_gradients(self):
        pde = nws_problem()
        _, rows = read_rows(export_csv(published_comparison(oracle(pde), 'nws'), self.root / 'tables.csv'))
        self.assertEqual(len(rows), 5 * 20)
        record = TimingRecord.from_timings([1, 2, 3], [0.1, 0.2, 0.3])
        header, rows = read_rows(export_csv(record, self.root / 'timing.csv'))
        self.assertEqual(header, ['points', 'seconds', 'fitted_seconds'])
        self.assertEqual(rows[0][0], '1')
        field = gradient_field(constant_network(0.0), pde, make_grid(0.5, 0.5, pde))
        header, rows = read_rows(export_csv(field, self.root / 'gradients.csv'))
        self.assertEqual(len(header), 6)
        self.assertEqual(len(rows), 9)

    def test_unsupported_type(self):
        with self.assertRaises(UsageError):
            export_csv(object(), self.root / 'nothing.csv')

    def test_not_a_grid_file(self):
        record = TimingRecord.from_timings([1, 2], [0.1, 0.2])
        with self.assertRaises(UsageError):
            import_metrics_csv(export_csv(record, self.root / 'timing.csv'))
