import json
import tempfile
from contextlib import redirect_stderr
from io import StringIO
from pathlib import Path
from unittest import mock, skipUnless

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.db import DatabaseError
from django.test import SimpleTestCase, TestCase, tag

from core.csvio import read_rows
from core.exceptions import (
    AcceptanceError, ConfigurationError, ShapeMismatchError, TrainingAborted, UsageError,
)
from evaluation.benchmark import TimingRecord
from evaluation.export import import_metrics_csv
from networks.checkpoint import load_checkpoint
from networks.mlp import init_glorot
from training.optim import DEFAULT_SCHEDULE
from training.trainer import TrainConfig

from . import pipeline
from .checks import CheckResult, cmd_check
from .config import dump_config, load_config, parse_config
from .management.commands.pinn import Command
from .models import TrainingRun

SMALL_RUN = {
    'network': {'hidden_layers': 2, 'width': 6},
    'sampling': {'n0': 10, 'nb': 10, 'nc': 20},
    'training': {'iterations': 5, 'log_every': 1},
    'evaluation': {
        'h': 0.1, 'dt': 0.1, 'max_error': 10,
        'benchmark_counts': '5, 10, 20', 'benchmark_repeats': 1, 'min_r_squared': 0,
    },
}


def small_run(**overrides):
    """INI text of a seconds-long run, with per-section key overrides."""
    lines = []
    for section in [*SMALL_RUN, *(name for name in overrides if name not in SMALL_RUN)]:
        values = {**SMALL_RUN.get(section, {}), **overrides.get(section, {})}
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {value}" for key, value in values.items())
    return '\n'.join(lines) + '\n'


class OutputDirMixin:
    def setUp(self):
        super().setUp()
        temp = tempfile.TemporaryDirectory()
        self.addCleanup(temp.cleanup)
        self.root = Path(temp.name)

    def small_config(self, directory='run', overrides=None, **flags):
        return parse_config(small_run(**(overrides or {})), out=self.root / directory, **flags)


class ConfigDefaultsTests(SimpleTestCase):
    def test_empty_file_gives_published_nws_setup(self):
        config = parse_config('', problem='nws')
        self.assertEqual(config.network.layer_sizes, [2] + [20] * 8 + [1])
        self.assertEqual(config.network.activation, 'gelu')
        self.assertEqual((config.sampling.n0, config.sampling.nb, config.sampling.nc), (250, 250, 10000))
        self.assertEqual(config.training, TrainConfig())
        self.assertEqual(config.training.schedule, DEFAULT_SCHEDULE)
        self.assertEqual((config.evaluation.h, config.evaluation.dt), (0.004, 0.004))
        self.assertEqual(config.evaluation.max_error, 1e-4)

    def test_allen_cahn_defaults(self):
        config = parse_config('', problem='allen-cahn')
        self.assertEqual(config.network.layer_sizes, [2] + [40] * 8 + [1])
        self.assertEqual((config.sampling.n0, config.sampling.nb, config.sampling.nc), (500, 500, 10000))
        self.assertEqual((config.evaluation.h, config.evaluation.dt), (0.001, 0.1))
        self.assertEqual(config.evaluation.gate, 'table')
        evaluation = config.evaluation
        self.assertEqual((evaluation.surface_h, evaluation.surface_dt, evaluation.surface_t_max), (0.1, 0.001, 0.01))

    def test_nws_has_no_error_surface(self):
        config = parse_config('', problem='nws')
        self.assertIsNone(config.evaluation.surface_grid(config.pde()))

    def test_nws_defaults_parameter_count(self):
        config = parse_config('')
        self.assertEqual(init_glorot(config.network.layer_sizes).parameter_count, 3021)

    def test_overrides_reach_allen_cahn_shape(self):
        config = parse_config('[network]\nwidth = 40\n[sampling]\nn0 = 500\nnb = 500\n', problem='nws')
        allen_cahn = parse_config('', problem='allen-cahn')
        self.assertEqual(config.network, allen_cahn.network)
        self.assertEqual(config.sampling, allen_cahn.sampling)
        self.assertEqual(config.problem.name, 'nws')

    def test_ci_profile(self):
        config = parse_config('', problem='allen-cahn', profile='ci')
        self.assertEqual(config.network.width, 20)
        self.assertEqual(config.sampling.nc, 2000)
        self.assertEqual(config.training.iterations, 4000)
        self.assertEqual(config.training.schedule, ((0, 1e-2), (400, 1e-3), (1200, 5e-4)))
        self.assertEqual(config.evaluation.max_error, 2e-3)
        self.assertEqual(config.evaluation.gate, 'grid')

    def test_flags_win_over_file(self):
        text = '[problem]\nname = allen-cahn\n[sampling]\nseed = 5\n'
        config = parse_config(text, problem='nws', seed=7, out='/tmp/elsewhere')
        self.assertEqual(config.problem.name, 'nws')
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.training.seed, 7)
        self.assertEqual(config.output_dir, '/tmp/elsewhere')

    def test_problem_from_file(self):
        self.assertEqual(parse_config('[problem]\nname = allen-cahn\n').network.width, 40)

    def test_default_output_directory(self):
        config = parse_config('', problem='allen-cahn')
        self.assertEqual(Path(config.output_dir), Path(settings.PINN_OUTPUT_DIR) / 'allen-cahn')


class ConfigValidationTests(SimpleTestCase):
    def assertRejected(self, text, *fragments, **flags):
        with self.assertRaises(ConfigurationError) as cm:
            parse_config(text, **flags)
        for fragment in fragments:
            self.assertIn(fragment, str(cm.exception))

    def test_decreasing_schedule(self):
        self.assertRejected('[training]\nschedule = 0:1e-2, 3000:1e-3, 1000:5e-4\n', '[training] schedule')

    def test_malformed_schedule(self):
        self.assertRejected('[training]\nschedule = fast\n', '[training] schedule', 'start:lr')

    def test_unknown_key(self):
        self.assertRejected('[network]\ndepth = 3\n', '[network] depth', 'unknown key')

    def test_unknown_section(self):
        self.assertRejected('[solver]\nsteps = 3\n', '[solver]')

    def test_type_mismatch(self):
        self.assertRejected('[network]\nwidth = wide\n', '[network] width')

    def test_odd_boundary_count(self):
        self.assertRejected('[sampling]\nnb = 251\n', '[sampling] nb', 'even')

    def test_all_zero_weights(self):
        self.assertRejected('[training]\nalpha = 0\nbeta = 0\ngamma = 0\n', '[training] gamma')

    def test_adam_beta_must_be_below_one(self):
        self.assertRejected('[training]\nbeta2 = 1\n', '[training] beta2')

    def test_unknown_activation(self):
        self.assertRejected('[network]\nactivation = softplus\n', '[network] activation')

    def test_unknown_problem_and_profile(self):
        self.assertRejected('[problem]\nname = heat\n', '[problem] name')
        self.assertRejected('', 'profile', profile='nightly')

    def test_non_increasing_benchmark_counts(self):
        self.assertRejected('[evaluation]\nbenchmark_counts = 10, 5\n', '[evaluation] benchmark_counts')

    def test_partial_error_surface(self):
        self.assertRejected('[evaluation]\nsurface_h = 0.1\n', '[evaluation] surface_t_max', 'surface_dt')

    def test_error_surface_step_must_be_positive(self):
        self.assertRejected('[evaluation]\nsurface_dt = -0.001\n', '[evaluation] surface_dt', problem='allen-cahn')

    def test_duplicate_key(self):
        self.assertRejected('[network]\nwidth = 3\nwidth = 4\n', 'width')

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_config('/nonexistent/run.ini')


class ConfigRoundTripTests(SimpleTestCase):
    def test_defaults_round_trip(self):
        for problem in ('nws', 'allen-cahn'):
            for profile in ('paper', 'ci'):
                config = parse_config('', problem=problem, profile=profile, seed=3, out='/tmp/run')
                self.assertEqual(parse_config(dump_config(config)), config, f"{problem} {profile}")

    def test_round_trip_ignores_profile_of_reader(self):
        config = parse_config('[training]\nalpha = 0.25\nschedule = 0:0.003, 17:1e-5\n', profile='ci')
        self.assertEqual(parse_config(dump_config(config), profile='paper'), config)

    def test_load_config_reads_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'run.ini'
            path.write_text('[network]\nactivation = tanh\n')
            self.assertEqual(load_config(path).network.activation, 'tanh')


class TrainCommandTests(OutputDirMixin, TestCase):
    def test_writes_artifacts_and_records_run(self):
        config = self.small_config()
        outcome = pipeline.cmd_train(config)
        for name in ('manifest.json', 'checkpoint.bin', 'history.csv', 'samples.csv'):
            self.assertTrue((outcome.directory / name).exists(), name)

        manifest = json.loads((outcome.directory / 'manifest.json').read_text())
        self.assertEqual(manifest['parameter_count'], 67)
        self.assertEqual(manifest['problem'], 'nws')
        self.assertEqual(manifest['run_uuid'], str(outcome.run_uuid))
        self.assertEqual(parse_config(manifest['config_ini']), config)

        _, rows = read_rows(outcome.directory / 'history.csv')
        self.assertEqual(len(rows), 5)
        run = TrainingRun.objects.get(uuid=outcome.run_uuid)
        self.assertEqual(run.status, TrainingRun.STATUS_DONE)
        self.assertEqual(run.parameter_count, 67)
        self.assertEqual(run.final_loss, manifest['final_loss'])

    def test_zero_iterations_keeps_initialization(self):
        config = self.small_config(overrides={'training': {'iterations': 0}})
        outcome = pipeline.cmd_train(config)
        net = load_checkpoint(outcome.directory / 'checkpoint.bin')
        self.assertTrue(net.same_as(init_glorot(config.network.layer_sizes, 'gelu', seed=0)))
        self.assertIsNone(TrainingRun.objects.get(uuid=outcome.run_uuid).final_loss)

    def test_same_seed_is_reproducible(self):
        first = pipeline.cmd_train(self.small_config(directory='a'))
        second = pipeline.cmd_train(self.small_config(directory='b'))
        self.assertEqual((first.directory / 'checkpoint.bin').read_bytes(),
                         (second.directory / 'checkpoint.bin').read_bytes())
        self.assertEqual((first.directory / 'samples.csv').read_bytes(),
                         (second.directory / 'samples.csv').read_bytes())
        # the last history column is wall time
        losses = [[row[:-1] for row in read_rows(outcome.directory / 'history.csv')[1]]
                  for outcome in (first, second)]
        self.assertEqual(losses[0], losses[1])

    def test_different_seed_changes_checkpoint(self):
        first = pipeline.cmd_train(self.small_config(directory='a'))
        second = pipeline.cmd_train(self.small_config(directory='b', seed=1))
        self.assertNotEqual((first.directory / 'checkpoint.bin').read_bytes(),
                            (second.directory / 'checkpoint.bin').read_bytes())

    def test_database_failure_is_not_fatal(self):
        with mock.patch.object(TrainingRun.objects, 'create', side_effect=DatabaseError('down')):
            outcome = pipeline.cmd_train(self.small_config())
        self.assertTrue((outcome.directory / 'checkpoint.bin').exists())
        self.assertFalse(TrainingRun.objects.exists())

    def test_aborted_training_marks_run(self):
        with mock.patch('experiments.pipeline.train', side_effect=TrainingAborted(3)):
            with self.assertRaises(TrainingAborted):
                pipeline.cmd_train(self.small_config())
        run = TrainingRun.objects.get()
        self.assertEqual(run.status, TrainingRun.STATUS_ERROR)
        self.assertIn('iteration 3', run.error_message)
        self.assertFalse((self.root / 'run' / 'checkpoint.bin').exists())


class EvaluateCommandTests(OutputDirMixin, TestCase):
    def setUp(self):
        super().setUp()
        self.config = self.small_config()
        self.trained = pipeline.cmd_train(self.config)

    def test_writes_error_files_and_records_error(self):
        outcome = pipeline.cmd_evaluate(self.config)
        directory = self.config.output_path
        for name in ('errors.csv', 'norms.csv', 'gradients.csv'):
            self.assertTrue((directory / name).exists(), name)
        self.assertEqual(outcome.report.error_grid.shape, (11, 11))
        reloaded = import_metrics_csv(directory / 'errors.csv')
        self.assertEqual(reloaded.max_abs_error, outcome.report.max_abs_error)
        self.assertIn('max_abs_error', outcome.summary)
        run = TrainingRun.objects.get(uuid=self.trained.run_uuid)
        self.assertEqual(run.max_abs_error, outcome.gated_error)

    def test_no_error_surface_for_nws(self):
        outcome = pipeline.cmd_evaluate(self.config)
        self.assertIsNone(outcome.surface)
        self.assertFalse((self.config.output_path / 'surface.csv').exists())

    def test_allen_cahn_error_surface(self):
        config = self.small_config(problem='allen-cahn', directory='allen-cahn')
        pipeline.cmd_train(config)
        outcome = pipeline.cmd_evaluate(config)
        self.assertEqual(outcome.surface.error_grid.shape, (11, 11))
        np.testing.assert_allclose(outcome.surface.t, np.arange(11) * 0.001)
        np.testing.assert_allclose(outcome.surface.x, np.arange(11) * 0.1)
        header, rows = read_rows(config.output_path / 'surface.csv')
        self.assertEqual(header, ['t', 'x', 'exact', 'predicted', 'abs_error'])
        self.assertEqual(len(rows), 121)
        reloaded = import_metrics_csv(config.output_path / 'surface.csv')
        self.assertEqual(reloaded.max_abs_error, outcome.surface.max_abs_error)

    def test_gate_failure_after_writing(self):
        config = self.small_config(overrides={'evaluation': {'max_error': 1e-12}})
        with self.assertRaises(AcceptanceError) as cm:
            pipeline.cmd_evaluate(config)
        self.assertEqual(cm.exception.exit_code, 3)
        self.assertTrue((config.output_path / 'errors.csv').exists())

    def test_table_gate(self):
        config = self.small_config(overrides={'evaluation': {'gate': 'table'}})
        outcome = pipeline.cmd_evaluate(config)
        table = pipeline.cmd_tables(config)
        self.assertEqual(outcome.gated_error, float(np.max(table.pinn)))

    def test_incompatible_layer_sizes(self):
        config = self.small_config(overrides={'network': {'width': 7}})
        with self.assertRaises(ShapeMismatchError) as cm:
            pipeline.cmd_evaluate(config)
        self.assertIn('expected', str(cm.exception))
        self.assertIn('7', str(cm.exception))

    def test_checkpoint_of_other_problem(self):
        config = self.small_config(problem='allen-cahn', directory='other')
        with self.assertRaises(UsageError):
            pipeline.cmd_evaluate(config, checkpoint=self.trained.directory / 'checkpoint.bin')


class TablesCommandTests(OutputDirMixin, TestCase):
    def setUp(self):
        super().setUp()
        self.config = self.small_config()
        self.trained = pipeline.cmd_train(self.config)

    def test_writes_text_and_csv(self):
        table = pipeline.cmd_tables(self.config)
        self.assertEqual(table.pinn.shape, (4, 5))
        self.assertIn('PINN', table.methods)
        text = (self.config.output_path / 'tables.txt').read_text()
        self.assertIn('ECBS', text)
        header, rows = read_rows(self.config.output_path / 'tables.csv')
        self.assertEqual(header, ['x', 't', 'method', 'abs_error'])
        self.assertEqual(len(rows), 20 * len(table.methods))

    def test_mismatched_problem(self):
        config = parse_config(small_run(), problem='allen-cahn', out=self.root / 'tables')
        with self.assertRaises(UsageError) as cm:
            pipeline.cmd_tables(config, checkpoint=self.trained.directory / 'checkpoint.bin')
        self.assertIn('nws', str(cm.exception))


class BenchmarkCommandTests(OutputDirMixin, TestCase):
    def setUp(self):
        super().setUp()
        self.config = self.small_config()
        pipeline.cmd_train(self.config)

    def test_writes_timing_rows(self):
        outcome = pipeline.cmd_benchmark(self.config)
        header, rows = read_rows(self.config.output_path / 'timing.csv')
        self.assertEqual(header, ['points', 'seconds', 'fitted_seconds'])
        self.assertEqual([row[0] for row in rows], ['5', '10', '20'])
        self.assertIn('r^2', outcome.summary)

    def test_poor_fit_fails(self):
        config = self.small_config(overrides={'evaluation': {'min_r_squared': 0.99}})
        record = TimingRecord.from_timings([1, 2, 3], [1.0, 0.2, 3.0])
        with mock.patch('experiments.pipeline.timing_benchmark', return_value=record):
            with self.assertRaises(AcceptanceError):
                pipeline.cmd_benchmark(config)
        self.assertTrue((config.output_path / 'timing.csv').exists())


class SelfCheckTests(SimpleTestCase):
    def test_fresh_build_passes(self):
        results = cmd_check()
        self.assertTrue(all(result.passed for result in results))
        names = [result.name for result in results]
        self.assertIn('nws exact residual', names)
        self.assertIn('loss gradients', names)

    def test_failure_is_an_acceptance_error(self):
        failing = [CheckResult('nws exact residual', 1.0, 1e-10)]
        with mock.patch('experiments.checks.check_exact_solutions', return_value=failing):
            with self.assertRaises(AcceptanceError) as cm:
                cmd_check()
        self.assertIn('nws exact residual', str(cm.exception))


class ManagementCommandTests(OutputDirMixin, TestCase):
    def setUp(self):
        super().setUp()
        self.config_path = self.root / 'run.ini'
        self.config_path.write_text(small_run())

    def pinn(self, *args):
        out = StringIO()
        call_command('pinn', *args, stdout=out)
        return out.getvalue()

    def test_train_then_evaluate(self):
        out_dir = str(self.root / 'cli')
        output = self.pinn('train', '--config', str(self.config_path), '--out', out_dir)
        self.assertIn('trained 67 parameters', output)
        output = self.pinn('evaluate', '--config', str(self.config_path), '--out', out_dir)
        self.assertIn('max_abs_error', output)
        output = self.pinn('tables', '--config', str(self.config_path), '--out', out_dir)
        self.assertIn('Absolute errors, nws', output)

    def test_validation_error_exit_code(self):
        self.config_path.write_text('[network]\ndepth = 3\n')
        with self.assertRaises(CommandError) as cm:
            self.pinn('train', '--config', str(self.config_path))
        self.assertEqual(cm.exception.returncode, 1)
        self.assertIn('[network] depth', str(cm.exception))

    def test_bad_flags_are_validation_errors(self):
        for args in (['train', '--seed', 'many'], ['train', '--problem', 'heat'],
                     ['evaluate', '--profile', 'nightly']):
            with self.subTest(args=args), self.assertRaises(CommandError) as cm:
                self.pinn(*args)
            self.assertEqual(cm.exception.returncode, 1)

    def test_bad_flags_exit_1_from_the_command_line(self):
        command = Command()
        command._called_from_command_line = True
        parser = command.create_parser('manage.py', 'pinn')
        for args in (['train', '--seed', 'many'], ['train', '--problem', 'heat'],
                     ['evaluate', '--profile', 'nightly'], ['solve']):
            with self.subTest(args=args), redirect_stderr(StringIO()):
                with self.assertRaises(SystemExit) as cm:
                    parser.parse_args(args)
            self.assertEqual(cm.exception.code, 1)

    def test_acceptance_exit_code(self):
        out_dir = str(self.root / 'cli')
        self.pinn('train', '--config', str(self.config_path), '--out', out_dir)
        strict = self.root / 'strict.ini'
        strict.write_text(small_run(evaluation={'max_error': 1e-12}))
        with self.assertRaises(CommandError) as cm:
            self.pinn('evaluate', '--config', str(strict), '--out', out_dir)
        self.assertEqual(cm.exception.returncode, 3)

    def test_numerical_failure_exit_code(self):
        with mock.patch('experiments.pipeline.train', side_effect=TrainingAborted(0)):
            with self.assertRaises(CommandError) as cm:
                self.pinn('train', '--config', str(self.config_path), '--out', str(self.root / 'x'))
        self.assertEqual(cm.exception.returncode, 2)

    def test_missing_checkpoint(self):
        with self.assertRaises(CommandError) as cm:
            self.pinn('evaluate', '--config', str(self.config_path), '--out', str(self.root / 'empty'))
        self.assertEqual(cm.exception.returncode, 1)


@tag('slow')
@skipUnless(settings.PINN_SLOW_TESTS, 'set PINN_SLOW_TESTS=True for full-scale runs')
class FullScaleTests(OutputDirMixin, TestCase):
    def test_ci_profile(self):
        config = parse_config('', problem='nws', profile='ci', out=self.root / 'ci')
        outcome = pipeline.cmd_train(config)
        history = outcome.result.history
        self.assertGreaterEqual(history[0].total / history[-1].total, 100.0)
        self.assertLessEqual(pipeline.cmd_evaluate(config).report.max_abs_error, 2e-3)

    def test_nws_reproduction(self):
        config = parse_config('', problem='nws', out=self.root / 'nws')
        pipeline.cmd_train(config)
        report = pipeline.cmd_evaluate(config).report
        self.assertTrue(np.all(report.linf <= 1e-4))
        table = pipeline.cmd_tables(config)
        self.assertLessEqual(float(np.max(table.pinn)), 1e-4)
        self.assertTrue(table.dominance('ECBS'))

    def test_allen_cahn_reproduction(self):
        config = parse_config('', problem='allen-cahn', out=self.root / 'allen-cahn')
        pipeline.cmd_train(config)
        self.assertLessEqual(pipeline.cmd_evaluate(config).gated_error, 5e-5)
        self.assertTrue(pipeline.cmd_tables(config).dominance('N-P'))

    def test_timing_is_linear(self):
        config = parse_config('[training]\niterations = 0\n', problem='nws', out=self.root / 'timing')
        pipeline.cmd_train(config)
        outcome = pipeline.cmd_benchmark(config)
        self.assertEqual(len(outcome.record.point_counts), 10)
        self.assertGreaterEqual(outcome.record.fit.r_squared, 0.98)
