import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .csvio import read_rows, write_rows
from .exceptions import (
    AcceptanceError, ConfigurationError, ExportError, NumericalError, SingularityError,
    TrainingAborted, UsageError,
)
from .rng import seeded_generator


class SeededGeneratorTests(SimpleTestCase):
    def test_same_seed_and_stream_repeat(self):
        a = seeded_generator(7, 'collocation').random(5)
        b = seeded_generator(7, 'collocation').random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_are_independent(self):
        a = seeded_generator(7, 'collocation').random(5)
        b = seeded_generator(7, 'initial').random(5)
        self.assertFalse(np.array_equal(a, b))

    def test_negative_seed_rejected(self):
        with self.assertRaises(ConfigurationError):
            seeded_generator(-1, 'x')


class CsvTests(SimpleTestCase):
    def test_floats_round_trip_exactly(self):
        values = [0.1, 1 / 3, 6.270e-6, np.float64(2.0) / 3]
        with tempfile.TemporaryDirectory() as tmp:
            path = write_rows(Path(tmp) / 'values.csv', ['v'], [[v] for v in values])
            header, rows = read_rows(path)
        self.assertEqual(header, ['v'])
        self.assertEqual([float(row[0]) for row in rows], [float(v) for v in values])

    def test_header_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_rows(Path(tmp) / 'empty.csv', ['a', 'b'], [])
            header, rows = read_rows(path)
        self.assertEqual(header, ['a', 'b'])
        self.assertEqual(rows, [])

    def test_unwritable_path_names_the_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            blocker = Path(tmp) / 'file'
            blocker.write_text('x')
            with self.assertRaises(ExportError) as ctx:
                write_rows(blocker / 'nested.csv', ['a'], [])
        self.assertIn('nested.csv', str(ctx.exception))


class ExitCodeTests(SimpleTestCase):
    def test_exit_codes(self):
        self.assertEqual(ConfigurationError('x').exit_code, 1)
        self.assertEqual(UsageError('x').exit_code, 1)
        self.assertEqual(NumericalError('x').exit_code, 2)
        self.assertEqual(SingularityError('x').exit_code, 2)
        self.assertEqual(TrainingAborted(5).exit_code, 2)
        self.assertEqual(AcceptanceError('x').exit_code, 3)

    def test_training_aborted_names_iteration(self):
        self.assertIn('iteration 12', str(TrainingAborted(12)))
