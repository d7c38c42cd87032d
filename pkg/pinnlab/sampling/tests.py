import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.csvio import read_rows
from core.exceptions import ConfigurationError
from problems.equations import allen_cahn_problem, nws_problem

from .points import dump_csv, make_grid, sample_uniform


class SampleUniformTests(SimpleTestCase):
    def test_nws_counts(self):
        samples = sample_uniform(nws_problem(), 250, 250, 10000, seed=1)
        self.assertEqual(samples.counts, (250, 250, 10000))

    def test_allen_cahn_counts(self):
        samples = sample_uniform(allen_cahn_problem(), 500, 500, 10000, seed=1)
        self.assertEqual(samples.counts, (500, 500, 10000))

    def test_point_set_invariants(self):
        pde = allen_cahn_problem()
        samples = sample_uniform(pde, 100, 60, 3000, seed=3)

        t0, x0, u0 = samples.initial.T
        np.testing.assert_array_equal(t0, 0.0)
        self.assertTrue(np.all((x0 >= pde.a) & (x0 <= pde.b)))
        np.testing.assert_array_equal(u0, pde.f(x0))

        tb, xb, ub = samples.boundary.T
        self.assertTrue(np.all((tb >= 0) & (tb <= pde.T)))
        on_left = xb == pde.a
        self.assertEqual(int(on_left.sum()), 30)
        self.assertEqual(int((xb == pde.b).sum()), 30)
        np.testing.assert_array_equal(ub[on_left], pde.g(tb[on_left]))
        np.testing.assert_array_equal(ub[~on_left], pde.h(tb[~on_left]))

        tc, xc = samples.collocation.T
        self.assertTrue(np.all((tc > 0) & (tc < pde.T)))
        self.assertTrue(np.all((xc > pde.a) & (xc < pde.b)))

    def test_determinism(self):
        pde = nws_problem()
        first = sample_uniform(pde, 20, 20, 200, seed=11)
        self.assertTrue(first.same_as(sample_uniform(pde, 20, 20, 200, seed=11)))
        self.assertFalse(first.same_as(sample_uniform(pde, 20, 20, 200, seed=12)))

    def test_streams_are_independent_of_other_counts(self):
        pde = nws_problem()
        small = sample_uniform(pde, 20, 20, 200, seed=5)
        large = sample_uniform(pde, 40, 20, 200, seed=5)
        np.testing.assert_array_equal(small.collocation, large.collocation)
        np.testing.assert_array_equal(small.boundary, large.boundary)

    def test_collocation_mean(self):
        samples = sample_uniform(nws_problem(), 10, 10, 10000, seed=2)
        self.assertLess(abs(samples.collocation[:, 1].mean() - 0.5), 0.02)

    def test_invalid_counts(self):
        pde = nws_problem()
        with self.assertRaises(ConfigurationError):
            sample_uniform(pde, 10, 9, 10, seed=0)
        with self.assertRaises(ConfigurationError):
            sample_uniform(pde, 0, 10, 10, seed=0)
        with self.assertRaises(ConfigurationError):
            sample_uniform(pde, 10, 10, 10, seed=-1)

    def test_dump_csv(self):
        samples = sample_uniform(nws_problem(), 3, 4, 5, seed=0)
        with tempfile.TemporaryDirectory() as directory:
            path = dump_csv(samples, Path(directory) / 'samples.csv')
            header, rows = read_rows(path)
        self.assertEqual(header, ['kind', 't', 'x', 'target'])
        self.assertEqual([row[0] for row in rows], ['initial'] * 3 + ['boundary'] * 4 + ['collocation'] * 5)
        self.assertEqual(rows[-1][3], '')
        self.assertEqual(float(rows[0][2]), samples.initial[0, 1])


class GridTests(SimpleTestCase):
    def test_full_grid_size(self):
        grid = make_grid(0.004, 0.004, nws_problem())
        self.assertEqual(grid.shape, (251, 251))
        self.assertEqual(grid.x[0], 0.0)
        self.assertAlmostEqual(grid.x[-1], 1.0, delta=1e-12)
        self.assertAlmostEqual(grid.t[-1], 1.0, delta=1e-12)

    def test_early_time_grid(self):
        grid = make_grid(0.1, 0.001, allen_cahn_problem(), t_max=0.01)
        self.assertEqual(len(grid.x), 11)
        self.assertEqual(len(grid.t), 11)
        np.testing.assert_allclose(grid.x, np.arange(11) / 10, atol=1e-12)
        np.testing.assert_allclose(grid.t, np.arange(11) / 1000, atol=1e-12)

    def test_unit_step(self):
        grid = make_grid(1.0, 1.0, nws_problem())
        np.testing.assert_array_equal(grid.x, [0.0, 1.0])

    def test_mesh_rows_are_time_slices(self):
        grid = make_grid(0.5, 0.25, nws_problem())
        t, x = grid.mesh()
        self.assertEqual(t.shape, (5, 3))
        np.testing.assert_array_equal(t[2], 0.5)
        np.testing.assert_array_equal(x[2], [0.0, 0.5, 1.0])

    def test_invalid_steps(self):
        pde = nws_problem()
        with self.assertRaises(ConfigurationError):
            make_grid(0.0, 0.1, pde)
        with self.assertRaises(ConfigurationError):
            make_grid(0.1, -0.1, pde)
        with self.assertRaises(ConfigurationError):
            make_grid(2.0, 0.1, pde)
