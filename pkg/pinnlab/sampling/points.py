"""
Training point sets and evaluation grids.

Initial, boundary and collocation points are drawn uniformly from separate
named random streams (see ``core.rng``), so each set depends only on the
seed and its own count.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.csvio import write_rows
from core.exceptions import ConfigurationError
from core.rng import seeded_generator

logger = logging.getLogger(__name__)

INITIAL_STREAM = 'initial-points'
BOUNDARY_STREAM = 'boundary-points'
COLLOCATION_STREAM = 'collocation-points'

_GRID_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class SampleSet:
    initial: np.ndarray      # (N0, 3): t = 0, x, f(x)
    boundary: np.ndarray     # (Nb, 3): t, x in {a, b}, g(t) or h(t)
    collocation: np.ndarray  # (Nc, 2): t, x
    seed: int

    @property
    def counts(self):
        return len(self.initial), len(self.boundary), len(self.collocation)

    def same_as(self, other):
        return (self.seed == other.seed
                and all(mine.tobytes() == theirs.tobytes() and mine.shape == theirs.shape
                        for mine, theirs in zip(self.arrays(), other.arrays())))

    def arrays(self):
        return self.initial, self.boundary, self.collocation


def _check_count(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")


def _data(fn, points):
    return np.asarray(fn(points), dtype=np.float64) * np.ones_like(points)


def sample_uniform(pde, n0, nb, nc, seed):
    """Uniform initial, boundary and collocation points for ``pde``."""
    for name, value in (('n0', n0), ('nb', nb), ('nc', nc)):
        _check_count(name, value)
    if nb % 2:
        raise ConfigurationError(f"nb must be even to split across both boundaries, got {nb}")

    x0 = seeded_generator(seed, INITIAL_STREAM).uniform(pde.a, pde.b, size=n0)
    initial = np.column_stack([np.zeros(n0), x0, _data(pde.f, x0)])

    half = nb // 2
    tb = seeded_generator(seed, BOUNDARY_STREAM).uniform(0.0, pde.T, size=(2, half))
    left = np.column_stack([tb[0], np.full(half, pde.a), _data(pde.g, tb[0])])
    right = np.column_stack([tb[1], np.full(half, pde.b), _data(pde.h, tb[1])])
    boundary = np.vstack([left, right])

    # uniform() never returns its upper limit; lifting the lower one off the
    # edge keeps collocation points strictly inside
    rng = seeded_generator(seed, COLLOCATION_STREAM)
    tc = rng.uniform(np.nextafter(0.0, np.inf), pde.T, size=nc)
    xc = rng.uniform(np.nextafter(pde.a, np.inf), pde.b, size=nc)
    collocation = np.column_stack([tc, xc])

    logger.debug(f"Sampled {n0} initial, {nb} boundary and {nc} collocation points for {pde.name}, seed {seed}")
    return SampleSet(initial, boundary, collocation, int(seed))


def dump_csv(samples, path):
    """kind, t, x, target; collocation rows have an empty target."""

    def rows():
        for t, x, u in samples.initial:
            yield 'initial', t, x, u
        for t, x, u in samples.boundary:
            yield 'boundary', t, x, u
        for t, x in samples.collocation:
            yield 'collocation', t, x, ''

    return write_rows(path, ['kind', 't', 'x', 'target'], rows())


@dataclass(frozen=True, eq=False)
class EvalGrid:
    h: float
    dt: float
    x: np.ndarray
    t: np.ndarray

    @property
    def shape(self):
        """(time points, space points)"""
        return len(self.t), len(self.x)

    @property
    def size(self):
        return len(self.t) * len(self.x)

    def mesh(self):
        """T and X arrays of ``shape``; row j is the slice t = t[j]."""
        return np.meshgrid(self.t, self.x, indexing='ij')


def _steps(extent, step):
    return int(np.floor(extent / step + _GRID_SLACK)) + 1


def make_grid(h, dt, pde, t_max=None):
    """
    Inclusive grid a + i h for x and j dt for t.

    ``t_max`` shortens the time range below the problem horizon, as for the
    early-time Allen-Cahn comparison.
    """
    t_max = pde.T if t_max is None else float(t_max)
    if not 0 < t_max <= pde.T:
        raise ConfigurationError(f"t_max must lie in (0, {pde.T}], got {t_max}")
    if not 0 < h <= pde.b - pde.a:
        raise ConfigurationError(f"h must lie in (0, {pde.b - pde.a}], got {h}")
    if not 0 < dt <= t_max:
        raise ConfigurationError(f"dt must lie in (0, {t_max}], got {dt}")

    x = pde.a + np.arange(_steps(pde.b - pde.a, h)) * h
    t = np.arange(_steps(t_max, dt)) * dt
    return EvalGrid(float(h), float(dt), x, t)
