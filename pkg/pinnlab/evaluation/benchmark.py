"""
Inference timing.

Each domain point gets its own forward pass, as when the trained model is
queried at scattered points, so wall time grows with the point count. The
best of several repeats is kept for every count.
"""
import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from core.exceptions import ConfigurationError
from core.rng import seeded_generator
from networks.mlp import forward

logger = logging.getLogger(__name__)

DEFAULT_COUNTS = tuple(range(1000, 10001, 1000))


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, counts):
        return self.slope * np.asarray(counts, dtype=np.float64) + self.intercept


def linear_fit(counts, seconds):
    """Least-squares seconds = slope * count + intercept."""
    counts = np.asarray(counts, dtype=np.float64)
    seconds = np.asarray(seconds, dtype=np.float64)
    if len(counts) < 2 or len(counts) != len(seconds):
        raise ConfigurationError("a linear fit needs at least two (count, seconds) pairs")
    if np.all(seconds == seconds[0]):
        return LinearFit(0.0, float(seconds[0]), 1.0)
    result = stats.linregress(counts, seconds)
    return LinearFit(float(result.slope), float(result.intercept), float(result.rvalue ** 2))


@dataclass(frozen=True, eq=False)
class TimingRecord:
    point_counts: np.ndarray
    seconds: np.ndarray
    fit: LinearFit

    def __post_init__(self):
        counts = np.asarray(self.point_counts, dtype=np.int64)
        seconds = np.asarray(self.seconds, dtype=np.float64)
        if np.any(np.diff(counts) <= 0):
            raise ConfigurationError(f"point counts must increase strictly, got {counts.tolist()}")
        if np.any(seconds < 0):
            raise ConfigurationError("timings must be non-negative")
        object.__setattr__(self, 'point_counts', counts)
        object.__setattr__(self, 'seconds', seconds)

    @classmethod
    def from_timings(cls, counts, seconds):
        return cls(counts, seconds, linear_fit(counts, seconds))

    def is_monotone(self, slack=0.8):
        """seconds[i+1] >= slack * seconds[i] * counts[i+1] / counts[i] for every i."""
        ratio = self.point_counts[1:] / self.point_counts[:-1]
        return bool(np.all(self.seconds[1:] >= slack * self.seconds[:-1] * ratio))

    def rows(self):
        fitted = self.fit.predict(self.point_counts)
        return zip(self.point_counts.tolist(), self.seconds.tolist(), fitted.tolist())


def _check_counts(counts):
    counts = [int(count) for count in counts]
    if not counts or counts[0] < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
        raise ConfigurationError(f"benchmark counts must be positive and increasing, got {counts}")
    return counts


def timing_benchmark(net, pde, counts=DEFAULT_COUNTS, seed=0, repeats=3, clock=time.perf_counter):
    """Time point-by-point inference at seeded random domain points."""
    counts = _check_counts(counts)
    if repeats < 1:
        raise ConfigurationError(f"repeats must be positive, got {repeats}")
    rng = seeded_generator(seed, 'benchmark-points')
    largest = counts[-1]
    points = np.column_stack([rng.uniform(0.0, pde.T, size=largest),
                              rng.uniform(pde.a, pde.b, size=largest)])

    seconds = []
    for count in counts:
        best = None
        for _ in range(repeats):
            start = clock()
            for z in points[:count]:
                forward(net, z)
            elapsed = clock() - start
            best = elapsed if best is None else min(best, elapsed)
        seconds.append(best)
        logger.info(f"{count} points: {best:.4f}s")

    record = TimingRecord.from_timings(counts, seconds)
    logger.info(f"Timing fit: {record.fit.slope:.3e} s/point, r^2 {record.fit.r_squared:.4f}")
    return record
