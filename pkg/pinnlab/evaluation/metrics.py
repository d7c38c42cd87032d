"""
Pointwise errors against the exact solution and their per-time norms.

The L2 norm is the plain Euclidean norm of the error slice, not divided by
the number of points.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import UsageError
from networks.mlp import Network, predict

logger = logging.getLogger(__name__)


def _slice(errors):
    errors = np.asarray(errors, dtype=np.float64).ravel()
    if not errors.size:
        raise UsageError("norm of an empty error vector")
    return errors


def l2_norm(errors):
    errors = _slice(errors)
    return float(np.sqrt(np.sum(errors * errors)))


def linf_norm(errors):
    return float(np.max(np.abs(_slice(errors))))


def predictions(predictor, t, x):
    """Evaluate a Network or any callable (t, x) -> u on matching arrays."""
    if isinstance(predictor, Network):
        return predict(predictor, t, x)
    return np.asarray(predictor(t, x), dtype=np.float64) * np.ones_like(t)


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """Errors on a t-by-x grid; row j of every matrix is the slice t = t[j]."""

    t: np.ndarray
    x: np.ndarray
    exact: np.ndarray
    predicted: np.ndarray
    error_grid: np.ndarray = field(init=False)
    l2: np.ndarray = field(init=False)
    linf: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 't', np.asarray(self.t, dtype=np.float64).ravel())
        object.__setattr__(self, 'x', np.asarray(self.x, dtype=np.float64).ravel())
        shape = (len(self.t), len(self.x))
        for name in ('exact', 'predicted'):
            value = np.asarray(getattr(self, name), dtype=np.float64).reshape(shape)
            object.__setattr__(self, name, value)
        errors = np.abs(self.exact - self.predicted)
        object.__setattr__(self, 'error_grid', errors)
        if self.x.size:
            l2 = np.array([l2_norm(row) for row in errors])
            linf = np.array([linf_norm(row) for row in errors])
        else:
            l2 = linf = np.zeros(len(self.t))
        object.__setattr__(self, 'l2', l2)
        object.__setattr__(self, 'linf', linf)

    @property
    def max_abs_error(self):
        return float(np.max(self.error_grid)) if self.error_grid.size else 0.0

    @property
    def l2_by_t(self):
        return list(zip(self.t.tolist(), self.l2.tolist()))

    @property
    def linf_by_t(self):
        return list(zip(self.t.tolist(), self.linf.tolist()))

    def value_at(self, x, t):
        """Error at the grid node nearest to (x, t)."""
        j = int(np.argmin(np.abs(self.t - t)))
        i = int(np.argmin(np.abs(self.x - x)))
        return float(self.error_grid[j, i])


def errors_at(predictor, pde, t, x):
    """(exact, predicted) on the t-by-x mesh spanned by two coordinate vectors."""
    if pde.exact is None:
        raise UsageError(f"problem {pde.name!r} has no exact solution to compare with")
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    tt, xx = np.meshgrid(t, x, indexing='ij')
    exact = np.asarray(pde.exact(xx, tt), dtype=np.float64) * np.ones_like(tt)
    return exact, predictions(predictor, tt, xx)


def absolute_error_grid(predictor, pde, grid):
    exact, predicted = errors_at(predictor, pde, grid.t, grid.x)
    report = MetricsReport(grid.t, grid.x, exact, predicted)
    logger.info(f"{pde.name}: max absolute error {report.max_abs_error:.3e} over {grid.size} grid points")
    return report
