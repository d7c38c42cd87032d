"""CSV exports of evaluation results, all values at 17 significant digits."""
from functools import singledispatch

import numpy as np

from core.csvio import read_rows, write_rows
from core.exceptions import UsageError

from .benchmark import TimingRecord
from .fields import GradientField
from .metrics import MetricsReport
from .tables import ComparisonTable

GRID_COLUMNS = ['t', 'x', 'exact', 'predicted', 'abs_error']


@singledispatch
def export_csv(result, path):
    raise UsageError(f"cannot export {type(result).__name__} as CSV")


@export_csv.register
def _(report: MetricsReport, path):
    def rows():
        for j, t in enumerate(report.t):
            for i, x in enumerate(report.x):
                yield t, x, report.exact[j, i], report.predicted[j, i], report.error_grid[j, i]

    return write_rows(path, GRID_COLUMNS, rows())


@export_csv.register
def _(record: TimingRecord, path):
    return write_rows(path, ['points', 'seconds', 'fitted_seconds'], record.rows())


@export_csv.register
def _(table: ComparisonTable, path):
    return write_rows(path, ['x', 't', 'method', 'abs_error'], table.rows())


@export_csv.register
def _(field: GradientField, path):
    header = ['t', 'x', 'exact_u_t', 'exact_u_x', 'predicted_u_t', 'predicted_u_x']
    return write_rows(path, header, field.rows())


def export_norms_csv(report, path):
    return write_rows(path, ['t', 'l2', 'linf'], zip(report.t, report.l2, report.linf))


def import_metrics_csv(path):
    """Rebuild a MetricsReport from a long-form grid file."""
    header, rows = read_rows(path)
    if header != GRID_COLUMNS:
        raise UsageError(f"{path} is not a grid export (header {header})")
    if not rows:
        return MetricsReport(np.zeros(0), np.zeros(0), np.zeros((0, 0)), np.zeros((0, 0)))
    values = np.array(rows, dtype=np.float64)
    t = np.unique(values[:, 0])
    x = np.unique(values[:, 1])
    if len(values) != len(t) * len(x):
        raise UsageError(f"{path} does not hold a complete t-by-x grid")
    order = np.lexsort((values[:, 1], values[:, 0]))
    values = values[order]
    shape = (len(t), len(x))
    return MetricsReport(t, x, values[:, 2].reshape(shape), values[:, 3].reshape(shape))
