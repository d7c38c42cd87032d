import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import UsageError
from problems.equations import DEFAULT_LAMBDA, get_problem

from .baselines import baseline_tables
from .metrics import errors_at

logger = logging.getLogger(__name__)

PINN_LABEL = 'PINN'


@dataclass(frozen=True, eq=False)
class ComparisonTable:
    problem: str
    x: np.ndarray
    t: np.ndarray
    pinn: np.ndarray   # (len(x), len(t))
    baselines: tuple
    a: float = 0.0
    b: float = 1.0

    @property
    def methods(self):
        return [table.method for table in self.baselines] + [PINN_LABEL]

    def errors(self, method):
        if method == PINN_LABEL:
            return self.pinn
        for table in self.baselines:
            if table.method == method:
                return table.errors
        raise UsageError(f"no column {method!r} in the {self.problem} table")

    def interior(self):
        """Mask of rows whose x is not a boundary of the domain."""
        return ~(np.isclose(self.x, self.a) | np.isclose(self.x, self.b))

    def dominance(self, method):
        """True when the PINN error is below ``method`` at every interior grid point."""
        rows = self.interior()
        return bool(np.all(self.pinn[rows] < self.errors(method)[rows]))

    def dominance_summary(self):
        return {table.method: self.dominance(table.method) for table in self.baselines}

    def rows(self):
        """Long form: x, t, method, abs_error."""
        for method in self.methods:
            errors = self.errors(method)
            for i, x in enumerate(self.x):
                for j, t in enumerate(self.t):
                    yield x, t, method, errors[i, j]

    def render(self):
        label_width = max(len(method) for method in self.methods)
        head = f"{'x':>5}  {'method':<{label_width}}  " + '  '.join(f"t={t:<8g}" for t in self.t)
        lines = [f"Absolute errors, {self.problem}", head, '-' * len(head)]
        for i, x in enumerate(self.x):
            for method in self.methods:
                values = '  '.join(f"{value:10.3e}" for value in self.errors(method)[i])
                lines.append(f"{x:5g}  {method:<{label_width}}  {values}")
        lines.append('')
        for method, wins in self.dominance_summary().items():
            verdict = 'below' if wins else 'NOT below'
            lines.append(f"{PINN_LABEL} is {verdict} {method} at every interior point")
        return '\n'.join(lines)


def published_comparison(predictor, problem, lam=DEFAULT_LAMBDA, trained_on=None):
    """PINN errors on the published comparison grid next to the stored baselines."""
    if trained_on is not None and trained_on != problem:
        raise UsageError(f"network was trained on {trained_on!r} but the {problem!r} table was requested")
    pde = get_problem(problem, lam)
    baselines = tuple(baseline_tables(problem))
    x, t = baselines[0].x, baselines[0].t
    exact, predicted = errors_at(predictor, pde, t, x)
    pinn = np.abs(exact - predicted).T
    logger.info(f"Built {problem} comparison table: max PINN error {np.max(pinn):.3e}")
    return ComparisonTable(problem, x, t, pinn, baselines, pde.a, pde.b)
