from dataclasses import dataclass

import numpy as np

from autodiff.jets import Jet4, jet_seed
from core.exceptions import UsageError
from networks.mlp import evaluate_jet


@dataclass(frozen=True, eq=False)
class GradientField:
    """(u_t, u_x) of the exact and the network solution on a t-by-x mesh."""

    t: np.ndarray
    x: np.ndarray
    exact_u_t: np.ndarray
    exact_u_x: np.ndarray
    predicted_u_t: np.ndarray
    predicted_u_x: np.ndarray

    def rows(self):
        columns = (self.t, self.x, self.exact_u_t, self.exact_u_x, self.predicted_u_t, self.predicted_u_x)
        return zip(*(column.ravel().tolist() for column in columns))

    def max_deviation(self):
        return float(max(np.max(np.abs(self.exact_u_t - self.predicted_u_t)),
                         np.max(np.abs(self.exact_u_x - self.predicted_u_x))))


def gradient_field(net, pde, grid):
    if pde.exact is None:
        raise UsageError(f"problem {pde.name!r} has no exact solution")
    t, x = grid.mesh()
    t_jet, x_jet = jet_seed(t, x)
    exact = pde.exact(x_jet, t_jet)
    if not isinstance(exact, Jet4):
        exact = Jet4.constant(exact)
    ones = np.ones_like(t)
    predicted = evaluate_jet(net, t, x)
    return GradientField(
        t, x,
        np.asarray(exact.dt) * ones, np.asarray(exact.dx) * ones,
        predicted.dt, predicted.dx,
    )
