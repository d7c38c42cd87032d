"""
PINN loss terms.

Every loss is recorded on the tape of the TapedNetwork it is given, so one
reverse sweep from the weighted total yields the parameter gradient. A plain
Network is put on a fresh tape first.
"""
from dataclasses import dataclass

import numpy as np

from autodiff import tape as ops
from autodiff.tape import Tape, TapeNode
from core.exceptions import UsageError
from networks.mlp import Network
from problems.equations import residual


def _taped(net):
    if isinstance(net, Network):
        return net.on_tape(Tape())
    return net


def _value(loss):
    return float(loss.value) if isinstance(loss, TapeNode) else float(loss)


def _mean_squared_misfit(taped, triples, what):
    triples = np.asarray(triples, dtype=np.float64)
    if triples.ndim != 2 or not len(triples):
        raise UsageError(f"no {what} points to fit")
    t, x, target = triples[:, 0], triples[:, 1], triples[:, 2]
    misfit = taped.values(t, x) - target
    return ops.mean(misfit * misfit)


def loss_init(net, samples):
    """Mean squared misfit to the initial data."""
    return _mean_squared_misfit(_taped(net), samples.initial, 'initial')


def loss_bound(net, samples):
    """Mean squared misfit to the boundary data."""
    return _mean_squared_misfit(_taped(net), samples.boundary, 'boundary')


def loss_res(net, pde, samples):
    """Mean squared PDE residual over the collocation points."""
    points = np.asarray(samples.collocation, dtype=np.float64)
    if points.ndim != 2 or not len(points):
        raise UsageError("no collocation points to evaluate the residual on")
    t, x = points[:, 0], points[:, 1]
    r = residual(pde, _taped(net).jet(t, x), x, t)
    return ops.mean(r * r)


def loss_data(net, points, targets):
    """Sum of squared errors against labelled (t, x) points."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if not len(points) or len(points) != len(targets):
        raise UsageError(f"need matching points and targets, got {len(points)} and {len(targets)}")
    misfit = _taped(net).values(points[:, 0], points[:, 1]) - targets
    return ops.total(misfit * misfit)


def total_loss(parts, weights=(1.0, 1.0, 1.0)):
    init, bound, res = parts
    alpha, beta, gamma = weights
    return alpha * init + beta * bound + gamma * res


@dataclass(frozen=True)
class LossBreakdown:
    init_loss: float
    bound_loss: float
    res_loss: float
    total: float

    @classmethod
    def from_parts(cls, parts, total):
        init, bound, res = (_value(part) for part in parts)
        return cls(init, bound, res, _value(total))

    def is_finite(self):
        return all(np.isfinite([self.init_loss, self.bound_loss, self.res_loss, self.total]))

    def __str__(self):
        return (f"init={self.init_loss:.3e} bound={self.bound_loss:.3e} "
                f"res={self.res_loss:.3e} total={self.total:.3e}")
