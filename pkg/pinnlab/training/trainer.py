"""
Full-batch training loop.

Each iteration records the three losses of every sample point on a fresh
tape, sweeps back once and applies one optimizer step. The loop is
single-threaded; identical inputs give bitwise-identical histories.
"""
import logging
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from autodiff.tape import Tape
from core.csvio import write_rows
from core.exceptions import ConfigurationError, NumericalError, TrainingAborted

from .losses import LossBreakdown, loss_bound, loss_data, loss_init, loss_res, total_loss
from .optim import DEFAULT_SCHEDULE, AdamState, adam_step, gd_step, lr_at, validate_schedule

logger = logging.getLogger(__name__)

OPTIMIZERS = ('adam', 'gd')


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 20000
    schedule: tuple = DEFAULT_SCHEDULE
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    optimizer: str = 'adam'
    log_every: int = 1000

    def __post_init__(self):
        object.__setattr__(self, 'schedule', validate_schedule(self.schedule))
        if isinstance(self.iterations, bool) or not isinstance(self.iterations, int) or self.iterations < 0:
            raise ConfigurationError(f"iterations must be a non-negative integer, got {self.iterations!r}")
        weights = self.weights
        if any(not (w >= 0 and np.isfinite(w)) for w in weights) or not any(weights):
            raise ConfigurationError(f"loss weights must be non-negative and not all zero, got {weights}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.epsilon > 0):
            raise ConfigurationError("Adam needs 0 <= beta1, beta2 < 1 and epsilon > 0")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"optimizer must be one of {', '.join(OPTIMIZERS)}, got {self.optimizer!r}")
        if self.log_every < 1:
            raise ConfigurationError(f"log_every must be positive, got {self.log_every}")

    @property
    def weights(self):
        return self.alpha, self.beta, self.gamma

    def lr(self, iteration):
        return lr_at(self.schedule, iteration)


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    lr: float
    init_loss: float
    bound_loss: float
    res_loss: float
    total: float
    elapsed_seconds: float


HISTORY_COLUMNS = [f.name for f in fields(HistoryRow)]


@dataclass
class TrainingResult:
    network: object
    history: list = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def final(self):
        return self.history[-1] if self.history else None


def loss_and_gradient(net, pde, samples, weights=(1.0, 1.0, 1.0)):
    """LossBreakdown of ``net`` and the flat gradient of its weighted total."""
    taped = net.on_tape(Tape())
    parts = (loss_init(taped, samples), loss_bound(taped, samples), loss_res(taped, pde, samples))
    total = total_loss(parts, weights)
    breakdown = LossBreakdown.from_parts(parts, total)
    if not breakdown.is_finite():
        return breakdown, None
    return breakdown, taped.flat_gradient(total)


class _Optimizer:
    def __init__(self, config, size):
        self.config = config
        self.state = AdamState.zeros(size)

    def step(self, params, grads, lr):
        if self.config.optimizer == 'gd':
            return gd_step(params, grads, lr)
        params, self.state = adam_step(params, grads, self.state, lr,
                                       self.config.beta1, self.config.beta2, self.config.epsilon)
        return params


def train(pde, net, samples, config):
    """Run ``config.iterations`` full-batch steps and return a TrainingResult."""
    logger.info(f"Training {net.layer_sizes} {net.activation} network on {pde.name}: "
                f"{config.iterations} iterations, {config.optimizer}, points {samples.counts}")
    optimizer = _Optimizer(config, net.parameter_count)
    params = net.parameters()
    history = []
    last_finite = None
    start = time.perf_counter()

    for iteration in range(config.iterations):
        lr = config.lr(iteration)
        try:
            breakdown, grads = loss_and_gradient(net, pde, samples, config.weights)
            if grads is None:
                raise TrainingAborted(iteration, last_finite)
            params = optimizer.step(params, grads, lr)
            net = net.with_parameters(params)
        except TrainingAborted:
            logger.error(f"Training aborted at iteration {iteration}")
            raise
        except NumericalError as e:
            logger.error(f"Training aborted at iteration {iteration}: {e}")
            raise TrainingAborted(iteration, last_finite, reason=str(e)) from e

        last_finite = breakdown
        elapsed = time.perf_counter() - start
        history.append(HistoryRow(iteration, lr, breakdown.init_loss, breakdown.bound_loss,
                                  breakdown.res_loss, breakdown.total, elapsed))
        if iteration % config.log_every == 0 or iteration == config.iterations - 1:
            logger.info(f"iteration {iteration} lr {lr:.1e} {breakdown} ({elapsed:.1f}s)")

    wall = time.perf_counter() - start
    logger.info(f"Training finished in {wall:.1f}s")
    return TrainingResult(net, history, wall)


def fit(net, points, targets, config):
    """Minimize the summed squared error to labelled points; returns (network, losses)."""
    optimizer = _Optimizer(config, net.parameter_count)
    params = net.parameters()
    losses = []
    for iteration in range(config.iterations):
        taped = net.on_tape(Tape())
        loss = loss_data(taped, points, targets)
        value = float(loss.value)
        if not np.isfinite(value):
            raise TrainingAborted(iteration, reason='non-finite data loss')
        params = optimizer.step(params, taped.flat_gradient(loss), config.lr(iteration))
        net = net.with_parameters(params)
        losses.append(value)
        if iteration % config.log_every == 0:
            logger.debug(f"fit iteration {iteration} loss {value:.3e}")
    return net, losses


def write_history_csv(history, path):
    return write_rows(path, HISTORY_COLUMNS, (list(asdict(row).values()) for row in history))
