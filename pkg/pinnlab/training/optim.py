import bisect
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigurationError, NumericalError, UsageError

DEFAULT_SCHEDULE = ((0, 1e-2), (1000, 1e-3), (3000, 5e-4))


def validate_schedule(schedule):
    """Return the schedule as a tuple of (start, rate) pairs or raise."""
    try:
        pairs = tuple((int(start), float(rate)) for start, rate in schedule)
    except (TypeError, ValueError):
        raise ConfigurationError(f"schedule must be (start, rate) pairs, got {schedule!r}") from None
    if not pairs or pairs[0][0] != 0:
        raise ConfigurationError("schedule must start at iteration 0")
    starts = [start for start, _ in pairs]
    if any(later <= earlier for earlier, later in zip(starts, starts[1:])):
        raise ConfigurationError(f"schedule start iterations must increase strictly, got {starts}")
    if any(not (rate > 0 and np.isfinite(rate)) for _, rate in pairs):
        raise ConfigurationError("learning rates must be positive")
    return pairs


def lr_at(schedule, iteration):
    """Rate of the last segment starting at or before ``iteration``."""
    if iteration < 0:
        raise UsageError(f"iteration must be non-negative, got {iteration}")
    starts = [start for start, _ in schedule]
    return schedule[bisect.bisect_right(starts, iteration) - 1][1]


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size), np.zeros(size), 0)


def _check_gradient(params, grads):
    if params.shape != grads.shape:
        raise UsageError(f"parameter and gradient shapes differ: {params.shape} vs {grads.shape}")
    if not np.all(np.isfinite(grads)):
        bad = int(np.count_nonzero(~np.isfinite(grads)))
        raise NumericalError(f"{bad} non-finite gradient entries")


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """One bias-corrected Adam update; returns (params, state)."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    _check_gradient(params, grads)
    if state.m.shape != params.shape:
        raise UsageError(f"optimizer state has shape {state.m.shape}, parameters {params.shape}")
    if not lr > 0:
        raise UsageError(f"learning rate must be positive, got {lr}")

    step = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    updated = params - lr * m_hat / (np.sqrt(v_hat) + epsilon)
    return updated, AdamState(m, v, step)


def gd_step(params, grads, lr):
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    _check_gradient(params, grads)
    if not lr > 0:
        raise UsageError(f"learning rate must be positive, got {lr}")
    return params - lr * grads
