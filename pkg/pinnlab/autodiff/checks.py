"""
Finite-difference validation of jets and reverse sweeps.

Discrepancies are reported as |a - b| / max(1, |a|, |b|): relative for
derivatives of magnitude above one, absolute below that, so a derivative that
is exactly zero does not turn rounding noise into an infinite relative error.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import UsageError

from .jets import Jet4, jet_seed
from .tape import Tape, TapeNode

logger = logging.getLogger(__name__)


def scaled_error(computed, reference):
    computed = np.asarray(computed, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    scale = np.maximum(1.0, np.maximum(np.abs(computed), np.abs(reference)))
    return float(np.max(np.abs(computed - reference) / scale)) if computed.size else 0.0


def _scalar(value):
    if isinstance(value, TapeNode):
        value = value.value
    if isinstance(value, Jet4):
        value = value.val
    return float(np.asarray(value, dtype=np.float64))


def central_difference(f, point, index, step):
    """(f(p + h e_i) - f(p - h e_i)) / 2h"""
    forward = np.array(point, dtype=np.float64)
    backward = forward.copy()
    forward[index] += step
    backward[index] -= step
    return (_scalar(f(*forward)) - _scalar(f(*backward))) / (2.0 * step)


def second_difference(f, point, index, step):
    """(f(p + h e_i) - 2 f(p) + f(p - h e_i)) / h^2"""
    centre = np.array(point, dtype=np.float64)
    forward, backward = centre.copy(), centre.copy()
    forward[index] += step
    backward[index] -= step
    return (_scalar(f(*forward)) - 2.0 * _scalar(f(*centre)) + _scalar(f(*backward))) / step ** 2


@dataclass(frozen=True)
class DerivativeReport:
    first_order: float
    second_order: float
    gradient: float

    @property
    def worst(self):
        return max(self.first_order, self.second_order, self.gradient)

    def passed(self, first_tolerance=1e-5, second_tolerance=1e-3):
        return (self.first_order <= first_tolerance
                and self.gradient <= first_tolerance
                and self.second_order <= second_tolerance)


def derivative_check(f, point, step=1e-4):
    """
    Compare jet tangents and reverse-sweep gradients of ``f`` with central
    differences.

    ``f`` takes one argument (x) or two (t, x) and must be written with
    operations that accept numbers, jets and tape nodes alike. The second
    derivative is checked along x, the last coordinate.
    """
    if step <= 0:
        raise UsageError(f"finite-difference step must be positive, got {step}")
    point = np.array(point, dtype=np.float64).ravel()
    if point.size not in (1, 2):
        raise UsageError(f"derivative_check takes (x) or (t, x), got {point.size} coordinates")

    x_index = point.size - 1
    reference = [central_difference(f, point, i, step) for i in range(point.size)]
    reference_xx = second_difference(f, point, x_index, step)

    if point.size == 2:
        seeds = jet_seed(point[0], point[1])
    else:
        seeds = (Jet4(float(point[0]), 0.0, 1.0, 0.0),)
    out = f(*seeds)
    if not isinstance(out, Jet4):
        out = Jet4.constant(out)
    tangents = [out.dt, out.dx] if point.size == 2 else [out.dx]

    first = max(scaled_error(tangent, ref) for tangent, ref in zip(tangents, reference))
    second = scaled_error(out.dxx, reference_xx)

    recording = Tape()
    leaves = [recording.parameter(value) for value in point]
    root = f(*leaves)
    if isinstance(root, TapeNode):
        adjoints = recording.grad(root)
        computed = [adjoints[leaf] for leaf in leaves]
    else:
        computed = [0.0] * point.size
    gradient = max(scaled_error(c, ref) for c, ref in zip(computed, reference))

    report = DerivativeReport(first_order=first, second_order=second, gradient=gradient)
    logger.debug(f"Derivative check at {point.tolist()}: {report}")
    return report
