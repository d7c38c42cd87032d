"""
Elementary functions with their derivatives up to third order.

A jet needs f, f' and f'' of every unary function it passes through; the
tape needs one order more to differentiate those again, hence the third
derivative.
"""
import math

import numpy as np
from scipy import special

from core.exceptions import UsageError

from . import tape

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class ElementaryFunction:
    name = 'identity'
    max_order = 3

    def derivative(self, x, order):
        """Return the ``order``-th derivative evaluated elementwise at ``x``."""
        self._check_order(order)
        if order == 0:
            return np.array(x, dtype=np.float64)
        if order == 1:
            return np.ones_like(x, dtype=np.float64)
        return np.zeros_like(x, dtype=np.float64)

    def _check_order(self, order):
        if order < 0 or order > self.max_order:
            raise UsageError(f"{self.name}: derivative of order {order} is not available")

    def __call__(self, x):
        from .jets import Jet4

        if isinstance(x, Jet4):
            return x.apply(self)
        return evaluate(self, x, 0)

    def __repr__(self):
        return f"<{self.name}>"


class Exp(ElementaryFunction):
    name = 'exp'

    def derivative(self, x, order):
        self._check_order(order)
        return np.exp(x)


class Tanh(ElementaryFunction):
    name = 'tanh'

    def derivative(self, x, order):
        self._check_order(order)
        t = np.tanh(x)
        if order == 0:
            return t
        s = 1.0 - t * t
        if order == 1:
            return s
        if order == 2:
            return -2.0 * t * s
        return s * (6.0 * t * t - 2.0)


class Erf(ElementaryFunction):
    name = 'erf'

    def derivative(self, x, order):
        self._check_order(order)
        if order == 0:
            return special.erf(x)
        e = _TWO_OVER_SQRT_PI * np.exp(-np.square(x))
        if order == 1:
            return e
        if order == 2:
            return -2.0 * x * e
        return (4.0 * np.square(x) - 2.0) * e


def evaluate(fn, value, order=0):
    """``fn``'s derivative of ``order`` at a node, array or number."""
    if isinstance(value, tape.TapeNode):
        return tape.unary(fn, value, order)
    return fn.derivative(np.asarray(value, dtype=np.float64), order)


identity = ElementaryFunction()
exp = Exp()
tanh = Tanh()
erf = Erf()
