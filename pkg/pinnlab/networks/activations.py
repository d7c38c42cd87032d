"""
Hidden-layer activations.

GELU is the exact x * Phi(x) with Phi the standard normal CDF; its second
derivative feeds u_xx, so the tanh approximation is not used.
"""
import math

import numpy as np
from scipy import special

from autodiff.functions import ElementaryFunction, tanh
from core.exceptions import ConfigurationError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _normal_pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


class Gelu(ElementaryFunction):
    name = 'gelu'

    def derivative(self, x, order):
        self._check_order(order)
        x = np.asarray(x, dtype=np.float64)
        if order == 0:
            return x * special.ndtr(x)
        if order == 1:
            return special.ndtr(x) + x * _normal_pdf(x)
        pdf = _normal_pdf(x)
        if order == 2:
            return pdf * (2.0 - x * x)
        return pdf * (x * x * x - 4.0 * x)


class Sigmoid(ElementaryFunction):
    name = 'sigmoid'

    def derivative(self, x, order):
        self._check_order(order)
        s = special.expit(x)
        if order == 0:
            return s
        d1 = s * (1.0 - s)
        if order == 1:
            return d1
        if order == 2:
            return d1 * (1.0 - 2.0 * s)
        return d1 * (1.0 - 6.0 * s + 6.0 * s * s)


class Relu(ElementaryFunction):
    name = 'relu'

    def derivative(self, x, order):
        self._check_order(order)
        x = np.asarray(x, dtype=np.float64)
        if order == 0:
            return np.maximum(x, 0.0)
        if order == 1:
            return (x > 0).astype(np.float64)
        return np.zeros_like(x)


GELU = Gelu()
SIGMOID = Sigmoid()
RELU = Relu()

ACTIVATIONS = {
    'gelu': GELU,
    'tanh': tanh,
    'sigmoid': SIGMOID,
    'relu': RELU,
}


def get_activation(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        choices = ', '.join(sorted(ACTIVATIONS))
        raise ConfigurationError(f"unknown activation {name!r}; expected one of {choices}") from None


def gelu(x):
    return GELU.derivative(x, 0)


def gelu_prime(x):
    return GELU.derivative(x, 1)


def gelu_second(x):
    return GELU.derivative(x, 2)
