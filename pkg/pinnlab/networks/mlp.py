"""
Dense feed-forward network u_NN(t, x).

Inputs are the two coordinates (t, x), hidden layers apply the selected
activation after each affine map and the single output is linear. The
network is immutable; training produces new instances through
``with_parameters``.
"""
import logging
from dataclasses import dataclass

import numpy as np

from autodiff import tape as ops
from autodiff.functions import evaluate
from autodiff.jets import Jet4
from autodiff.tape import Tape
from core.exceptions import ConfigurationError, NumericalError, UsageError
from core.rng import seeded_generator

from .activations import get_activation

logger = logging.getLogger(__name__)

INPUT_WIDTH = 2
OUTPUT_WIDTH = 1


@dataclass(frozen=True, eq=False)
class LayerParams:
    weights: np.ndarray  # (N_l, N_{l-1})
    biases: np.ndarray   # (N_l,)

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        biases = np.array(self.biases, dtype=np.float64)
        if weights.ndim != 2 or biases.shape != (weights.shape[0],):
            raise ConfigurationError(
                f"layer shapes do not match: weights {weights.shape}, biases {biases.shape}")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(biases))):
            raise ConfigurationError("layer parameters must be finite")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'biases', biases)

    @property
    def size(self):
        return self.weights.size + self.biases.size


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple
    activation: str = 'gelu'

    def __post_init__(self):
        object.__setattr__(self, 'layers', tuple(self.layers))
        if not self.layers:
            raise ConfigurationError("a network needs at least one layer")
        get_activation(self.activation)

        sizes = self.layer_sizes
        if sizes[0] != INPUT_WIDTH or sizes[-1] != OUTPUT_WIDTH:
            raise ConfigurationError(
                f"layer sizes must start with {INPUT_WIDTH} and end with {OUTPUT_WIDTH}, got {sizes}")
        for previous, layer in zip(self.layers, self.layers[1:]):
            if layer.weights.shape[1] != previous.weights.shape[0]:
                raise ConfigurationError(
                    f"layer expects {layer.weights.shape[1]} inputs but receives "
                    f"{previous.weights.shape[0]}")

    @property
    def layer_sizes(self):
        return [self.layers[0].weights.shape[1]] + [layer.weights.shape[0] for layer in self.layers]

    @property
    def parameter_count(self):
        return sum(layer.size for layer in self.layers)

    @property
    def activation_function(self):
        return get_activation(self.activation)

    def parameters(self):
        """Flat vector: W1 (row-major), b1, W2, b2, ..."""
        chunks = []
        for layer in self.layers:
            chunks.append(layer.weights.ravel())
            chunks.append(layer.biases)
        return np.concatenate(chunks)

    def with_parameters(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.parameter_count,):
            raise UsageError(
                f"expected {self.parameter_count} parameters, got shape {flat.shape}")
        layers, offset = [], 0
        for layer in self.layers:
            rows, cols = layer.weights.shape
            weights = flat[offset:offset + rows * cols].reshape(rows, cols)
            offset += rows * cols
            biases = flat[offset:offset + rows]
            offset += rows
            layers.append(LayerParams(weights, biases))
        return Network(tuple(layers), self.activation)

    def on_tape(self, tape):
        return TapedNetwork(self, tape)

    def same_as(self, other):
        """Bitwise equality of architecture and parameters."""
        return (self.activation == other.activation
                and self.layer_sizes == other.layer_sizes
                and self.parameters().tobytes() == other.parameters().tobytes())


def init_glorot(layer_sizes, activation='gelu', seed=0):
    """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    layer_sizes = [int(size) for size in layer_sizes]
    if len(layer_sizes) < 2:
        raise ConfigurationError(f"need at least input and output sizes, got {layer_sizes}")
    if any(size < 1 for size in layer_sizes):
        raise ConfigurationError(f"layer sizes must be positive, got {layer_sizes}")

    rng = seeded_generator(seed, 'glorot-init')
    layers = []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(LayerParams(weights, np.zeros(fan_out)))

    net = Network(tuple(layers), activation)
    logger.debug(f"Initialized {layer_sizes} {activation} network, {net.parameter_count} parameters")
    return net


def _propagate(weights, biases, fn, inputs):
    a = inputs
    last = len(weights) - 1
    for index, (w, b) in enumerate(zip(weights, biases)):
        z = ops.add(ops.linear(a, w), b)
        a = z if index == last else evaluate(fn, z, 0)
    return a


def _propagate_jet(weights, biases, fn, jet):
    last = len(weights) - 1
    for index, (w, b) in enumerate(zip(weights, biases)):
        z = Jet4(ops.add(ops.linear(jet.val, w), b),
                 ops.linear(jet.dt, w),
                 ops.linear(jet.dx, w),
                 ops.linear(jet.dxx, w))
        jet = z if index == last else z.apply(fn)
    return jet


def _input_jet(t, x):
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if t.shape != x.shape:
        raise UsageError(f"t and x must have the same shape, got {t.shape} and {x.shape}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
        raise UsageError("network inputs must be finite")
    rows = t.size
    val = np.stack([t.ravel(), x.ravel()], axis=1)
    dt = np.tile([1.0, 0.0], (rows, 1))
    dx = np.tile([0.0, 1.0], (rows, 1))
    return Jet4(val, dt, dx, np.zeros((rows, 2))), t.shape


def _output_jet(jet, shape):
    out = Jet4(*(ops.reshape(component, shape) for component in jet.components()))
    if not out.is_finite():
        raise NumericalError("arithmetic overflow in the network's forward pass")
    return out


class TapedNetwork:
    """A network whose weights and biases are parameter leaves of one tape."""

    def __init__(self, network, tape):
        self.network = network
        self.tape = tape
        self.weights, self.biases = [], []
        for number, layer in enumerate(network.layers, start=1):
            self.weights.append(tape.parameter(layer.weights, name=f"W{number}"))
            self.biases.append(tape.parameter(layer.biases, name=f"b{number}"))

    @property
    def leaves(self):
        """Parameter leaves in the order of ``Network.parameters``."""
        ordered = []
        for w, b in zip(self.weights, self.biases):
            ordered.extend((w, b))
        return ordered

    def values(self, t, x):
        """Recorded plain forward pass; a node shaped like ``t``."""
        jet, shape = _input_jet(t, x)
        out = _propagate(self.weights, self.biases, self.network.activation_function, jet.val)
        return ops.reshape(out, shape)

    def jet(self, t, x):
        """Recorded jet of the output: u, u_t, u_x and u_xx at every point."""
        jet, shape = _input_jet(t, x)
        out = _propagate_jet(self.weights, self.biases, self.network.activation_function, jet)
        return _output_jet(out, shape)

    def flat_gradient(self, root):
        self.tape.backward(root)
        return np.concatenate([self.tape.adjoint_of(leaf).ravel() for leaf in self.leaves])


def forward(net, z):
    """Z_L for one input (t, x) or a batch of rows; output has one column."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 0 or z.shape[-1] != INPUT_WIDTH or z.ndim > 2:
        raise UsageError(f"network input must have {INPUT_WIDTH} columns, got shape {z.shape}")
    single = z.ndim == 1
    weights = [layer.weights for layer in net.layers]
    biases = [layer.biases for layer in net.layers]
    out = _propagate(weights, biases, net.activation_function, z.reshape(-1, INPUT_WIDTH))
    return out[0] if single else out


def predict(net, t, x):
    """Network output on arrays of t and x, shaped like them."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    z = np.stack([t.ravel(), x.ravel()], axis=1)
    return forward(net, z).reshape(t.shape)


def forward_jet(net, t, x, tape=None):
    """Output jet recorded on ``tape`` (a fresh one when omitted)."""
    return net.on_tape(tape if tape is not None else Tape()).jet(t, x)


def evaluate_jet(net, t, x):
    """Untaped output jet, components as plain arrays."""
    jet, shape = _input_jet(t, x)
    weights = [layer.weights for layer in net.layers]
    biases = [layer.biases for layer in net.layers]
    out = _propagate_jet(weights, biases, net.activation_function, jet)
    return _output_jet(out, shape)
