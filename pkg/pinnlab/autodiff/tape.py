"""
Reverse-mode tape.

Nodes hold float64 arrays (a 0-d array is the scalar case) and are appended
in evaluation order, so the node list is already topologically sorted. Each
node keeps its parents together with a vector-Jacobian product closure; one
reverse sweep from a scalar root leaves d(root)/d(node) in every node's
``adjoint``.

The module-level operations accept nodes, numbers and arrays alike. When no
operand is a node they just return the numpy result, which lets the same
expression code run taped or untaped.
"""
import logging

import numpy as np

from core.exceptions import SingularityError, UsageError

logger = logging.getLogger(__name__)

_PLAIN_TYPES = (int, float, np.integer, np.floating, np.ndarray)


def _value(operand):
    if isinstance(operand, TapeNode):
        return operand.value
    return np.asarray(operand, dtype=np.float64)


def _tape_of(*operands):
    tape = None
    for operand in operands:
        if isinstance(operand, TapeNode):
            if tape is None:
                tape = operand.tape
            elif operand.tape is not tape:
                raise UsageError("operands belong to different tapes")
    return tape


def _unbroadcast(grad, shape):
    """Sum a broadcast adjoint back down to the operand's shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _supported(other):
    return isinstance(other, (TapeNode,) + _PLAIN_TYPES)


class TapeNode:
    __slots__ = ('tape', 'index', 'value', 'adjoint', 'parents', 'op', 'name')

    # numpy must hand mixed expressions back to us instead of building object arrays
    __array_ufunc__ = None

    def __init__(self, tape, index, value, parents=(), op='leaf', name=None):
        self.tape = tape
        self.index = index
        self.value = value
        self.adjoint = None
        self.parents = parents
        self.op = op
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        label = self.name or self.op
        return f"TapeNode({label}, shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other) if _supported(other) else NotImplemented

    def __radd__(self, other):
        return add(other, self) if _supported(other) else NotImplemented

    def __sub__(self, other):
        return sub(self, other) if _supported(other) else NotImplemented

    def __rsub__(self, other):
        return sub(other, self) if _supported(other) else NotImplemented

    def __mul__(self, other):
        return mul(self, other) if _supported(other) else NotImplemented

    def __rmul__(self, other):
        return mul(other, self) if _supported(other) else NotImplemented

    def __truediv__(self, other):
        return div(self, other) if _supported(other) else NotImplemented

    def __rtruediv__(self, other):
        return div(other, self) if _supported(other) else NotImplemented

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def sum(self):
        return total(self)

    def mean(self):
        return mean(self)


class Tape:
    """One recording of an evaluation. Not shared between threads."""

    def __init__(self):
        self.nodes = []
        self.parameters = []

    def __len__(self):
        return len(self.nodes)

    def record(self, value, parents, op):
        node = TapeNode(self, len(self.nodes), value, tuple(parents), op)
        self.nodes.append(node)
        return node

    def leaf(self, value, name=None):
        node = self.record(np.array(value, dtype=np.float64), (), 'leaf')
        node.name = name
        return node

    def parameter(self, value, name=None):
        node = self.leaf(value, name=name)
        self.parameters.append(node)
        return node

    def backward(self, root):
        """Reverse sweep seeded with 1 at ``root``; adjoints are reset first."""
        if not self.nodes:
            raise UsageError("reverse sweep on an empty tape")
        if not isinstance(root, TapeNode) or root.tape is not self:
            raise UsageError("root is not recorded on this tape")
        if root.value.size != 1:
            raise UsageError(f"root must be scalar, got shape {root.value.shape}")

        for node in self.nodes:
            node.adjoint = None
        root.adjoint = np.ones_like(root.value)

        for node in reversed(self.nodes[:root.index + 1]):
            if node.adjoint is None:
                continue
            for parent, vjp in node.parents:
                contribution = vjp(node.adjoint)
                if parent.adjoint is None:
                    parent.adjoint = contribution
                else:
                    parent.adjoint = parent.adjoint + contribution

    def adjoint_of(self, node):
        if node.adjoint is None:
            return np.zeros_like(node.value)
        return node.adjoint

    def grad(self, root):
        """d(root)/d(parameter) for every registered parameter leaf."""
        self.backward(root)
        return {leaf: self.adjoint_of(leaf) for leaf in self.parameters}


def grad(root):
    if not isinstance(root, TapeNode):
        raise UsageError("grad() needs a recorded root node")
    return root.tape.grad(root)


def add(a, b):
    av, bv = _value(a), _value(b)
    out = av + bv
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents = []
    if isinstance(a, TapeNode):
        parents.append((a, lambda g: _unbroadcast(g, av.shape)))
    if isinstance(b, TapeNode):
        parents.append((b, lambda g: _unbroadcast(g, bv.shape)))
    return tape.record(out, parents, 'add')


def sub(a, b):
    av, bv = _value(a), _value(b)
    out = av - bv
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents = []
    if isinstance(a, TapeNode):
        parents.append((a, lambda g: _unbroadcast(g, av.shape)))
    if isinstance(b, TapeNode):
        parents.append((b, lambda g: _unbroadcast(-g, bv.shape)))
    return tape.record(out, parents, 'sub')


def neg(a):
    av = _value(a)
    if not isinstance(a, TapeNode):
        return -av
    return a.tape.record(-av, [(a, lambda g: -g)], 'neg')


def mul(a, b):
    av, bv = _value(a), _value(b)
    out = av * bv
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents = []
    if isinstance(a, TapeNode):
        parents.append((a, lambda g: _unbroadcast(g * bv, av.shape)))
    if isinstance(b, TapeNode):
        parents.append((b, lambda g: _unbroadcast(g * av, bv.shape)))
    return tape.record(out, parents, 'mul')


def div(a, b):
    av, bv = _value(a), _value(b)
    if np.any(bv == 0):
        raise SingularityError("division by an operand with zero value")
    out = av / bv
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents = []
    if isinstance(a, TapeNode):
        parents.append((a, lambda g: _unbroadcast(g / bv, av.shape)))
    if isinstance(b, TapeNode):
        parents.append((b, lambda g: _unbroadcast(-g * out / bv, bv.shape)))
    return tape.record(out, parents, 'div')


def power(a, exponent):
    if isinstance(exponent, bool) or not isinstance(exponent, (int, np.integer)) or exponent < 0:
        raise UsageError(f"only non-negative integer powers are supported, got {exponent!r}")
    exponent = int(exponent)
    av = _value(a)
    out = av ** exponent
    if not isinstance(a, TapeNode) or exponent == 0:
        return out
    return a.tape.record(
        out, [(a, lambda g: g * exponent * av ** (exponent - 1))], f'pow{exponent}')


def linear(a, w):
    """``a @ w.T`` for a batch (rows) or a single vector ``a``."""
    av, wv = _value(a), _value(w)
    out = np.matmul(av, wv.T)
    tape = _tape_of(a, w)
    if tape is None:
        return out
    parents = []
    if isinstance(a, TapeNode):
        parents.append((a, lambda g: np.matmul(g, wv)))
    if isinstance(w, TapeNode):
        if av.ndim == 1:
            parents.append((w, lambda g: np.outer(g, av)))
        else:
            parents.append((w, lambda g: np.matmul(g.T, av)))
    return tape.record(out, parents, 'linear')


def total(a):
    av = _value(a)
    out = np.sum(av)
    if not isinstance(a, TapeNode):
        return out
    return a.tape.record(np.asarray(out), [(a, lambda g: np.full(av.shape, g))], 'sum')


def mean(a):
    av = _value(a)
    if av.size == 0:
        raise UsageError("mean of an empty operand")
    out = np.mean(av)
    if not isinstance(a, TapeNode):
        return out
    size = av.size
    return a.tape.record(np.asarray(out), [(a, lambda g: np.full(av.shape, g / size))], 'mean')


def reshape(a, shape):
    av = _value(a)
    out = av.reshape(shape)
    if not isinstance(a, TapeNode):
        return out
    return a.tape.record(out, [(a, lambda g: g.reshape(av.shape))], 'reshape')


def unary(fn, a, order=0):
    """The ``order``-th derivative of the elementary function ``fn`` at ``a``."""
    av = _value(a)
    out = fn.derivative(av, order)
    if not isinstance(a, TapeNode):
        return out
    return a.tape.record(
        out, [(a, lambda g: g * fn.derivative(av, order + 1))], f'{fn.name}^({order})')
