"""
Truncated Taylor jets in (t, x).

A Jet4 carries a value together with its first derivative in t and its first
and second derivatives in x. Components may be numbers, float64 arrays or
tape nodes, so the same arithmetic gives pure forward mode or a recording
that a reverse sweep can differentiate with respect to network parameters.
Mixed derivatives (u_tt, u_tx) are not carried.
"""
import numpy as np

from core.exceptions import DomainError, SingularityError, UsageError

from . import tape
from .functions import evaluate

_SCALAR_TYPES = (int, float, np.integer, np.floating, np.ndarray, tape.TapeNode)


def _values(component):
    if isinstance(component, tape.TapeNode):
        return component.value
    return np.asarray(component, dtype=np.float64)


class Jet4:
    __slots__ = ('val', 'dt', 'dx', 'dxx')

    __array_ufunc__ = None

    def __init__(self, val, dt=0.0, dx=0.0, dxx=0.0):
        self.val = val
        self.dt = dt
        self.dx = dx
        self.dxx = dxx

    @classmethod
    def constant(cls, value):
        return cls(value, 0.0, 0.0, 0.0)

    def components(self):
        return self.val, self.dt, self.dx, self.dxx

    def values(self):
        """The four components as plain arrays (node values when taped)."""
        return tuple(_values(c) for c in self.components())

    def is_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.values())

    def __repr__(self):
        parts = ', '.join(np.array2string(v, precision=6) for v in self.values())
        return f"Jet4({parts})"

    def __add__(self, other):
        if isinstance(other, Jet4):
            return Jet4(self.val + other.val, self.dt + other.dt,
                        self.dx + other.dx, self.dxx + other.dxx)
        if isinstance(other, _SCALAR_TYPES):
            return Jet4(self.val + other, self.dt, self.dx, self.dxx)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet4(-self.val, -self.dt, -self.dx, -self.dxx)

    def __sub__(self, other):
        if isinstance(other, Jet4):
            return Jet4(self.val - other.val, self.dt - other.dt,
                        self.dx - other.dx, self.dxx - other.dxx)
        if isinstance(other, _SCALAR_TYPES):
            return Jet4(self.val - other, self.dt, self.dx, self.dxx)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _SCALAR_TYPES):
            return Jet4(other - self.val, -self.dt, -self.dx, -self.dxx)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet4):
            return Jet4(
                self.val * other.val,
                self.dt * other.val + self.val * other.dt,
                self.dx * other.val + self.val * other.dx,
                self.dxx * other.val + 2.0 * self.dx * other.dx + self.val * other.dxx,
            )
        if isinstance(other, _SCALAR_TYPES):
            return Jet4(self.val * other, self.dt * other, self.dx * other, self.dxx * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet4):
            if np.any(_values(other.val) == 0):
                raise SingularityError("division by a jet with zero value")
            q = self.val / other.val
            q_dx = (self.dx - q * other.dx) / other.val
            return Jet4(
                q,
                (self.dt - q * other.dt) / other.val,
                q_dx,
                (self.dxx - 2.0 * q_dx * other.dx - q * other.dxx) / other.val,
            )
        if isinstance(other, _SCALAR_TYPES):
            if np.any(_values(other) == 0):
                raise SingularityError("division of a jet by zero")
            return Jet4(self.val / other, self.dt / other, self.dx / other, self.dxx / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _SCALAR_TYPES):
            return Jet4.constant(other) / self
        return NotImplemented

    def __pow__(self, exponent):
        if isinstance(exponent, bool) or not isinstance(exponent, (int, np.integer)):
            raise UsageError(f"jets support integer powers only, got {exponent!r}")
        if exponent < 0:
            return 1.0 / self ** (-exponent)
        result = Jet4.constant(1.0)
        for _ in range(int(exponent)):
            result = result * self
        return result

    def apply(self, fn):
        """Chain a unary elementary function through the jet."""
        g0 = evaluate(fn, self.val, 0)
        g1 = evaluate(fn, self.val, 1)
        g2 = evaluate(fn, self.val, 2)
        return Jet4(
            g0,
            g1 * self.dt,
            g1 * self.dx,
            g2 * self.dx * self.dx + g1 * self.dxx,
        )


def jet_seed(t, x):
    """Seeds for the two coordinates: (t, 1, 0, 0) and (x, 0, 1, 0)."""
    tv = np.asarray(t, dtype=np.float64)
    xv = np.asarray(x, dtype=np.float64)
    if not (np.all(np.isfinite(tv)) and np.all(np.isfinite(xv))):
        raise DomainError(f"jet seeds need finite coordinates, got t={t!r}, x={x!r}")
    if tv.ndim == 0 and xv.ndim == 0:
        return Jet4(float(tv), 1.0, 0.0, 0.0), Jet4(float(xv), 0.0, 1.0, 0.0)
    tv, xv = np.broadcast_arrays(tv, xv)
    ones, zeros = np.ones_like(tv), np.zeros_like(tv)
    return Jet4(tv.copy(), ones, zeros, zeros), Jet4(xv.copy(), zeros, ones, zeros)
