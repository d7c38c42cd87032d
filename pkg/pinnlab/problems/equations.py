"""
Nonlinear parabolic problems of the form

    u_t = m u_xx + n u + o u^p + eta(x, t, u, u_x),   a < x < b, 0 < t <= T

with u(x, 0) = f(x), u(a, t) = g(t), u(b, t) = h(t).

Exact solutions are written with jet-aware primitives, so they can be
evaluated on numbers, arrays or jets; pushing jets through them gives the
derivatives the residual needs.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from autodiff import functions
from autodiff.jets import Jet4, jet_seed
from autodiff.tape import TapeNode
from core.exceptions import ConfigurationError, NumericalError, SingularityError, UsageError

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.1

# Allen-Cahn travelling wave as printed; 0.3536 rounds 1/(2 sqrt 2)
WAVE_NUMBER = 0.3536
WAVE_SPEED = 0.75

_SINGULAR = 1e-12


def no_source(x, t, u, u_x):
    return 0.0


def _value(component):
    if isinstance(component, Jet4):
        component = component.val
    if isinstance(component, TapeNode):
        return component.value
    return np.asarray(component, dtype=np.float64)


@dataclass(frozen=True)
class ParabolicPde:
    m: float
    n: float
    o: float
    p: int
    f: Callable
    g: Callable
    h: Callable
    a: float = 0.0
    b: float = 1.0
    T: float = 1.0
    eta: Callable = no_source
    exact: Optional[Callable] = None
    name: str = 'custom'

    def __post_init__(self):
        if not self.a < self.b:
            raise ConfigurationError(f"spatial interval needs a < b, got [{self.a}, {self.b}]")
        if not self.T > 0:
            raise ConfigurationError(f"time horizon must be positive, got {self.T}")
        if isinstance(self.p, bool) or not isinstance(self.p, (int, np.integer)) or self.p < 0:
            raise ConfigurationError(f"exponent p must be a non-negative integer, got {self.p!r}")

    @property
    def coefficients(self):
        return self.m, self.n, self.o, self.p

    def consistency_error(self, count=101):
        """
        Largest gap between the exact solution and the initial/boundary data,
        and between the data at the two corners (t = 0, x = a or b).
        """
        corners = max(abs(float(self.f(self.a)) - float(self.g(0.0))),
                      abs(float(self.f(self.b)) - float(self.h(0.0))))
        if self.exact is None:
            return corners
        x = np.linspace(self.a, self.b, count)
        t = np.linspace(0.0, self.T, count)
        gaps = [
            np.abs(_value(self.exact(x, 0.0)) - _value(self.f(x))),
            np.abs(_value(self.exact(self.a, t)) - _value(self.g(t))),
            np.abs(_value(self.exact(self.b, t)) - _value(self.h(t))),
        ]
        return max(corners, *(float(np.max(gap)) for gap in gaps))


def _nws_denominator(lam, t):
    return -2.0 + 3.0 * lam * (1.0 - functions.exp(2.0 * t))


def exact_nws(lam, x, t):
    """-2 lam e^{2t} / (-2 + 3 lam (1 - e^{2t})), the same for every x."""
    den = _nws_denominator(lam, t)
    if np.any(np.abs(_value(den)) < _SINGULAR):
        raise SingularityError(f"exact NWS solution is singular for lambda={lam} at t={t!r}")
    return -2.0 * lam * functions.exp(2.0 * t) / den + 0.0 * x


@dataclass(frozen=True)
class NwsParams:
    lam: float = DEFAULT_LAMBDA


def nws_problem(params=None, T=1.0):
    """u_t = u_xx + 2u - 3u^2 on [0, 1] x (0, T] with u(x, 0) = lambda."""
    params = params or NwsParams()
    lam = float(params.lam)
    if not math.isfinite(lam):
        raise ConfigurationError(f"lambda must be finite, got {params.lam!r}")

    # the denominator is monotone in t and equals -2 at t = 0
    end = float(_nws_denominator(lam, float(T)))
    if not end < -_SINGULAR:
        raise ConfigurationError(
            f"lambda={lam} makes the exact solution singular on [0, {T}]")

    def exact(x, t):
        return exact_nws(lam, x, t)

    def boundary(t):
        return exact_nws(lam, 0.0, t)

    def initial(x):
        return lam + 0.0 * np.asarray(x, dtype=np.float64)

    return ParabolicPde(
        m=1.0, n=2.0, o=-3.0, p=2,
        f=initial, g=boundary, h=boundary,
        a=0.0, b=1.0, T=float(T),
        exact=exact, name='nws',
    )


def exact_allen_cahn(x, t):
    return -0.5 + 0.5 * functions.tanh(WAVE_NUMBER * x - WAVE_SPEED * t)


def allen_cahn_problem(T=1.0):
    """u_t = u_xx + u - u^3 on [0, 1] x (0, T] with a travelling tanh front."""

    def initial(x):
        return exact_allen_cahn(x, 0.0)

    def left(t):
        return exact_allen_cahn(0.0, t)

    def right(t):
        return exact_allen_cahn(1.0, t)

    return ParabolicPde(
        m=1.0, n=1.0, o=-1.0, p=3,
        f=initial, g=left, h=right,
        a=0.0, b=1.0, T=float(T),
        exact=exact_allen_cahn, name='allen-cahn',
    )


def residual(pde, jet, x, t):
    """
    u_t - m u_xx - n u - o u^p - eta(x, t, u, u_x) from the jet of u at (x, t).

    Jet components may be taped; the result is then recorded as well.
    """
    if not jet.is_finite():
        raise NumericalError(f"non-finite solution jet in the {pde.name} residual")
    u = jet.val
    u_p = 1.0
    for _ in range(pde.p):
        u_p = u_p * u
    source = pde.eta(x, t, u, jet.dx)
    return jet.dt - pde.m * jet.dxx - pde.n * u - pde.o * u_p - source


def exact_residual_probe(pde, points):
    """Max |residual| of the exact solution over (t, x) points."""
    if pde.exact is None:
        raise UsageError(f"problem {pde.name!r} has no exact solution to probe")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not len(points):
        return 0.0
    t_jet, x_jet = jet_seed(points[:, 0], points[:, 1])
    u = pde.exact(x_jet, t_jet)
    if not isinstance(u, Jet4):
        u = Jet4.constant(u)
    values = _value(residual(pde, u, points[:, 1], points[:, 0]))
    worst = float(np.max(np.abs(values)))
    logger.debug(f"Exact residual of {pde.name} over {len(points)} points: {worst:.3e}")
    return worst


PROBLEMS = ('nws', 'allen-cahn')


def get_problem(name, lam=DEFAULT_LAMBDA):
    if name == 'nws':
        return nws_problem(NwsParams(lam))
    if name == 'allen-cahn':
        return allen_cahn_problem()
    raise ConfigurationError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEMS)}")
