"""Convex penalties, their proximal maps and subgradient pairings.

Two penalties are supported, both separable over samples and weighted by
the grid spacing ``h``:

* :class:`ElasticNet` ``R(x) = a1 ||x||_1 + (a2 / 2) ||x||^2``
* :class:`SquaredL2` ``R(x) = ||x||^2 / 2`` (elastic net with ``a1=0, a2=1``)

The *subgradient pairing* ``min_{v in dR(x)} <v, x>`` defines the constraint
of the Ivanov problem equivalent to the analytic deep prior. For both
penalties the minimizing subgradient takes ``v_i = 0`` on zero samples.

The two-dimensional :func:`skewed_cone_penalty` is a non-convex-pairing
counterexample used only in demonstrations; it has no prox.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .operators import Signal

__all__ = [
    "ElasticNet",
    "SquaredL2",
    "soft_threshold",
    "penalty_value",
    "prox",
    "subgradient_pairing",
    "min_subgradient",
    "is_subgradient",
    "subgradient_distance",
    "conjugate_value",
    "skewed_cone_penalty",
    "skewed_cone_pairing",
]


@dataclass(frozen=True)
class ElasticNet:
    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise InvalidParameterError("elastic-net weights must be nonnegative")
        if not self.alpha1 + self.alpha2 > 0:
            raise InvalidParameterError("elastic-net weights must not both vanish")

    @property
    def strongly_convex(self):
        return self.alpha2 > 0


@dataclass(frozen=True)
class SquaredL2:
    alpha1 = 0.0
    alpha2 = 1.0
    strongly_convex = True


def _x(x):
    return x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)


def _h(x):
    return x.h if isinstance(x, Signal) else 1.0


def soft_threshold(z, thr):
    return np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)


def penalty_value(pen, x):
    s, h = _x(x), _h(x)
    return h * (pen.alpha1 * np.abs(s).sum() + 0.5 * pen.alpha2 * np.dot(s, s))


def prox(pen, z, step):
    """``argmin_x 1/2 ||x - z||^2 + step * R(x)``, componentwise."""
    if not step > 0:
        raise InvalidParameterError(f"prox step must be positive, got {step}")
    out = soft_threshold(_x(z), step * pen.alpha1) / (1.0 + step * pen.alpha2)
    return z.like(out) if isinstance(z, Signal) else out


def min_subgradient(pen, x):
    """Subgradient attaining the minimum of ``<v, x>`` over ``dR(x)``."""
    s = _x(x)
    v = pen.alpha1 * np.sign(s) + pen.alpha2 * s
    return x.like(v) if isinstance(x, Signal) else v


def subgradient_pairing(pen, x):
    """``min_{v in dR(x)} <v, x> = a1 ||x||_1 + a2 ||x||^2``."""
    s, h = _x(x), _h(x)
    return h * (pen.alpha1 * np.abs(s).sum() + pen.alpha2 * np.dot(s, s))


def subgradient_distance(pen, x, v):
    """Weighted distance from ``v`` to the set ``dR(x)``.

    Componentwise: ``|v_i - a1 sign(x_i) - a2 x_i|`` where ``x_i != 0`` and
    ``max(|v_i| - a1, 0)`` where ``x_i == 0``.
    """
    s, vv, h = _x(x), _x(v), _h(x)
    zero = s == 0.0
    d = np.where(zero,
                 np.maximum(np.abs(vv) - pen.alpha1, 0.0),
                 np.abs(vv - pen.alpha1 * np.sign(s) - pen.alpha2 * s))
    return float(np.sqrt(h * np.dot(d, d)))


def is_subgradient(pen, x, v, tol=1e-9):
    """Componentwise membership test ``v in dR(x)`` with absolute tolerance."""
    s, vv = _x(x), _x(v)
    zero = s == 0.0
    err = np.where(zero,
                   np.abs(vv) - pen.alpha1,
                   np.abs(vv - pen.alpha1 * np.sign(s) - pen.alpha2 * s))
    return bool(np.all(err <= tol))


def conjugate_value(pen, v):
    """Convex conjugate ``R*(v)``; requires ``alpha2 > 0``."""
    if not pen.alpha2 > 0:
        raise InvalidParameterError("conjugate is an indicator when alpha2 == 0")
    s, h = _x(v), _h(v)
    t = np.maximum(np.abs(s) - pen.alpha1, 0.0)
    return h * np.dot(t, t) / (2.0 * pen.alpha2)


# ---------------------------------------------------------- 2-d counterexample

_CONE_CENTRE = 5.0


def skewed_cone_penalty(x1, x2):
    """``3|x1 - 5|`` where that dominates ``|x2|``, else ``|x2|``.

    Minimum 0 at ``(5, 0)``; slopes differ by a factor 3 between the two
    branches, which makes its subgradient pairing non-convex.
    """
    a = 3.0 * np.abs(np.asarray(x1, float) - _CONE_CENTRE)
    b = np.abs(np.asarray(x2, float))
    return np.where(a >= b, a, b)[()]


def skewed_cone_pairing(x1, x2):
    """``min <v, x>`` over the subdifferential of :func:`skewed_cone_penalty`.

    Vectorized. The subdifferential is the convex hull of the active branch
    gradients, so the minimum of the linear map sits at one of them; on the
    branch boundary both branches compete.
    """
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    a = 3.0 * np.abs(x1 - _CONE_CENTRE)
    b = np.abs(x2)
    # gradient (3 sign(x1 - 5), 0); both signs are active at x1 == 5
    first = np.where(x1 == _CONE_CENTRE, -3.0 * np.abs(x1),
                     3.0 * np.sign(x1 - _CONE_CENTRE) * x1)
    # gradient (0, sign(x2)); both signs give 0 at x2 == 0
    second = b
    return np.where(a > b, first,
                    np.where(b > a, second, np.minimum(first, second)))[()]
