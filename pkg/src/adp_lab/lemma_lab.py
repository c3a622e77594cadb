"""Constructive checks around the reachable set of the inner problem.

A point ``xhat`` is the inner minimizer ``x(B)`` for *some* operator ``B``
iff some ``v in dR(xhat)`` satisfies ``alpha <v, xhat> <= ||y||^2 / 4``.
This module builds the witnessing rank-two operator, certifies
infeasibility, verifies minimizers, relates the analytic-deep-prior
parameter to the equivalent Tikhonov parameter, and exhibits a penalty
whose feasible set is not convex.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    InconsistentInputError,
    InfeasibleError,
    InvalidInputError,
    InvalidSubgradientError,
)
from .operators import LinearOp, Signal
from .penalties import (
    is_subgradient,
    skewed_cone_pairing,
    skewed_cone_penalty,
    subgradient_distance,
    subgradient_pairing,
)
from .variational import IstaConfig, solve_inner

__all__ = [
    "RankTwoOperator",
    "Feasibility",
    "MinimizerCheck",
    "NonconvexDemo",
    "check_feasibility",
    "feasibility_check",
    "construct_B",
    "RankTwoB",
    "construct_rank_two_operator",
    "verify_minimizer",
    "equivalent_tikhonov_parameter",
    "nonconvex_feasible_set_demo",
]


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    margin: float


@dataclass(frozen=True)
class MinimizerCheck:
    residual: float
    ista_distance: float


@dataclass(frozen=True, eq=False)
class RankTwoOperator:
    """``B x = (s1 <x, xhat> + s2 <x, v_perp>) y``."""

    xhat: Signal
    v_perp: Signal
    y: Signal
    sigma1: float
    sigma2: float

    def as_operator(self):
        h = self.xhat.h
        row = h * (self.sigma1 * self.xhat.samples + self.sigma2 * self.v_perp.samples)
        M = np.outer(self.y.samples, row)
        return LinearOp(M, h, self.y.h, self.xhat.interval, self.y.interval)

    def __call__(self, x):
        c = self.sigma1 * self.xhat.inner(x) + self.sigma2 * self.v_perp.inner(x)
        return self.y.like(c * self.y.samples)


def _nonzero_data(y):
    ny2 = y.norm() ** 2
    if ny2 == 0.0:
        raise InvalidInputError("data y must be nonzero")
    return ny2


def check_feasibility(xhat, pen, alpha, y):
    """Compare ``alpha * pairing(xhat)`` with ``||y||^2 / 4``.

    ``margin = ||y||^2 / 4 - alpha * pairing(xhat)``; feasible iff ``margin >= 0``.
    """
    ny2 = _nonzero_data(y)
    margin = 0.25 * ny2 - alpha * subgradient_pairing(pen, xhat)
    return Feasibility(bool(margin >= 0.0), float(margin))


def construct_rank_two_operator(xhat, v, y, alpha, pen, rtol=1e-12):
    """Operator ``B`` with ``-B*(B xhat - y) = alpha v``, hence ``xhat = x(B)``.

    Splits ``v = mu xhat + v_perp`` and solves the two scalar equations for
    ``(sigma1, sigma2)``; the smaller root of the quadratic for ``sigma1`` is
    used, which keeps ``1 - sigma1 ||xhat||^2 >= 1/2`` so ``sigma2`` is always
    defined. For ``xhat = 0`` the zero operator is returned (``0`` is a
    subgradient of the elastic net at ``0``).

    Raises :class:`InfeasibleError` if ``alpha <v, xhat> > ||y||^2 / 4``:
    then no linear operator has ``xhat`` as its inner minimizer.
    """
    ny2 = _nonzero_data(y)
    if not is_subgradient(pen, xhat, v):
        raise InvalidSubgradientError("v is not a subgradient of the penalty at xhat")
    zero = xhat.like(np.zeros(xhat.n))
    nx2 = xhat.norm() ** 2
    if nx2 == 0.0:
        return RankTwoOperator(xhat, zero, y, 0.0, 0.0)
    pair = xhat.inner(v)
    if alpha * pair > 0.25 * ny2 * (1.0 + rtol):
        raise InfeasibleError(
            f"alpha <v, xhat> = {alpha * pair:.6g} exceeds ||y||^2/4 = {0.25 * ny2:.6g}; "
            "no linear operator makes xhat a minimizer")
    mu = pair / nx2
    v_perp = xhat.like(v.samples - mu * xhat.samples)
    disc = max(0.25 / nx2**2 - alpha * mu / (nx2 * ny2), 0.0)
    sigma1 = 0.5 / nx2 - np.sqrt(disc)
    denom = 1.0 - sigma1 * nx2
    if abs(denom) < 1e-14:
        sigma1 = 0.5 / nx2 + np.sqrt(disc)
        denom = 1.0 - sigma1 * nx2
    sigma2 = alpha / (ny2 * denom)
    return RankTwoOperator(xhat, v_perp, y, float(sigma1), float(sigma2))


def verify_minimizer(B, xhat, y, pen, alpha, cfg=None):
    """Optimality residual and ISTA recovery distance for ``xhat`` under ``B``.

    ``residual`` is the distance of ``-B*(B xhat - y) / alpha`` to ``dR(xhat)``;
    ``ista_distance`` is ``||x(B) - xhat||`` with ``x(B)`` from ISTA.
    """
    if isinstance(B, RankTwoOperator):
        B = B.as_operator()
    u = -(B.adjoint_matrix() @ (B.matrix @ xhat.samples - y.samples)) / alpha
    residual = subgradient_distance(pen, xhat, xhat.like(u))
    rep = solve_inner(B, y, pen, alpha, cfg or IstaConfig(tol=1e-12))
    dist = xhat.like(rep.final.samples - xhat.samples).norm()
    return MinimizerCheck(float(residual), float(dist))


def equivalent_tikhonov_parameter(A, y, x_adp, rtol=1e-12):
    """Tikhonov weight ``a`` whose solution of ``(A*A + a I) x = A* y`` has the norm of ``x_adp``.

    The norm of the Tikhonov solution decreases monotonically in ``a``; the
    matching value is found by Brent's method on ``log a``. Returns ``0.0``
    when ``x_adp`` is as long as the minimum-norm least-squares solution.
    Raises :class:`InconsistentInputError` if ``x_adp`` is longer than that.
    """
    G = A.gram()
    b = A.adjoint_matrix() @ y.samples
    lam, V = np.linalg.eigh(G)
    c = V.T @ b
    h = A.h_in
    keep = lam > lam[-1] * G.shape[0] * np.finfo(float).eps
    target = x_adp.norm()

    def norm_at(a):
        if a == 0.0:
            coef = c[keep] / lam[keep]
        else:
            coef = c / (lam + a)
        return float(np.sqrt(h * coef @ coef))

    n0 = norm_at(0.0)
    if target >= n0 * (1.0 - 1e-10):
        if target > n0 * (1.0 + 1e-8):
            raise InconsistentInputError(
                f"||x_adp|| = {target:.6g} exceeds the least-squares norm {n0:.6g}")
        return 0.0
    if target == 0.0:
        raise InconsistentInputError("x_adp = 0 corresponds to an infinite Tikhonov weight")
    hi = max(lam[-1], 1e-300)
    while norm_at(hi) > target:
        hi *= 10.0
    lo = hi
    while norm_at(lo) < target:
        lo /= 10.0
        if lo < 1e-300:
            return 0.0
    f = lambda s: np.log(norm_at(np.exp(s))) - np.log(target)  # noqa: E731
    s = brentq(f, np.log(lo), np.log(hi), xtol=1e-14, rtol=rtol, maxiter=500)
    return float(np.exp(s))


@dataclass(frozen=True)
class NonconvexDemo:
    x_a: tuple
    x_b: tuple
    midpoint: tuple
    pairing_a: float
    pairing_b: float
    pairing_mid: float
    level: float

    @property
    def margin(self):
        return self.pairing_mid - self.level


# probe points on the two branches of the skewed cone, inside [0, 10]^2
_PROBE_A = (5.2, 0.0)
_PROBE_B = (8.0, 9.5)


def nonconvex_feasible_set_demo(x_a=_PROBE_A, x_b=_PROBE_B):
    """Two feasible points of ``{pairing <= c}`` whose midpoint is infeasible.

    The level ``c`` is placed halfway between the larger endpoint pairing and
    the midpoint pairing, so both separations are strict.
    """
    mid = tuple(0.5 * (a + b) for a, b in zip(x_a, x_b))
    pa = float(skewed_cone_pairing(*x_a))
    pb = float(skewed_cone_pairing(*x_b))
    pm = float(skewed_cone_pairing(*mid))
    if not pm > max(pa, pb):
        raise InvalidInputError("midpoint pairing does not exceed the endpoints'; pick other probes")
    level = 0.5 * (max(pa, pb) + pm)
    return NonconvexDemo(tuple(x_a), tuple(x_b), mid, pa, pb, pm, level)


def cone_value_at_minimum():
    return float(skewed_cone_penalty(5.0, 0.0))


feasibility_check = check_feasibility
construct_B = construct_rank_two_operator
RankTwoB = RankTwoOperator
