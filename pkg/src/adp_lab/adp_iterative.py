"""Gradient descent over the operator of the inner problem.

The outer loss is ``L(B) = 1/2 ||A x(B) - y||^2 (+ beta ||B - A||_F^2)`` with
``x(B)`` the inner minimizer from :func:`adp_lab.variational.solve_inner`.
Its gradient with respect to the entries of ``B`` comes from the implicit
function theorem applied to the optimality system restricted to the support
of ``x(B)`` (the support and signs are frozen; this is exact away from
kinks, where the support is locally constant).

:func:`adp_beta_param_solve` runs the same descent over a convolution kernel
``g`` with a discrete ``W^{1,2}`` proximity term to the reference kernel.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivergenceError,
    InvalidParameterError,
    InvalidSubgradientError,
    SingularSystemError,
)
from .operators import KernelParam, convolution_operator
from .penalties import is_subgradient, penalty_value
from .variational import (
    SUPPORT_THRESHOLD,
    AdpProblem,
    IstaConfig,
    SolveReport,
    StopReason,
    solve_inner,
)

__all__ = [
    "EarlyStop",
    "IftConfig",
    "KernelParam",
    "ift_gradient",
    "outer_loss",
    "adp_ift_solve",
    "adp_beta_param_solve",
    "kernel_data_gradient",
    "sobolev_sq_norm",
    "bregman_distance",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EarlyStop:
    """Stop at the first ``k`` with ``||A x(B_k) - y|| <= tau * delta``, or at a fixed ``k``."""

    tau: float = 1.1
    delta: float = None
    k: int = None

    def __post_init__(self):
        if self.k is None and self.delta is None:
            raise InvalidParameterError("early stopping needs a noise level or a fixed k")
        if self.k is None and not self.tau > 1:
            raise InvalidParameterError(f"discrepancy factor must exceed 1, got {self.tau}")

    def triggered(self, k, residual_norm):
        if self.k is not None:
            return k >= self.k
        return residual_norm <= self.tau * self.delta


@dataclass(frozen=True)
class IftConfig:
    lr: float = 1.0
    outer_iters: int = 100
    inner: IstaConfig = field(default_factory=lambda: IstaConfig(tol=1e-11))
    beta: float = 0.0
    early_stop: EarlyStop = None
    divergence_window: int = 10
    record_iterates: bool = False

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidParameterError(f"learning rate must be positive, got {self.lr}")
        if self.beta < 0:
            raise InvalidParameterError("beta must be nonnegative")
        if self.outer_iters < 0:
            raise InvalidParameterError("outer_iters must be >= 0")


def _arr(x):
    return x.samples if hasattr(x, "samples") else np.asarray(x, dtype=float)


def ift_gradient(B, x, A, y, pen, alpha):
    """Gradient of ``1/2 ||A x(B) - y||^2`` with respect to the entries of ``B``.

    On the support ``S`` of ``x`` the optimality system reads
    ``(B*(Bx - y))_S + alpha (a1 sign(x_S) + a2 x_S) = 0``. Differentiating it
    and applying the adjoint method gives ``-h_out (rho g' + (B g) x')`` with
    ``rho = Bx - y`` and ``g`` solving
    ``((B*B)_SS + alpha a2 I) g_S = (A*(Ax - y))_S``, zero off ``S``.

    Raises :class:`SingularSystemError` if the reduced system is singular
    (possible only for ``a2 == 0``).
    """
    M = B.matrix
    xs = _arr(x)
    ys = _arr(y)
    S = np.abs(xs) > SUPPORT_THRESHOLD
    grad = np.zeros_like(M)
    if not S.any():
        return grad
    q = A.adjoint_matrix() @ (A.matrix @ xs - ys)
    if not np.any(q[S]):
        return grad
    G = B.gram()
    H = G[np.ix_(S, S)] + alpha * pen.alpha2 * np.eye(int(S.sum()))
    try:
        gS = np.linalg.solve(H, q[S])
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("reduced optimality system is singular on the support") from exc
    if not np.all(np.isfinite(gS)):
        raise SingularSystemError("reduced optimality system is singular on the support")
    g = np.zeros_like(xs)
    g[S] = gS
    rho = M @ xs - ys
    return -B.h_out * (np.outer(rho, g) + np.outer(M @ g, xs))


def outer_loss(problem, B, x):
    """ADP-beta objective ``1/2 ||A x - y||^2 + beta ||B - A||_F^2``."""
    D = B.matrix - problem.A.matrix
    return problem.misfit(x) + problem.beta * float(np.sum(D * D))


class _DivergenceGuard:
    """Counts consecutive loss increases; rises below ``rtol`` relative are plateau noise."""

    def __init__(self, window, rtol=1e-9):
        self.window = window
        self.rtol = rtol
        self.prev = None
        self.rising = 0

    def __call__(self, loss):
        if self.prev is not None and loss > self.prev + self.rtol * abs(self.prev):
            self.rising += 1
        else:
            self.rising = 0
        self.prev = loss
        if self.rising >= self.window:
            raise DivergenceError(
                f"loss increased over {self.window} consecutive steps; try a smaller learning rate")


def adp_ift_solve(problem, cfg, B0=None):
    """Gradient descent on ``B`` for the (ADP-beta) outer loss.

    Starts at ``B0`` (default ``A``). Each step recomputes ``x(B_k)``
    (warm-started), records the loss, checks early stopping and then updates
    ``B <- B - lr (grad_IFT + 2 beta (B - A))``. ``cfg.beta`` overrides
    ``problem.beta`` when nonzero. The proximity term is stepped explicitly,
    so ``lr * beta < 1`` is required.

    ``extras``: ``B`` (final operator), ``misfit_trace``, ``norm_trace``
    (``||x(B_k)||``), ``stop_k`` and, if requested, ``iterates``.
    """
    beta = cfg.beta if cfg.beta > 0 else problem.beta
    if cfg.lr * 2.0 * beta >= 2.0:
        raise InvalidParameterError(
            f"lr={cfg.lr:.3g} unstable for the proximity term (needs lr < {1.0 / beta:.3g})")
    A = problem.A
    B = A if B0 is None else B0
    guard = _DivergenceGuard(cfg.divergence_window)
    losses, misfits, norms, inner_res, iterates = [], [], [], [], []
    x = None
    stop = StopReason.MAX_ITER
    k = 0
    while True:
        rep = solve_inner(B, problem.y, problem.pen, problem.alpha, cfg.inner, x0=x)
        x = rep.final
        D = B.matrix - A.matrix
        mis = problem.misfit(x)
        loss = mis + beta * float(np.sum(D * D))
        losses.append(loss)
        misfits.append(mis)
        norms.append(x.norm())
        inner_res.append(rep.residual_trace[-1])
        if cfg.record_iterates:
            iterates.append(x)
        if cfg.early_stop is not None and cfg.early_stop.triggered(k, np.sqrt(2.0 * mis)):
            stop = StopReason.EARLY_STOPPED
            break
        if k >= cfg.outer_iters:
            break
        guard(loss)
        grad = ift_gradient(B, x, A, problem.y, problem.pen, problem.alpha)
        if beta > 0:
            grad = grad + 2.0 * beta * D
        B = B.with_matrix(B.matrix - cfg.lr * grad)
        k += 1
    extras = {"B": B, "misfit_trace": np.array(misfits), "norm_trace": np.array(norms),
              "inner_residuals": np.array(inner_res), "stop_k": k}
    if cfg.record_iterates:
        extras["iterates"] = iterates
    return SolveReport(x, np.array(losses), np.array(misfits), k, stop, extras)


# ------------------------------------------------------- kernel parametrization


def _difference_matrix(size, h):
    """Forward differences ``(d_{k+1} - d_k) / h`` with a zero beyond the last sample."""
    D = (np.eye(size, k=1) - np.eye(size)) / h
    return D


def sobolev_sq_norm(d, h):
    """Discrete ``||d||^2 + ||D d||^2`` with ``h``-weighted sums."""
    d = np.asarray(d, float)
    Dd = _difference_matrix(d.size, h) @ d
    return h * float(d @ d + Dd @ Dd)


def _sobolev_gram(size, h):
    D = _difference_matrix(size, h)
    return h * (np.eye(size) + D.T @ D)


def _kernel_chain(grad_M, K, h):
    """Pull a gradient w.r.t. the convolution matrix back to kernel samples."""
    n = grad_M.shape[0]
    out = np.zeros(2 * K + 1)
    for k in range(-K, K + 1):
        if abs(k) < n:
            out[k + K] = h * np.trace(grad_M, offset=-k)
    return out


def kernel_data_gradient(g, problem, x):
    """Gradient of ``1/2 ||A x_g - y||^2`` w.r.t. kernel samples at ``x = x_g``."""
    n = problem.y.n
    B = convolution_operator(g, n, problem.y.interval)
    grad_M = ift_gradient(B, x, problem.A, problem.y, problem.pen, problem.alpha)
    return _kernel_chain(grad_M, g.half_width, g.h)


def adp_beta_param_solve(f, y, pen, alpha, beta, cfg, A=None):
    """ADP-beta over convolution kernels.

    Minimizes ``1/2 ||f * x_g - y||^2 + beta (||f - g||^2 + ||D(f - g)||^2)``
    over kernels ``g`` by plain gradient descent from ``g = f``, where
    ``x_g`` minimizes ``1/2 ||g * x - y||^2 + alpha R(x)``. The step on the
    quadratic proximity term is explicit, so ``lr`` must be below
    ``2 / (2 beta lambda_max)`` of its Hessian; larger steps are rejected.

    Returns the final :class:`KernelParam` and a :class:`SolveReport`.
    """
    if not beta > 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    n = y.n
    A = convolution_operator(f, n, y.interval) if A is None else A
    problem = AdpProblem(A, y, pen, alpha, beta)
    W = _sobolev_gram(f.g.size, f.h)
    curv = 2.0 * beta * float(np.linalg.eigvalsh(W)[-1])
    if cfg.lr * curv >= 2.0:
        raise InvalidParameterError(
            f"lr={cfg.lr:.3g} unstable for the proximity term (needs lr < {2.0 / curv:.3g})")
    g = f
    guard = _DivergenceGuard(cfg.divergence_window)
    losses, misfits = [], []
    x = None
    stop = StopReason.MAX_ITER
    k = 0
    while True:
        B = convolution_operator(g, n, y.interval)
        x = solve_inner(B, y, pen, alpha, cfg.inner, x0=x).final
        d = g.g - f.g
        mis = problem.misfit(x)
        loss = mis + beta * float(d @ W @ d)
        losses.append(loss)
        misfits.append(mis)
        if cfg.early_stop is not None and cfg.early_stop.triggered(k, np.sqrt(2.0 * mis)):
            stop = StopReason.EARLY_STOPPED
            break
        if k >= cfg.outer_iters:
            break
        guard(loss)
        grad_M = ift_gradient(B, x, A, y, pen, alpha)
        grad = _kernel_chain(grad_M, g.half_width, g.h) + 2.0 * beta * (W @ d)
        g = g.with_samples(g.g - cfg.lr * grad)
        k += 1
    rep = SolveReport(x, np.array(losses), np.array(misfits), k, stop,
                      {"kernel": g, "stop_k": k})
    return g, rep


# ------------------------------------------------------------------ Bregman


def bregman_distance(pen, x_tilde, x, v, tol=1e-8):
    """``R(x~) - R(x) - <v, x~ - x>`` for a subgradient ``v`` of ``R`` at ``x``.

    ``v`` is checked componentwise for membership in ``dR(x)``; a violation
    beyond ``tol`` raises :class:`InvalidSubgradientError`.
    """
    if not is_subgradient(pen, x, v, tol):
        raise InvalidSubgradientError("v is not a subgradient of the penalty at x")
    xt, xx, vv = _arr(x_tilde), _arr(x), _arr(v)
    h = x.h if hasattr(x, "h") else 1.0
    return float(penalty_value(pen, x_tilde) - penalty_value(pen, x) - h * vv @ (xt - xx))
