"""Inner variational problems and their classical constrained counterparts.

``solve_inner`` computes the Tikhonov-type minimizer

    x(B) = argmin_x 1/2 ||B x - y||^2 + alpha R(x)

by proximal-gradient (ISTA) fixed-point iteration. ``ivanov_solve`` minimizes
the misfit under the constraint ``pairing(x) <= r`` by bisection on the
Lagrange multiplier, and ``adp_exact_solve`` is the Ivanov problem with the
radius ``||y||^2 / (4 alpha)`` that reproduces the analytic deep prior
exactly.
"""

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    NoConvergenceError,
    SingularSystemError,
)
from .operators import LinearOp, Signal

__all__ = [
    "StopReason",
    "SolveReport",
    "AdpProblem",
    "IstaConfig",
    "solve_inner",
    "inner_objective",
    "fixed_point_residual",
    "tikhonov_l2_solve",
    "ivanov_solve",
    "adp_exact_solve",
]

log = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 1e-10


class StopReason(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    EARLY_STOPPED = "early_stopped"


@dataclass
class SolveReport:
    """Outcome of an iterative solve.

    ``loss_trace`` holds the objective the solver decreases (per iteration),
    ``residual_trace`` the solver's own convergence measure. Solver-specific
    by-products (final operator, multiplier, iterates) live in ``extras``.
    """

    final: Signal
    loss_trace: np.ndarray
    residual_trace: np.ndarray
    iterations: int
    stop_reason: StopReason
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AdpProblem:
    """Forward operator, data, penalty and weights of one reconstruction task.

    The penalty enters as ``alpha * R``; effective elastic-net weights are
    ``(alpha * alpha1, alpha * alpha2)``. ``delta`` is the noise level if known.
    """

    A: LinearOp
    y: Signal
    pen: object
    alpha: float = 1.0
    beta: float = 0.0
    delta: float = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0:
            raise InvalidParameterError(f"beta must be nonnegative, got {self.beta}")

    def misfit(self, x):
        """``1/2 ||A x - y||^2`` in the codomain norm."""
        r = self.A.matrix @ _arr(x) - self.y.samples
        return 0.5 * self.A.h_out * float(r @ r)


@dataclass(frozen=True)
class IstaConfig:
    """ISTA settings.

    step : float or None
        Gradient step; ``None`` selects ``1 / ||B||^2``. Must lie in
        ``(0, 2 / ||B||^2)``.
    tol : float
        Stop when the fixed-point residual ``||x - T(x)||`` drops below it.
    polish : bool
        Periodically try an active-set Newton step on the current support;
        kept only when it yields a fixed point within ``tol``.
    """

    step: float = None
    tol: float = 1e-10
    max_iter: int = 200_000
    polish: bool = True
    first_chunk: int = 25
    max_chunk: int = 2000

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidParameterError("tol must be positive")
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be >= 1")


def _arr(x):
    return x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)


class _Quadratic:
    """Euclidean data of ``h (1/2 x'Gx - b'x + c0) + h (w1 |x|_1 + w2/2 |x|^2)``."""

    def __init__(self, G, b, c0, h, w1, w2):
        self.G = np.ascontiguousarray(G)
        self.b = np.ascontiguousarray(b)
        self.c0 = c0
        self.h = h
        self.w1 = float(w1)
        self.w2 = float(w2)
        self._lip = None

    @classmethod
    def from_operator(cls, B, y, w1, w2):
        ys = _arr(y)
        return cls(B.gram(), B.adjoint_matrix() @ ys,
                   0.5 * B.scale * float(ys @ ys), B.h_in, w1, w2)

    @property
    def lipschitz(self):
        if self._lip is None:
            self._lip = float(np.linalg.eigvalsh(self.G)[-1]) if self.G.size else 0.0
        return self._lip

    def objective(self, x):
        return self.h * (0.5 * (x @ (self.G @ x)) - self.b @ x + self.c0
                         + self.w1 * np.abs(x).sum() + 0.5 * self.w2 * (x @ x))

    def step_map(self, x, step):
        u = x - step * (self.G @ x - self.b)
        return np.sign(u) * np.maximum(np.abs(u) - step * self.w1, 0.0) / (1.0 + step * self.w2)

    def residual(self, x, step):
        d = self.step_map(x, step) - x
        return float(np.sqrt(self.h * (d @ d)))

    def polish(self, x, step, tol, max_steps=None):
        """Feature-sign active-set search started at ``x``.

        Alternates between solving the optimality system on the current
        signed support (with a line search that stops at sign changes, so the
        objective never increases) and adding the worst off-support KKT
        violator. Returns the iterate once its fixed-point residual is at most
        ``tol``, or ``None`` if the step budget runs out or a reduced system is
        singular.
        """
        n = x.size
        H = self.G + self.w2 * np.eye(n)
        x = np.array(x, dtype=float)
        theta = np.sign(x)
        for _ in range(max_steps or 4 * n + 10):
            g = self.b - H @ x
            S = theta != 0
            if self.residual(x, step) <= tol:
                return x
            off = ~S & (np.abs(g) > self.w1)
            if off.any() and self._on_support_optimal(x, g, S, theta):
                i = int(np.argmax(np.where(off, np.abs(g), -np.inf)))
                theta[i] = np.sign(g[i])
                S = theta != 0
            if not S.any():
                return None
            try:
                xs = np.linalg.solve(H[np.ix_(S, S)], self.b[S] - self.w1 * theta[S])
            except np.linalg.LinAlgError:
                return None
            target = np.zeros(n)
            target[S] = xs
            x = self._sign_line_search(x, target, S)
            theta = np.sign(x)
        return None

    def _on_support_optimal(self, x, g, S, theta):
        scale = max(1.0, float(np.abs(self.b).max()))
        return bool(np.all(np.abs(g[S] - self.w1 * theta[S]) <= 1e-9 * scale))

    def _sign_line_search(self, x, target, S):
        """Best point on ``[x, target]`` among the end point and sign crossings."""
        d = target - x
        cross = S & (x * target < 0)
        ts = [1.0]
        if cross.any():
            ts += list(np.clip(-x[cross] / d[cross], 0.0, 1.0))
        best, best_f = None, np.inf
        for t in ts:
            z = x + t * d
            if t < 1.0:
                z[np.abs(z) < 1e-15 * max(1.0, np.abs(x).max())] = 0.0
                k = np.argmin(np.where(cross, np.abs(x + t * d), np.inf))
                z[k] = 0.0
            f = self.objective(z)
            if f < best_f:
                best, best_f = z, f
        return best


def _ista(q, step, cfg, x0):
    """Chunked ISTA with optional active-set polishing."""
    x = np.array(x0, dtype=float)
    objs, ress = [], []
    done = 0
    chunk = cfg.first_chunk
    stop = StopReason.MAX_ITER
    while done < cfg.max_iter:
        n_run = min(chunk, cfg.max_iter - done)
        x, k, obj, res, converged = _kernels.ista_run(
            q.G, q.b, q.c0, x, step, q.w1, q.w2, q.h, cfg.tol, n_run)
        objs.append(obj)
        ress.append(res)
        done += k
        if converged:
            stop = StopReason.CONVERGED
            break
        if cfg.polish:
            xp = q.polish(x, step, cfg.tol)
            if xp is not None:
                fx = q.objective(x)
                fp = q.objective(xp)
                if fp <= fx + 1e-12 * max(1.0, abs(fx)):
                    objs.append(np.array([fp]))
                    ress.append(np.array([q.residual(xp, step)]))
                    x = xp
                    done += 1
                    stop = StopReason.CONVERGED
                    break
        chunk = min(2 * chunk, cfg.max_chunk)
    return x, np.concatenate(objs), np.concatenate(ress), done, stop


def _resolve_step(q, step):
    L = q.lipschitz
    if step is None:
        return 1.0 / L if L > 0 else 1.0
    if not (step > 0 and (L == 0 or step < 2.0 / L)):
        raise InvalidParameterError(
            f"ISTA step {step:.4g} outside (0, 2/||B||^2) = (0, {2.0 / L:.4g})")
    return float(step)


def solve_inner(B, y, pen, alpha, cfg=IstaConfig(), x0=None):
    """Minimize ``1/2 ||B x - y||^2 + alpha R(x)`` by ISTA.

    Returns a :class:`SolveReport` whose ``loss_trace`` is the objective at
    each iterate (nonincreasing) and ``residual_trace`` the fixed-point
    residual ``||x_k - T(x_k)||``. Reaching ``max_iter`` is reported via
    ``stop_reason``, not raised. With ``a2 == 0`` the objective is not
    strictly convex and the minimizer may be non-unique; this only warns.
    """
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if pen.alpha2 == 0:
        warnings.warn("a2 == 0: x(B) may be non-unique", RuntimeWarning, stacklevel=2)
    q = _Quadratic.from_operator(B, y, alpha * pen.alpha1, alpha * pen.alpha2)
    step = _resolve_step(q, cfg.step)
    start = np.zeros(B.shape[1]) if x0 is None else _arr(x0)
    x, objs, ress, iters, stop = _ista(q, step, cfg, start)
    if stop is StopReason.MAX_ITER:
        log.debug("ISTA hit max_iter=%d, residual %.3g", cfg.max_iter, ress[-1])
    return SolveReport(B.domain_signal(x), objs, ress, iters, stop,
                       {"step": step, "objective": q.objective(x)})


def inner_objective(B, y, pen, alpha, x):
    q = _Quadratic.from_operator(B, y, alpha * pen.alpha1, alpha * pen.alpha2)
    return q.objective(_arr(x))


def fixed_point_residual(B, y, pen, alpha, x, step=None):
    q = _Quadratic.from_operator(B, y, alpha * pen.alpha1, alpha * pen.alpha2)
    return q.residual(_arr(x), _resolve_step(q, step))


def tikhonov_l2_solve(A, y, alpha_t):
    """Solve ``(A*A + alpha_t I) x = A* y`` by Cholesky/LU factorization."""
    if alpha_t < 0:
        raise InvalidParameterError(f"Tikhonov parameter must be >= 0, got {alpha_t}")
    G = A.gram()
    b = A.adjoint_matrix() @ _arr(y)
    K = G + alpha_t * np.eye(G.shape[0])
    if alpha_t == 0 and np.linalg.cond(K) > 1e14:
        raise SingularSystemError("A*A is numerically singular; use alpha_t > 0")
    try:
        x = np.linalg.solve(K, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    return A.domain_signal(x)


def _least_squares(G, b):
    """Minimum-norm solution of ``G x = b`` for symmetric PSD ``G``."""
    lam, V = np.linalg.eigh(G)
    keep = lam > lam[-1] * G.shape[0] * np.finfo(float).eps
    c = V.T @ b
    return V[:, keep] @ (c[keep] / lam[keep])


def ivanov_solve(A, y, pen, r, tol=1e-10, inner=None, t_max=1e30):
    """Minimize ``1/2 ||A x - y||^2`` subject to ``pairing(x) <= r``.

    The Lagrangian ``1/2 ||Ax - y||^2 + t pairing(x)`` is an elastic net with
    weights ``(t a1, 2 t a2)``; its minimizer is found in closed form when
    ``a1 == 0`` and by ISTA otherwise. The multiplier ``t`` is bracketed by
    doubling/halving and refined by bisection (at most 60 steps) until
    ``|pairing - r| <= tol * r``. The returned point always satisfies
    ``pairing <= r (1 + tol)``.

    ``extras`` carries ``multiplier`` (t), ``tikhonov_alpha`` (``2 t a2``, the
    equivalent ``(alpha/2)||x||^2`` weight when ``a1 == 0``) and ``radius``.
    """
    if not r > 0:
        raise InvalidParameterError(f"constraint radius must be positive, got {r}")
    inner = inner or IstaConfig(tol=1e-12)
    q0 = _Quadratic.from_operator(A, y, 0.0, 0.0)
    ys = _arr(y)
    a1, a2 = pen.alpha1, pen.alpha2
    misfits, gaps = [], []

    def pairing(x):
        return A.h_in * (a1 * np.abs(x).sum() + a2 * (x @ x))

    def misfit(x):
        res = A.matrix @ x - ys
        return 0.5 * A.h_out * float(res @ res)

    def report(x, t, iters, stop):
        return SolveReport(
            A.domain_signal(x), np.array(misfits), np.array(gaps), iters, stop,
            {"multiplier": t, "tikhonov_alpha": 2.0 * t * a2, "radius": r,
             "pairing": pairing(x)})

    x_ls = _least_squares(q0.G, q0.b)
    p_ls = pairing(x_ls)
    misfits.append(misfit(x_ls))
    gaps.append((p_ls - r) / r)
    if p_ls <= r:
        return report(x_ls, 0.0, 0, StopReason.CONVERGED)

    if a1 == 0.0:
        lam, V = np.linalg.eigh(q0.G)
        c = V.T @ q0.b

        def minimize(t, _warm):
            return V @ (c / (lam + 2.0 * t * a2))
    else:
        def minimize(t, warm):
            q = _Quadratic(q0.G, q0.b, q0.c0, q0.h, t * a1, 2.0 * t * a2)
            x, *_ = _ista(q, _resolve_step(q, inner.step), inner, warm)
            return x

    evals = 0

    def evaluate(t, warm):
        nonlocal evals
        evals += 1
        x = minimize(t, warm)
        p = pairing(x)
        misfits.append(misfit(x))
        gaps.append((p - r) / r)
        return x, p

    scale = max(q0.lipschitz, np.finfo(float).tiny)
    t = 1e-2 * scale
    warm = np.zeros_like(x_ls)
    x, p = evaluate(t, warm)
    if p > r:
        t_lo = t
        while p > r:
            t_lo = t
            t *= 2.0
            if t > t_max:
                raise NoConvergenceError(
                    "no feasible multiplier below t_max", t_max=t_max, pairing=p, radius=r)
            x, p = evaluate(t, x)
        t_hi, x_hi = t, x
    else:
        t_hi, x_hi = t, x
        t_lo = 0.0
        while t > 1e-16 * scale:
            t *= 0.5
            x, p = evaluate(t, x)
            if p > r:
                t_lo = t
                break
            t_hi, x_hi = t, x

    for _ in range(60):
        if abs(pairing(x_hi) - r) <= tol * r:
            break
        t = 0.5 * (t_lo + t_hi)
        x, p = evaluate(t, x_hi)
        if abs(p - r) <= tol * r:
            return report(x, t, evals, StopReason.CONVERGED)
        if p > r:
            t_lo = t
        else:
            t_hi, x_hi = t, x
    stop = (StopReason.CONVERGED if abs(pairing(x_hi) - r) <= tol * r
            else StopReason.MAX_ITER)
    return report(x_hi, t_hi, evals, stop)


def adp_exact_solve(A, y, pen, alpha, tol=1e-10, inner=None):
    """Exact analytic-deep-prior reconstruction via its Ivanov form.

    Minimizes the misfit over ``alpha * pairing(x) <= ||y||^2 / 4``; this is
    the minimum over all operators ``B`` of ``1/2 ||A x(B) - y||^2``.
    """
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    ny = y.norm()
    if ny == 0.0:
        raise InvalidInputError("data must be nonzero")
    rep = ivanov_solve(A, y, pen, ny**2 / (4.0 * alpha), tol=tol, inner=inner)
    rep.extras["alpha"] = alpha
    return rep
