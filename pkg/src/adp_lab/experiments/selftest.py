"""Fast self-checks printed as PASS/FAIL lines (``adp-lab selftest``)."""

import numpy as np

from .. import _kernels
from ..adp_iterative import ift_gradient, outer_loss
from ..dip_lista import ListaNet, lista_backward, lista_forward
from ..errors import InfeasibleError
from ..lemma_lab import (
    construct_rank_two_operator,
    nonconvex_feasible_set_demo,
    verify_minimizer,
)
from ..operators import LinearOp, Signal
from ..penalties import ElasticNet, SquaredL2, min_subgradient, skewed_cone_penalty
from ..variational import AdpProblem, IstaConfig, adp_exact_solve, solve_inner, tikhonov_l2_solve

__all__ = ["run_selftest"]


def _random_square(rng, n):
    x = Signal(np.zeros(n))
    return LinearOp.on(rng.standard_normal((n, n)), x)


def _round_trip(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 16))
        pen = ElasticNet(rng.uniform(0.01, 1.0), rng.uniform(0.05, 1.0))
        xhat = Signal(rng.standard_normal(n) * (rng.random(n) < 0.6))
        y = Signal(rng.standard_normal(n))
        v = min_subgradient(pen, xhat)
        pair = xhat.inner(v)
        alpha = rng.uniform(0.05, 0.95) * 0.25 * y.norm() ** 2 / max(pair, 1e-12)
        B = construct_rank_two_operator(xhat, v, y, alpha, pen)
        chk = verify_minimizer(B, xhat, y, pen, alpha)
        worst = max(worst, chk.residual, chk.ista_distance)
    return worst <= 1e-6, f"worst residual/distance {worst:.2e}"


def _infeasible(rng):
    raised = 0
    for _ in range(20):
        n = int(rng.integers(2, 16))
        pen = ElasticNet(rng.uniform(0.01, 1.0), rng.uniform(0.05, 1.0))
        xhat = Signal(rng.standard_normal(n))
        y = Signal(rng.standard_normal(n))
        v = min_subgradient(pen, xhat)
        alpha = rng.uniform(1.1, 3.0) * 0.25 * y.norm() ** 2 / xhat.inner(v)
        try:
            construct_rank_two_operator(xhat, v, y, alpha, pen)
        except InfeasibleError:
            raised += 1
    return raised == 20, f"{raised}/20 raised"


def _nonconvex(_rng):
    d = nonconvex_feasible_set_demo()
    ok = (d.pairing_a <= d.level and d.pairing_b <= d.level and d.pairing_mid > d.level
          and float(skewed_cone_penalty(5.0, 0.0)) == 0.0)
    return ok, f"level {d.level:.3g}, midpoint pairing {d.pairing_mid:.3g}"


def _equivalence(rng):
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 20))
        A = _random_square(rng, n)
        y = Signal(rng.standard_normal(n))
        rep = adp_exact_solve(A, y, SquaredL2(), rng.uniform(0.05, 2.0))
        xt = tikhonov_l2_solve(A, y, rep.extras["tikhonov_alpha"])
        d = y.like(xt.samples - rep.final.samples).norm() / max(rep.final.norm(), 1e-300)
        worst = max(worst, d)
    return worst <= 1e-6, f"worst relative difference {worst:.2e}"


def _fd_matrix(f, M, eps):
    g = np.zeros_like(M)
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            E = np.zeros_like(M)
            E[i, j] = eps
            g[i, j] = (f(M + E) - f(M - E)) / (2 * eps)
    return g


def _ift(rng):
    worst = 0.0
    cfg = IstaConfig(tol=1e-13)
    for _ in range(2):
        n = 6
        A = _random_square(rng, n)
        y = Signal(rng.standard_normal(n))
        pen = ElasticNet(0.2, 0.5)
        prob = AdpProblem(A, y, pen, 0.5)

        def loss(M):
            B = A.with_matrix(M)
            return outer_loss(prob, B, solve_inner(B, y, pen, 0.5, cfg).final)

        x = solve_inner(A, y, pen, 0.5, cfg).final
        g = ift_gradient(A, x, A, y, pen, 0.5)
        fd = _fd_matrix(loss, A.matrix, 1e-6)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    return worst <= 1e-4, f"worst relative error {worst:.2e}"


def _lista(rng):
    worst = 0.0
    for _ in range(2):
        n = 6
        A = _random_square(rng, n)
        y = Signal(rng.standard_normal(n))
        z = Signal(rng.uniform(0, 1, n))
        net = ListaNet(A, 10, ElasticNet(0.05, 0.5), 0.5)

        def loss(M):
            out = lista_forward(net.with_operator(A.with_matrix(M)), z, y)
            r = A.matrix @ out.samples - y.samples
            return 0.5 * A.h_out * float(r @ r)

        g = lista_backward(net, z, y, A)
        fd = _fd_matrix(loss, A.matrix, 1e-7)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    return worst <= 1e-4, f"worst relative error {worst:.2e}"


def _backends(rng):
    if _kernels.numba_kernels is None:
        return True, "numba unavailable, numpy only"
    n = 20
    M = rng.standard_normal((n, n))
    G = M.T @ M
    b = rng.standard_normal(n)
    step = 1.0 / np.linalg.eigvalsh(G)[-1]
    args = (G, b, 0.0, np.zeros(n), step, 0.1, 0.2, 1.0, 1e-12, 500)
    xa = _kernels.numpy_kernels["ista_run"](*args)[0]
    xb = _kernels.numba_kernels["ista_run"](*args)[0]
    d = float(np.abs(xa - xb).max())
    return d <= 1e-10, f"max difference {d:.1e}"


_CHECKS = (
    ("rank-two operator round trip", _round_trip),
    ("infeasible points rejected", _infeasible),
    ("non-convex feasible set", _nonconvex),
    ("Ivanov / Tikhonov equivalence", _equivalence),
    ("IFT gradient vs finite differences", _ift),
    ("LISTA backprop vs finite differences", _lista),
    ("numba and numpy kernels agree", _backends),
)


def run_selftest(seed=0, stream=print):
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, check in _CHECKS:
        try:
            ok, detail = check(rng)
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        stream(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    stream(f"backend: {_kernels.BACKEND}")
    return ok_all
