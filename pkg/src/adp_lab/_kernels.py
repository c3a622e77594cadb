"""Hot inner loops: ISTA fixed-point sweeps and LISTA forward/backward passes.

Every kernel exists twice: a numba ``@njit`` version with explicit loops and
a pure-numpy version. The active one is chosen at import time; set the
environment variable ``ADP_LAB_NO_NUMBA=1`` to force the numpy path (numba
missing has the same effect). Both paths share one calling convention and
agree to rounding error, so callers never branch on the backend.

All kernels work on plain Euclidean sample vectors. The caller folds grid
weights into ``G = B*B``, ``b = B*y`` and the objective constants.
"""

import os

import numpy as np

__all__ = [
    "BACKEND",
    "ista_run",
    "lista_forward",
    "lista_forward_trace",
    "lista_backward",
    "numpy_kernels",
    "numba_kernels",
]


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


# ---------------------------------------------------------------- numpy path


def _ista_np(G, b, c0, x0, step, w1, w2, h, tol, max_iter):
    x = x0.copy()
    obj = np.empty(max_iter)
    res = np.empty(max_iter)
    thr = step * w1
    shrink = 1.0 + step * w2
    converged = False
    k = 0
    while k < max_iter:
        g = G @ x
        obj[k] = h * (0.5 * (x @ g) - b @ x + c0
                      + w1 * np.abs(x).sum() + 0.5 * w2 * (x @ x))
        u = x - step * (g - b)
        xn = np.sign(u) * np.maximum(np.abs(u) - thr, 0.0) / shrink
        d = xn - x
        res[k] = np.sqrt(h * (d @ d))
        x = xn
        k += 1
        if res[k - 1] <= tol:
            converged = True
            break
    return x, k, obj[:k], res[:k], converged


def _lista_forward_np(G, b, x0, step, thr, damp, depth):
    x = x0.copy()
    for _ in range(depth):
        u = damp * x - step * (G @ x - b)
        x = np.sign(u) * np.maximum(np.abs(u) - thr, 0.0)
    return x


def _lista_forward_trace_np(G, b, x0, step, thr, damp, depth):
    n = x0.shape[0]
    X = np.empty((depth + 1, n))
    U = np.empty((depth, n))
    X[0] = x0
    for l in range(depth):
        u = damp * X[l] - step * (G @ X[l] - b)
        U[l] = u
        X[l + 1] = np.sign(u) * np.maximum(np.abs(u) - thr, 0.0)
    return X, U


def _lista_backward_np(M, G, y, X, U, gbar, step, thr, damp, c):
    grad = np.zeros(M.shape)
    gb = gbar.copy()
    for l in range(U.shape[0] - 1, -1, -1):
        if thr > 0.0:
            ub = gb * (np.abs(U[l]) > thr)
        else:
            ub = gb.copy()
        r = M @ X[l] - y
        Mu = M @ ub
        grad -= (step * c) * (np.outer(r, ub) + np.outer(Mu, X[l]))
        gb = damp * ub - step * (G @ ub)
    return grad


# ---------------------------------------------------------------- numba path


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def ista(G, b, c0, x0, step, w1, w2, h, tol, max_iter):
        n = x0.shape[0]
        x = x0.copy()
        xn = np.empty(n)
        obj = np.empty(max_iter)
        res = np.empty(max_iter)
        thr = step * w1
        shrink = 1.0 + step * w2
        converged = False
        k = 0
        while k < max_iter:
            g = np.dot(G, x)
            quad = 0.0
            lin = 0.0
            l1 = 0.0
            l2 = 0.0
            for i in range(n):
                quad += x[i] * g[i]
                lin += b[i] * x[i]
                l1 += abs(x[i])
                l2 += x[i] * x[i]
            obj[k] = h * (0.5 * quad - lin + c0 + w1 * l1 + 0.5 * w2 * l2)
            dd = 0.0
            for i in range(n):
                u = x[i] - step * (g[i] - b[i])
                a = abs(u) - thr
                if a > 0.0:
                    v = (a if u > 0.0 else -a) / shrink
                else:
                    v = 0.0
                xn[i] = v
                d = v - x[i]
                dd += d * d
            res[k] = np.sqrt(h * dd)
            x[:] = xn
            k += 1
            if res[k - 1] <= tol:
                converged = True
                break
        return x, k, obj[:k].copy(), res[:k].copy(), converged

    @njit(cache=True)
    def lista_forward(G, b, x0, step, thr, damp, depth):
        n = x0.shape[0]
        x = x0.copy()
        for _ in range(depth):
            g = np.dot(G, x)
            for i in range(n):
                u = damp * x[i] - step * (g[i] - b[i])
                a = abs(u) - thr
                if a > 0.0:
                    x[i] = a if u > 0.0 else -a
                else:
                    x[i] = 0.0
        return x

    @njit(cache=True)
    def lista_forward_trace(G, b, x0, step, thr, damp, depth):
        n = x0.shape[0]
        X = np.empty((depth + 1, n))
        U = np.empty((depth, n))
        X[0, :] = x0
        for l in range(depth):
            g = np.dot(G, X[l])
            for i in range(n):
                u = damp * X[l, i] - step * (g[i] - b[i])
                U[l, i] = u
                a = abs(u) - thr
                if a > 0.0:
                    X[l + 1, i] = a if u > 0.0 else -a
                else:
                    X[l + 1, i] = 0.0
        return X, U

    @njit(cache=True)
    def lista_backward(M, G, y, X, U, gbar, step, thr, damp, c):
        m, n = M.shape
        grad = np.zeros((m, n))
        gb = gbar.copy()
        ub = np.empty(n)
        sc = step * c
        for l in range(U.shape[0] - 1, -1, -1):
            for i in range(n):
                if thr > 0.0 and not abs(U[l, i]) > thr:
                    ub[i] = 0.0
                else:
                    ub[i] = gb[i]
            r = np.dot(M, X[l]) - y
            Mu = np.dot(M, ub)
            for i in range(m):
                ri = sc * r[i]
                mi = sc * Mu[i]
                for j in range(n):
                    grad[i, j] -= ri * ub[j] + mi * X[l, j]
            Gu = np.dot(G, ub)
            for i in range(n):
                gb[i] = damp * ub[i] - step * Gu[i]
        return grad

    return {
        "ista_run": ista,
        "lista_forward": lista_forward,
        "lista_forward_trace": lista_forward_trace,
        "lista_backward": lista_backward,
    }


numpy_kernels = {
    "ista_run": _ista_np,
    "lista_forward": _lista_forward_np,
    "lista_forward_trace": _lista_forward_trace_np,
    "lista_backward": _lista_backward_np,
}

numba_kernels = None
if not _flag("ADP_LAB_NO_NUMBA"):
    try:
        numba_kernels = _build_numba()
    except ImportError:
        numba_kernels = None

_active = numba_kernels if numba_kernels is not None else numpy_kernels
BACKEND = "numba" if numba_kernels is not None else "numpy"

ista_run = _active["ista_run"]
lista_forward = _active["lista_forward"]
lista_forward_trace = _active["lista_forward_trace"]
lista_backward = _active["lista_backward"]
