"""Time the numba kernels against their numpy twins.

Usage::

    python3 benchmarks/bench_kernels.py [--n 128] [--repeat 5]

Both kernel tables are always importable from ``adp_lab._kernels`` (the
numba one is ``None`` when numba is missing or ``ADP_LAB_NO_NUMBA=1``), so a
single process can time both. The first numba call compiles; it is run once
before timing.
"""

import argparse
import time

import numpy as np

from adp_lab import _kernels
from adp_lab.operators import make_convolution_operator, make_integration_operator


def _problem(n, kind):
    A = make_integration_operator(n) if kind == "integration" else make_convolution_operator(n)
    rng = np.random.default_rng(0)
    y = rng.standard_normal(n)
    G = np.ascontiguousarray(A.gram())
    b = A.adjoint_matrix() @ y
    step = 1.0 / np.linalg.eigvalsh(G)[-1]
    return A, G, b, y, step


def _cases(n, kind):
    A, G, b, y, step = _problem(n, kind)
    x0 = np.zeros(n)
    z = np.random.default_rng(1).uniform(0.0, 1.0, n)
    thr, damp = step * 1e-3, 1.0 - step * 1e-2
    X, U = _kernels.numpy_kernels["lista_forward_trace"](G, b, z, step, thr, damp, 10)
    gbar = A.h_out * (A.matrix.T @ (A.matrix @ X[-1] - y))
    M = np.ascontiguousarray(A.matrix)
    return {
        "ista_run (2000 sweeps)": ("ista_run", (G, b, 0.0, x0, step, 1e-3, 1e-2, A.h_in, 0.0, 2000)),
        "lista_forward (depth 250)": ("lista_forward", (G, b, z, step, thr, damp, 250)),
        "lista_forward_trace (depth 10)": ("lista_forward_trace", (G, b, z, step, thr, damp, 10)),
        "lista_backward (depth 10)": ("lista_backward", (M, G, y, X, U, gbar, step, thr, damp, A.scale)),
    }


def _best_of(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    print(f"active backend: {_kernels.BACKEND}")
    if _kernels.numba_kernels is None:
        print("numba kernels unavailable; timing numpy only")
    print(f"{'kernel':<34}{'operator':<13}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for kind in ("integration", "convolution"):
        for label, (name, kargs) in _cases(args.n, kind).items():
            t_np = _best_of(_kernels.numpy_kernels[name], kargs, args.repeat)
            if _kernels.numba_kernels is not None:
                fn = _kernels.numba_kernels[name]
                fn(*kargs)  # compile
                t_nb = _best_of(fn, kargs, args.repeat)
                print(f"{label:<34}{kind:<13}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{t_np / t_nb:>8.1f}x")
            else:
                print(f"{label:<34}{kind:<13}{1e3 * t_np:>10.2f}{'-':>10}{'-':>9}")


if __name__ == "__main__":
    main()
