"""Deep image prior with a weight-tied LISTA network.

Each layer is one proximal-gradient step in which the l2 part of the
elastic net is taken as an explicit gradient and the l1 part by
soft-thresholding::

    x <- soft((1 - lam a a2) x - lam B*(B x - y), lam a a1)

Fixed points of the layer are exactly the inner minimizers ``x(B)``.
Gradients with respect to ``B`` are computed by hand-written reverse mode
through the stored layer activations (derivative 0 at the threshold kink).
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .adp_iterative import _DivergenceGuard
from .errors import InvalidParameterError
from .operators import LinearOp, Signal, operator_norm
from .variational import SolveReport, StopReason

__all__ = [
    "ListaNet",
    "lista_forward",
    "lista_backward",
    "dip_lista_solve",
    "dip_lista_inf_solve",
    "default_input",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ListaNet:
    """Weight-tied LISTA network: ``depth`` layers sharing the operator ``B``.

    ``step=None`` picks ``1 / (||B||^2 + alpha a2)``.
    """

    B: LinearOp
    depth: int
    pen: object
    alpha: float
    step: float = None

    def __post_init__(self):
        if self.depth < 1:
            raise InvalidParameterError("network depth must be >= 1")
        if not self.alpha > 0:
            raise InvalidParameterError("alpha must be positive")
        nb2 = operator_norm(self.B) ** 2
        if self.step is None:
            object.__setattr__(self, "step", 1.0 / (nb2 + self.alpha * self.pen.alpha2))
        elif not (self.step > 0 and (nb2 == 0 or self.step < 2.0 / nb2)):
            raise InvalidParameterError(f"layer step {self.step:.4g} must lie in (0, 2/||B||^2)")

    @property
    def threshold(self):
        return self.step * self.alpha * self.pen.alpha1

    @property
    def damping(self):
        return 1.0 - self.step * self.alpha * self.pen.alpha2

    def with_operator(self, B):
        return ListaNet(B, self.depth, self.pen, self.alpha, self.step)

    def _kernel_args(self, y):
        B = self.B
        G = np.ascontiguousarray(B.gram())
        b = B.adjoint_matrix() @ _arr(y)
        return G, b


def _arr(x):
    return x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)


def lista_forward(net, z, y):
    """Output ``x^L`` of the network for input ``z`` and data ``y``."""
    G, b = net._kernel_args(y)
    out = _kernels.lista_forward(G, b, np.array(_arr(z), dtype=float), net.step,
                                 net.threshold, net.damping, net.depth)
    return net.B.domain_signal(out)


def _forward_backward(net, z, y, A):
    G, b = net._kernel_args(y)
    X, U = _kernels.lista_forward_trace(G, b, np.array(_arr(z), dtype=float), net.step,
                                        net.threshold, net.damping, net.depth)
    out = X[-1]
    ys = _arr(y)
    res = A.matrix @ out - ys
    loss = 0.5 * A.h_out * float(res @ res)
    gbar = A.h_out * (A.matrix.T @ res)
    B = net.B
    grad = _kernels.lista_backward(np.ascontiguousarray(B.matrix), G, ys, X, U, gbar,
                                   net.step, net.threshold, net.damping, B.scale)
    return out, loss, grad


def lista_backward(net, z, y, A):
    """Gradient of ``1/2 ||A lista_forward(z) - y||^2`` w.r.t. the entries of ``B``."""
    return _forward_backward(net, z, y, A)[2]


def default_input(n, seed=0):
    """Uniform noise on ``[0, 1)`` from a seeded generator."""
    return np.random.default_rng(seed).uniform(0.0, 1.0, n)


def dip_lista_solve(problem, depth=10, lr=1.0, iters=100, z0=None, B0=None, step=None,
                    seed=0, divergence_window=10):
    """DIP: gradient descent on ``B`` for a fixed random input ``z0``.

    Returns the network output after the last update; ``loss_trace[k]`` is
    the misfit of the output with ``B_k``.
    """
    A, y = problem.A, problem.y
    z = default_input(A.shape[1], seed) if z0 is None else _arr(z0)
    net = ListaNet(A if B0 is None else B0, depth, problem.pen, problem.alpha, step)
    guard = _DivergenceGuard(divergence_window)
    losses = []
    for _ in range(iters):
        out, loss, grad = _forward_backward(net, z, y, A)
        losses.append(loss)
        guard(loss)
        net = net.with_operator(net.B.with_matrix(net.B.matrix - lr * grad))
    out = lista_forward(net, z, y)
    losses.append(problem.misfit(out))
    return SolveReport(out, np.array(losses), np.array(losses), iters, StopReason.MAX_ITER,
                       {"B": net.B, "z0": z, "step": net.step})


def dip_lista_inf_solve(problem, lr=1.0, iters=1000, z0=None, B0=None, block_depth=10,
                        step=None, seed=0, divergence_window=10, early_stop=None):
    """Growing-depth DIP: the network input is its own previous output.

    Iterates ``z_{k+1} = phi_{B_k}(z_k)`` with a ``block_depth``-layer block;
    the loss of ``phi_{B_k}(z_k)`` is backpropagated through that block only.
    With ``lr = 0`` this is plain LISTA/ISTA iteration from ``z0``.
    """
    A, y = problem.A, problem.y
    z = default_input(A.shape[1], seed) if z0 is None else np.array(_arr(z0), dtype=float)
    net = ListaNet(A if B0 is None else B0, block_depth, problem.pen, problem.alpha, step)
    guard = _DivergenceGuard(divergence_window)
    losses = []
    stop = StopReason.MAX_ITER
    k = 0
    for k in range(iters):
        if lr > 0:
            out, loss, grad = _forward_backward(net, z, y, A)
        else:
            out = lista_forward(net, z, y).samples
            loss = problem.misfit(out)
        losses.append(loss)
        z = out
        if early_stop is not None and early_stop.triggered(k, np.sqrt(2.0 * loss)):
            stop = StopReason.EARLY_STOPPED
            break
        if lr > 0:
            guard(loss)
            net = net.with_operator(net.B.with_matrix(net.B.matrix - lr * grad))
    return SolveReport(A.domain_signal(z), np.array(losses), np.array(losses), k + 1 if iters else 0,
                       stop, {"B": net.B, "step": net.step})
