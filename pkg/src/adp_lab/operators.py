"""Discretized signals and dense linear operators on a uniform grid.

Signals live in a discretization of ``L^2(a, b)``: ``n`` cell-centred samples
with spacing ``h = (b - a) / n`` and the weighted inner product
``<u, w> = h * sum(u * w)``. Operators are dense matrices acting on sample
vectors; their adjoints are taken with respect to the weighted products.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidInputError, InvalidParameterError

__all__ = [
    "Signal",
    "LinearOp",
    "KernelParam",
    "make_integration_operator",
    "make_convolution_operator",
    "gaussian_kernel",
    "convolution_operator",
    "operator_norm",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Signal:
    """Samples of a function on a uniform grid over ``interval``."""

    samples: np.ndarray
    interval: tuple = (0.0, 1.0)

    def __post_init__(self):
        s = _frozen(self.samples)
        if s.ndim != 1 or s.size < 2:
            raise InvalidDimensionError(f"need a 1-d signal with n >= 2, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise InvalidInputError("signal samples must be finite")
        a, b = (float(t) for t in self.interval)
        if not b > a:
            raise InvalidInputError(f"empty interval {self.interval}")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "interval", (a, b))

    @property
    def n(self):
        return self.samples.size

    @property
    def h(self):
        a, b = self.interval
        return (b - a) / self.n

    @property
    def grid(self):
        """Cell centres ``a + (i + 1/2) h``."""
        a, _ = self.interval
        return a + (np.arange(self.n) + 0.5) * self.h

    def like(self, samples):
        """New signal on the same grid."""
        return Signal(samples, self.interval)

    def inner(self, other):
        return self.h * float(np.dot(self.samples, _samples(other)))

    def norm(self):
        return float(np.sqrt(self.h * np.dot(self.samples, self.samples)))

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Signal(n={self.n}, interval={self.interval}, norm={self.norm():.4g})"


def _samples(x):
    return x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class LinearOp:
    """Dense operator ``X -> Y`` between weighted sample spaces.

    Parameters
    ----------
    matrix : array (m, n)
        Action on sample vectors.
    h_in, h_out : float
        Grid spacings of domain and codomain.
    interval_in, interval_out : tuple, optional
        Domain and codomain intervals; default to ``(0, n * h_in)`` and
        ``(0, m * h_out)``.
    """

    matrix: np.ndarray
    h_in: float
    h_out: float
    interval_in: tuple = None
    interval_out: tuple = None

    def __post_init__(self):
        M = _frozen(self.matrix)
        if M.ndim != 2:
            raise InvalidDimensionError(f"operator matrix must be 2-d, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise InvalidInputError("operator entries must be finite")
        if not (self.h_in > 0 and self.h_out > 0):
            raise InvalidParameterError("grid spacings must be positive")
        object.__setattr__(self, "matrix", M)
        if self.interval_in is None:
            object.__setattr__(self, "interval_in", (0.0, M.shape[1] * self.h_in))
        if self.interval_out is None:
            object.__setattr__(self, "interval_out", (0.0, M.shape[0] * self.h_out))

    @classmethod
    def on(cls, matrix, x):
        """Square operator on the grid of signal ``x``."""
        return cls(matrix, x.h, x.h, x.interval, x.interval)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def scale(self):
        """Ratio ``h_out / h_in`` relating adjoint and transpose."""
        return self.h_out / self.h_in

    def adjoint_matrix(self):
        return self.scale * self.matrix.T

    def adjoint(self):
        return LinearOp(self.adjoint_matrix(), self.h_out, self.h_in,
                        self.interval_out, self.interval_in)

    def gram(self):
        """Matrix of ``B* B`` acting on domain samples."""
        return self.scale * (self.matrix.T @ self.matrix)

    def apply(self, x):
        return Signal(self.matrix @ _samples(x), self.interval_out)

    def __matmul__(self, x):
        if isinstance(x, Signal):
            return self.apply(x)
        return self.matrix @ np.asarray(x)

    def apply_adjoint(self, w):
        return Signal(self.adjoint_matrix() @ _samples(w), self.interval_in)

    def domain_signal(self, samples):
        return Signal(samples, self.interval_in)

    def with_matrix(self, matrix):
        return LinearOp(matrix, self.h_in, self.h_out, self.interval_in, self.interval_out)


@dataclass(frozen=True, eq=False)
class KernelParam:
    """Convolution kernel sampled at offsets ``-K..K`` with spacing ``h``."""

    g: np.ndarray
    h: float

    def __post_init__(self):
        g = _frozen(self.g)
        if g.ndim != 1 or g.size % 2 != 1:
            raise InvalidDimensionError("kernel needs an odd number of samples centred at 0")
        if not np.all(np.isfinite(g)):
            raise InvalidInputError("kernel samples must be finite")
        if not self.h > 0:
            raise InvalidParameterError("kernel spacing must be positive")
        object.__setattr__(self, "g", g)

    @property
    def half_width(self):
        return self.g.size // 2

    def with_samples(self, g):
        return KernelParam(g, self.h)


def _grid_spacing(n, interval):
    if n < 2:
        raise InvalidDimensionError(f"grid size must be >= 2, got {n}")
    a, b = (float(t) for t in interval)
    if not b > a:
        raise InvalidInputError(f"empty interval {interval}")
    return (b - a) / n


def make_integration_operator(n, interval=(0.0, 1.0)):
    """Cumulative integral ``(Ax)(t) = int_a^t x(s) ds``.

    Row ``i`` is ``h * sum_{j <= i} x_j``, i.e. the integral up to the right
    edge of cell ``i``.
    """
    h = _grid_spacing(n, interval)
    M = h * np.tril(np.ones((n, n)))
    iv = tuple(map(float, interval))
    return LinearOp(M, h, h, iv, iv)


def gaussian_kernel(n, interval, sigma, truncate=4.0):
    """Gaussian ``exp(-t^2 / (2 sigma^2))`` on ``|t| <= truncate * sigma``.

    Normalised so that ``h * sum(g) == 1``. The support is clipped to the
    ``n - 1`` offsets a grid of size ``n`` can use.
    """
    if not sigma > 0:
        raise InvalidParameterError(f"kernel width must be positive, got {sigma}")
    h = _grid_spacing(n, interval)
    K = min(int(np.floor(truncate * sigma / h)), n - 1)
    t = h * np.arange(-K, K + 1)
    g = np.exp(-t**2 / (2.0 * sigma**2))
    return KernelParam(g / (h * g.sum()), h)


def convolution_operator(kernel, n, interval=(0.0, 1.0)):
    """Zero-padded convolution ``(g * x)_i = h * sum_j g[i - j] x_j``."""
    h = _grid_spacing(n, interval)
    if not np.isclose(h, kernel.h, rtol=1e-12, atol=0.0):
        raise InvalidDimensionError("kernel spacing differs from the grid spacing")
    K = kernel.half_width
    d = np.arange(n)[:, None] - np.arange(n)[None, :]
    inside = np.abs(d) <= K
    M = np.where(inside, kernel.g[np.clip(d + K, 0, 2 * K)], 0.0) * h
    iv = tuple(map(float, interval))
    return LinearOp(M, h, h, iv, iv)


def make_convolution_operator(n, interval=(0.0, 1.0), sigma=0.03):
    """Gaussian blur operator; see :func:`gaussian_kernel`."""
    return convolution_operator(gaussian_kernel(n, interval, sigma), n, interval)


def operator_norm(op, tol=1e-6, max_iter=10_000, seed=0):
    """Largest singular value of ``op`` in the weighted norms.

    Power iteration on ``B* B`` from a seeded random start; stops once the
    Rayleigh quotient changes by less than ``tol / 10`` relatively. Returns
    0.0 for the zero operator.
    """
    G = op.gram() if isinstance(op, LinearOp) else np.asarray(op, float).T @ np.asarray(op, float)
    if not np.any(G):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            v = rng.standard_normal(G.shape[0])
            v /= np.linalg.norm(v)
            continue
        lam_new = float(v @ w)
        v = w / nw
        if abs(lam_new - lam) <= 0.1 * tol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))
