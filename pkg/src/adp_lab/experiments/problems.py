"""Ground truths, forward models, noise and error metrics for the experiments."""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidDimensionError, InvalidInputError, InvalidParameterError
from ..operators import Signal, make_convolution_operator, make_integration_operator

__all__ = [
    "TRUTH_NAMES",
    "OPERATOR_KINDS",
    "make_ground_truths",
    "make_operator",
    "add_noise",
    "metrics",
    "Instance",
    "build_instance",
]

TRUTH_NAMES = ("step", "hat", "sines")
OPERATOR_KINDS = ("integration", "convolution")


def _step(t):
    # three levels: 0, 1 and 1/2
    return np.where((t >= 0.2) & (t < 0.5), 1.0, np.where((t >= 0.5) & (t < 0.8), 0.5, 0.0))


def _hat(t):
    return np.maximum(0.0, 1.0 - np.abs(t - 0.5) / 0.25)


def _sines(t):
    return np.sin(2 * np.pi * t) + 0.5 * np.sin(6 * np.pi * t)


_PROFILES = {"step": _step, "hat": _hat, "sines": _sines}


def make_ground_truths(n=128, interval=(0.0, 1.0)):
    """The three test signals keyed by name: a step, a hat and two sinusoids.

    The profiles are defined on the unit interval and mapped affinely onto
    ``interval``.
    """
    if n < 2:
        raise InvalidDimensionError(f"grid size must be >= 2, got {n}")
    a, b = interval
    base = Signal(np.zeros(n), interval)
    s = (base.grid - a) / (b - a)
    return {name: base.like(f(s)) for name, f in _PROFILES.items()}


def make_operator(kind, n=128, interval=(0.0, 1.0), sigma=0.03):
    """Forward operator by name; ``sigma`` is relative to the interval length."""
    if kind == "integration":
        return make_integration_operator(n, interval)
    if kind == "convolution":
        return make_convolution_operator(n, interval, sigma * (interval[1] - interval[0]))
    raise InvalidParameterError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")


def add_noise(y, target_psnr, seed=0):
    """Add Gaussian noise rescaled to hit ``target_psnr`` exactly.

    The PSNR is ``20 log10(max|y| / rmse)`` with the plain root-mean-square
    of the noise samples. Returns the noisy signal and the noise level
    ``delta = ||noise||`` in the weighted norm.
    """
    if not target_psnr > 0:
        raise InvalidParameterError(f"PSNR must be positive, got {target_psnr}")
    peak = float(np.max(np.abs(y.samples)))
    if peak == 0.0:
        raise InvalidInputError("cannot set a PSNR for zero data")
    e = np.random.default_rng(seed).standard_normal(y.n)
    rmse = peak * 10.0 ** (-target_psnr / 20.0)
    e *= rmse / np.sqrt(np.mean(e * e))
    noise = y.like(e)
    return y.like(y.samples + e), noise.norm()


def metrics(x, x_ref):
    """L2 error in the weighted norm and PSNR with peak ``max|x_ref|``.

    A perfect match has PSNR ``inf``.
    """
    if x.n != x_ref.n:
        raise InvalidInputError(f"length mismatch: {x.n} vs {x_ref.n}")
    d = x.samples - x_ref.samples
    rmse = float(np.sqrt(np.mean(d * d)))
    l2 = float(np.sqrt(x_ref.h * float(d @ d)))
    peak = float(np.max(np.abs(x_ref.samples)))
    psnr = float("inf") if rmse == 0.0 else 20.0 * np.log10(peak / rmse)
    return {"l2_error": l2, "psnr": float(psnr)}


@dataclass(frozen=True, eq=False)
class Instance:
    """One inverse problem: operator, truth, exact and noisy data."""

    kind: str
    truth_name: str
    A: object
    x_true: Signal
    y_exact: Signal
    y: Signal
    delta: float


def build_instance(kind, truth_name, n=128, interval=(0.0, 1.0), sigma=0.03, psnr=40.0, seed=0):
    truths = make_ground_truths(n, interval)
    if truth_name not in truths:
        raise InvalidParameterError(f"unknown ground truth {truth_name!r}; expected one of {TRUTH_NAMES}")
    A = make_operator(kind, n, interval, sigma)
    x = truths[truth_name]
    y0 = A.apply(x)
    y, delta = add_noise(y0, psnr, seed)
    return Instance(kind, truth_name, A, x, y0, y, delta)
