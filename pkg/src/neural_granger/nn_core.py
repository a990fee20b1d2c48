"""Dense numeric primitives shared by the componentwise networks.

Everything here works in float64. Activations come with their derivative
expressed in terms of the activation *output*, which is what the hand-written
backward passes in :mod:`neural_granger.cmlp` and :mod:`neural_granger.clstm`
keep around.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

ACTIVATIONS = ("tanh", "sigmoid", "linear")


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    # Written through tanh, so it cannot overflow for any input.
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def activation(kind: str, x: np.ndarray) -> np.ndarray:
    """Apply the activation ``kind`` elementwise.

    Parameters
    ----------
    kind : {"tanh", "sigmoid", "linear"}
    x : array_like
        Finite input values.
    """
    x = np.asarray(x, dtype=np.float64)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "linear":
        return x.copy()
    raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def activation_grad(kind: str, out: np.ndarray) -> np.ndarray:
    """Derivative of the activation evaluated from its output ``out``."""
    if kind == "tanh":
        return 1.0 - out * out
    if kind == "sigmoid":
        return out * (1.0 - out)
    if kind == "linear":
        return np.ones_like(out)
    raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed`` optionally split into an independent sub-stream.

    ``make_rng(seed, i)`` gives the stream used for output series ``i`` so
    that fitting series in any order yields identical initializations.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def init_params(shape: tuple[int, int], scheme: str = "glorot_uniform",
                seed: int | np.random.Generator = 0) -> np.ndarray:
    """Draw a weight matrix.

    ``"glorot_uniform"`` samples i.i.d. from U[-a, a] with
    ``a = sqrt(6 / (rows + cols))``; ``"zeros"`` is used for biases.
    """
    rows, cols = shape
    if rows < 1 or cols < 1:
        raise ValueError(f"init_params needs positive dimensions, got {shape}")
    if scheme == "zeros":
        return np.zeros((rows, cols))
    if scheme != "glorot_uniform":
        raise ValueError(f"unknown init scheme {scheme!r}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def finite_diff_grad(f: Callable[[np.ndarray], float], theta: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    Parameters
    ----------
    f : callable
        Maps a parameter vector (same shape as ``theta``) to a float.
    theta : ndarray
        Point at which to differentiate. Not modified.
    h : float
        Step, must be positive.

    Returns
    -------
    ndarray
        ``(f(theta + h e_i) - f(theta - h e_i)) / (2 h)`` for every entry.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    theta = np.array(theta, dtype=np.float64)
    flat = theta.reshape(-1)
    grad = np.empty(flat.size)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(theta))
        flat[i] = orig - h
        fm = float(f(theta))
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value at coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad.reshape(theta.shape)


def check_finite(name: str, *arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"{name}: non-finite values encountered")
