"""Elementwise activations used by the layer stack and the output heads."""

import numpy as np


def relu(x: np.ndarray) -> np.ndarray:
    """max(0, x), elementwise."""
    return np.maximum(0.0, x)


def relu_grad(x: np.ndarray) -> np.ndarray:
    """Derivative of relu w.r.t. its input (0 at the kink)."""
    return (x > 0.0).astype(np.float64)


def sigmoid(x):
    """1 / (1 + e^-x), computed stably on both tails."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Probability vector(s) over the last axis, with max-subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)
