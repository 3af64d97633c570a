"""Cross-entropy losses for the softmax and sigmoid output heads."""

import numpy as np

from ..errors import LabelError
from .activations import sigmoid, softmax

LOG_CLAMP = 1e-12


def cross_entropy_loss(predicted, true_label: int) -> float:
    """-log of the probability assigned to the true class.

    `predicted` is a probability vector (softmax head) or a scalar P(class 1)
    (sigmoid head). Probabilities are clamped away from 0 and 1 before the log.
    """
    p = np.asarray(predicted, dtype=np.float64)
    if p.ndim == 0:
        if true_label not in (0, 1):
            raise LabelError(f"binary label must be 0 or 1, got {true_label}")
        prob = p if true_label == 1 else 1.0 - p
    else:
        if not 0 <= true_label < p.shape[-1]:
            raise LabelError(f"label {true_label} out of range for {p.shape[-1]} classes")
        prob = p[true_label]
    return float(-np.log(np.clip(prob, LOG_CLAMP, 1.0 - LOG_CLAMP)))


def softmax_cross_entropy(logits, labels):
    """Mean loss and d(loss)/d(logits) for a batch under the softmax head."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.min() < 0 or labels.max() >= k:
        raise LabelError(f"labels out of range for {k} classes")
    probs = softmax(logits)
    picked = np.clip(probs[np.arange(n), labels], LOG_CLAMP, 1.0 - LOG_CLAMP)
    loss = float(-np.log(picked).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def sigmoid_cross_entropy(logits, labels):
    """Mean loss and d(loss)/d(logits) for a batch under the sigmoid head."""
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 1:
        raise LabelError("sigmoid head labels must be 0 or 1")
    y = labels.astype(np.float64)
    p = sigmoid(z)
    picked = np.clip(np.where(y == 1.0, p, 1.0 - p), LOG_CLAMP, 1.0 - LOG_CLAMP)
    loss = float(-np.log(picked).mean())
    dlogits = ((p - y) / z.shape[0]).reshape(-1, 1)
    return loss, dlogits
