"""ADAM with decoupled weight decay."""

import numpy as np

from ..errors import ShapeError


def adam_update(param, grad, m, v, step, lr, weight_decay, beta1, beta2, eps):
    """Apply one bias-corrected ADAM update to `param` in place.

    Weight decay is decoupled: parameters shrink by lr*wd*param before the
    adaptive step. `step` is the 1-based update count.
    """
    if param.shape != grad.shape:
        raise ShapeError(f"gradient shape {grad.shape} != parameter shape {param.shape}")
    if weight_decay:
        param -= lr * weight_decay * param
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Optimizer state over a fixed list of parameter arrays (held by reference)."""

    def __init__(self, params, learning_rate=0.001, weight_decay=1e-4,
                 beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.first_moment = [np.zeros_like(p) for p in self.params]
        self.second_moment = [np.zeros_like(p) for p in self.params]
        self.step_count = 0

    def step(self, grads):
        """Consume one gradient per parameter and update all parameters in place."""
        if len(grads) != len(self.params):
            raise ShapeError(f"expected {len(self.params)} gradients, got {len(grads)}")
        self.step_count += 1
        for p, g, m, v in zip(self.params, grads, self.first_moment, self.second_moment):
            adam_update(p, np.asarray(g, dtype=np.float64), m, v, self.step_count,
                        self.learning_rate, self.weight_decay,
                        self.beta1, self.beta2, self.epsilon)
