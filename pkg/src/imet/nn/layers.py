"""Layer forward/backward passes for the fixed layer vocabulary.

Every layer keeps its parameters as float64 numpy arrays and caches what the
backward pass needs during forward. Layers accept either a single sample
(conv/pool: [C,H,W], dense: [F]) or a leading batch axis.
"""

import numpy as np

from ..errors import ConfigError, ShapeError, StateError
from .activations import relu


def _he_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def _as_batch(x, sample_ndim):
    """Return (batched array, was_single_sample)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == sample_ndim:
        return x[np.newaxis], True
    if x.ndim == sample_ndim + 1:
        return x, False
    raise ShapeError(f"expected {sample_ndim}-d sample or batch, got shape {x.shape}")


def _im2col(x, kh, kw):
    """[N,C,H,W] -> [N*Ho*Wo, C*kh*kw] patch matrix (copies)."""
    n, c, h, w = x.shape
    ho, wo = h - kh + 1, w - kw + 1
    s0, s1, s2, s3 = x.strides
    win = np.lib.stride_tricks.as_strided(
        x, (n, ho, wo, c, kh, kw), (s0, s2, s3, s1, s2, s3))
    return win.reshape(n * ho * wo, c * kh * kw)


def _col2im(dcols, x_shape, kh, kw):
    """Scatter-add patch gradients back onto the input grid."""
    n, c, h, w = x_shape
    ho, wo = h - kh + 1, w - kw + 1
    # accumulate channels-last to keep the inner loop transpose-free
    acc = np.zeros((n, h, w, c))
    d = dcols.reshape(n, ho, wo, c, kh, kw)
    for p in range(kh):
        for q in range(kw):
            acc[:, p:p + ho, q:q + wo, :] += d[..., p, q]
    return np.ascontiguousarray(acc.transpose(0, 3, 1, 2))


class Conv2d:
    """Valid-padding stride-1 cross-correlation, optional fused relu."""

    kind = "conv2d"

    def __init__(self, in_channels, out_channels, kernel_size, activation="relu", rng=None):
        if activation not in ("relu", "linear"):
            raise ConfigError(f"unknown activation {activation!r}")
        if rng is None:
            raise ConfigError("Conv2d needs an rng for seeded initialization")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.activation = activation
        fan_in = in_channels * kernel_size * kernel_size
        self.weights = _he_uniform(
            rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        self.bias = np.zeros(out_channels)
        self._cache = None

    def out_shape(self, in_shape):
        c, h, w = in_shape
        k = self.kernel_size
        if c != self.in_channels:
            raise ShapeError(f"conv2d expects {self.in_channels} channels, got {c}")
        if h < k or w < k:
            raise ShapeError(f"conv2d kernel {k}x{k} does not fit input {h}x{w}")
        return (self.out_channels, h - k + 1, w - k + 1)

    def forward(self, x, training=False, rng=None):
        x, single = _as_batch(x, 3)
        n = x.shape[0]
        _, ho, wo = self.out_shape(x.shape[1:])
        k = self.kernel_size
        cols = _im2col(x, k, k)
        z = cols @ self.weights.reshape(self.out_channels, -1).T
        z += self.bias
        if self.activation == "relu":
            relu_mask = z > 0.0  # kept in GEMM layout for the backward pass
            np.maximum(z, 0.0, out=z)
        else:
            relu_mask = None
        out = z.reshape(n, ho, wo, self.out_channels).transpose(0, 3, 1, 2)
        self._cache = (x.shape, cols, relu_mask, single)
        return out[0] if single else out

    def backward(self, grad):
        if self._cache is None:
            raise StateError("conv2d backward called before forward")
        x_shape, cols, relu_mask, single = self._cache
        grad = np.asarray(grad, dtype=np.float64)
        if grad.ndim == 3:
            grad = grad[np.newaxis]
        k = self.kernel_size
        # one owned copy so the in-place mask multiply cannot alias the caller's grad
        gmat = np.array(grad.transpose(0, 2, 3, 1), copy=True).reshape(-1, self.out_channels)
        if relu_mask is not None:
            gmat *= relu_mask
        self.grad_weights = (gmat.T @ cols).reshape(self.weights.shape)
        self.grad_bias = gmat.sum(axis=0)
        dcols = gmat @ self.weights.reshape(self.out_channels, -1)
        dx = _col2im(dcols, x_shape, k, k)
        return dx[0] if single else dx


class MaxPool2d:
    """Non-overlapping max pooling; odd trailing rows/columns are dropped."""

    kind = "maxpool2d"

    def __init__(self, window=2):
        if window < 2:
            raise ConfigError("pool window must be >= 2")
        self.window = window
        self._cache = None

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if h < self.window or w < self.window:
            raise ShapeError(f"cannot pool {h}x{w} input with window {self.window}")
        return (c, h // self.window, w // self.window)

    def forward(self, x, training=False, rng=None):
        x, single = _as_batch(x, 3)
        n, c, h, w = x.shape
        _, ho, wo = self.out_shape(x.shape[1:])
        k = self.window
        v = x[:, :, :ho * k, :wo * k]
        s = v.strides
        win = np.lib.stride_tricks.as_strided(
            v, (n, c, ho, wo, k, k),
            (s[0], s[1], s[2] * k, s[3] * k, s[2], s[3])).reshape(n, c, ho, wo, k * k)
        argmax = win.argmax(axis=-1)
        out = np.take_along_axis(win, argmax[..., np.newaxis], axis=-1)[..., 0]
        self._cache = (x.shape, argmax, single)
        return out[0] if single else out

    def backward(self, grad):
        if self._cache is None:
            raise StateError("maxpool2d backward called before forward")
        x_shape, argmax, single = self._cache
        grad = np.asarray(grad, dtype=np.float64)
        if grad.ndim == 3:
            grad = grad[np.newaxis]
        n, c, h, w = x_shape
        ho, wo = argmax.shape[2], argmax.shape[3]
        k = self.window
        dwin = np.zeros((n, c, ho, wo, k * k))
        np.put_along_axis(dwin, argmax[..., np.newaxis], grad[..., np.newaxis], axis=-1)
        dx = np.zeros(x_shape)
        dx[:, :, :ho * k, :wo * k] = (
            dwin.reshape(n, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, ho * k, wo * k))
        return dx[0] if single else dx


class Dropout:
    """Inverted dropout: zero with probability `rate`, scale survivors."""

    kind = "dropout"

    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._cache = None

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, training=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if not training or self.rate == 0.0:
            self._cache = ("identity",)
            return x
        if rng is None:
            raise ConfigError("dropout in training mode needs an rng stream")
        keep = rng.random(x.shape) >= self.rate
        scale = 1.0 / (1.0 - self.rate)
        self._cache = ("mask", keep, scale)
        return x * keep * scale

    def backward(self, grad):
        if self._cache is None:
            raise StateError("dropout backward called before forward")
        grad = np.asarray(grad, dtype=np.float64)
        if self._cache[0] == "identity":
            return grad
        _, keep, scale = self._cache
        return grad * keep * scale


class Flatten:
    """Collapse all non-batch axes into one feature axis."""

    kind = "flatten"

    def __init__(self):
        self._cache = None

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x, training=False, rng=None):
        x, single = _as_batch(x, 3)
        self._cache = (x.shape, single)
        out = x.reshape(x.shape[0], -1)
        return out[0] if single else out

    def backward(self, grad):
        if self._cache is None:
            raise StateError("flatten backward called before forward")
        x_shape, single = self._cache
        grad = np.asarray(grad, dtype=np.float64)
        if grad.ndim == 1:
            grad = grad[np.newaxis]
        dx = grad.reshape(x_shape)
        return dx[0] if single else dx


class Dense:
    """Fully connected layer out = W x + b, optional fused relu."""

    kind = "dense"

    def __init__(self, in_units, out_units, activation="relu", rng=None):
        if activation not in ("relu", "linear"):
            raise ConfigError(f"unknown activation {activation!r}")
        if rng is None:
            raise ConfigError("Dense needs an rng for seeded initialization")
        self.in_units = in_units
        self.out_units = out_units
        self.activation = activation
        self.weights = _he_uniform(rng, (out_units, in_units), in_units)
        self.bias = np.zeros(out_units)
        self._cache = None

    def out_shape(self, in_shape):
        if len(in_shape) != 1 or in_shape[0] != self.in_units:
            raise ShapeError(f"dense expects {self.in_units} inputs, got shape {in_shape}")
        return (self.out_units,)

    def forward(self, x, training=False, rng=None):
        x, single = _as_batch(x, 1)
        self.out_shape(x.shape[1:])
        z = x @ self.weights.T + self.bias
        out = relu(z) if self.activation == "relu" else z
        self._cache = (x, z > 0.0 if self.activation == "relu" else None, single)
        return out[0] if single else out

    def backward(self, grad):
        if self._cache is None:
            raise StateError("dense backward called before forward")
        x, relu_mask, single = self._cache
        grad = np.asarray(grad, dtype=np.float64)
        if grad.ndim == 1:
            grad = grad[np.newaxis]
        if relu_mask is not None:
            grad = grad * relu_mask
        self.grad_weights = grad.T @ x
        self.grad_bias = grad.sum(axis=0)
        dx = grad @ self.weights
        return dx[0] if single else dx


PARAM_KINDS = ("conv2d", "dense")
