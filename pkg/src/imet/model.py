"""The 9-layer CNN: construction, training rounds, and prediction."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SamplingError, ShapeError
from .nn import Adam, Conv2d, Dense, Dropout, Flatten, MaxPool2d
from .nn.activations import sigmoid, softmax
from .nn.loss import sigmoid_cross_entropy, softmax_cross_entropy

PREDICT_CHUNK = 256


@dataclass
class TrainConfig:
    """Knobs for one technique run."""

    epochs_total: int = 100
    n_rep: int = 5
    initial_per_class_k: int | None = None  # None: min class size, resolved at run time
    batch_size: int = 128
    learning_rate: float = 0.001
    weight_decay: float = 1e-4
    seed: int = 0

    def validate(self):
        if self.epochs_total < 1:
            raise ConfigError("epochs_total must be >= 1")
        if self.n_rep < 1:
            raise ConfigError("n_rep must be >= 1")
        if self.epochs_total < self.n_rep:
            raise ConfigError("epochs_total must be >= n_rep (each round needs an epoch)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


class CnnModel:
    """Ordered layer stack plus an output head (softmax or sigmoid)."""

    def __init__(self, layers, head_kind, n_classes, input_shape):
        self.layers = layers
        self.head_kind = head_kind
        self.n_classes = n_classes
        self.input_shape = tuple(input_shape)  # (C, H, W)

    def forward(self, x, training=False, rng=None):
        """Run the stack on [N,C,H,W] (or a single [C,H,W]) input; returns logits."""
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def backward(self, dlogits):
        """Propagate a logits gradient through the stack; returns the input gradient."""
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self):
        out = []
        for layer in self.layers:
            if hasattr(layer, "weights"):
                out.append(layer.weights)
                out.append(layer.bias)
        return out

    def gradients(self):
        out = []
        for layer in self.layers:
            if hasattr(layer, "weights"):
                out.append(layer.grad_weights)
                out.append(layer.grad_bias)
        return out

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def loss_and_backward(self, x, labels, rng):
        """One training-mode forward/backward; gradients land on the layers."""
        logits = self.forward(x, training=True, rng=rng)
        if self.head_kind == "softmax":
            loss, dlogits = softmax_cross_entropy(logits, labels)
        else:
            loss, dlogits = sigmoid_cross_entropy(logits, labels)
        self.backward(dlogits)
        return loss

    def predict(self, images):
        """Labels and scores for a batch of [N,C,H,W] images (inference mode).

        Softmax head: scores are [N, n_classes] probability rows, label is the
        argmax (ties go to the lowest class index). Sigmoid head: scores are
        scalar P(class 1) per sample, label is 1 iff score > 0.5.
        """
        images = np.asarray(images, dtype=np.float64)
        if images.ndim == 3:
            images = images[np.newaxis]
        if images.shape[1:] != self.input_shape:
            raise ShapeError(
                f"model expects input {self.input_shape}, got {images.shape[1:]}")
        scores = []
        for start in range(0, images.shape[0], PREDICT_CHUNK):
            logits = self.forward(images[start:start + PREDICT_CHUNK], training=False)
            if self.head_kind == "softmax":
                scores.append(softmax(logits))
            else:
                scores.append(sigmoid(logits).reshape(-1))
        scores = np.concatenate(scores, axis=0)
        if self.head_kind == "softmax":
            labels = scores.argmax(axis=1)
        else:
            labels = (scores > 0.5).astype(np.int64)
        return labels, scores


def build_cnn(input_height: int, input_width: int, channels: int, n_classes: int,
              seed: int) -> CnnModel:
    """Build the fixed stack: conv32/3x3, pool2, conv32/3x3, pool2, dropout(0.5),
    flatten, dense 25, dense 16, dense head. Binary problems get a single
    sigmoid unit, multi-class problems a softmax over n_classes units."""
    if n_classes < 2:
        raise ConfigError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    head_kind = "sigmoid" if n_classes == 2 else "softmax"
    head_units = 1 if head_kind == "sigmoid" else n_classes

    layers = [
        Conv2d(channels, 32, 3, activation="relu", rng=rng),
        MaxPool2d(2),
        Conv2d(32, 32, 3, activation="relu", rng=rng),
        MaxPool2d(2),
        Dropout(0.5),
        Flatten(),
    ]
    shape = (channels, input_height, input_width)
    for layer in layers:
        shape = layer.out_shape(shape)
        if any(s < 1 for s in shape):
            raise ShapeError(f"input {input_height}x{input_width} too small for the stack")
    flat = shape[0]
    layers += [
        Dense(flat, 25, activation="relu", rng=rng),
        Dense(25, 16, activation="relu", rng=rng),
        Dense(16, head_units, activation="linear", rng=rng),
    ]
    return CnnModel(layers, head_kind, n_classes, (channels, input_height, input_width))


def train_epochs(model: CnnModel, batch, dataset, epochs: int, config: TrainConfig,
                 rng) -> list[float]:
    """Train the model in place on the batch's indices for `epochs` epochs.

    The index order is reshuffled from `rng` every epoch; dropout masks draw
    from the same stream. Returns one mean-loss entry per epoch.
    """
    indices = np.asarray(getattr(batch, "indices", batch), dtype=np.int64)
    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    if indices.size == 0:
        raise SamplingError("cannot train on an empty batch")
    n = dataset.n_samples
    if indices.min() < 0 or indices.max() >= n:
        raise SamplingError(f"batch indices out of range for dataset of size {n}")

    inputs = dataset.inputs()
    labels = dataset.labels
    optimizer = Adam(model.parameters(), learning_rate=config.learning_rate,
                     weight_decay=config.weight_decay)
    trace = []
    for _ in range(epochs):
        order = rng.permutation(indices.size)
        shuffled = indices[order]
        total, seen = 0.0, 0
        for start in range(0, shuffled.size, config.batch_size):
            idx = shuffled[start:start + config.batch_size]
            loss = model.loss_and_backward(inputs[idx], labels[idx], rng)
            optimizer.step(model.gradients())
            total += loss * idx.size
            seen += idx.size
        trace.append(total / seen)
    return trace
