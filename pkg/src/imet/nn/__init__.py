"""Minimal dense/convolutional network engine (float64, CPU)."""

from .activations import relu, relu_grad, sigmoid, softmax
from .adam import Adam, adam_update
from .layers import Conv2d, Dense, Dropout, Flatten, MaxPool2d
from .loss import cross_entropy_loss, sigmoid_cross_entropy, softmax_cross_entropy

__all__ = [
    "relu", "relu_grad", "sigmoid", "softmax",
    "Adam", "adam_update",
    "Conv2d", "Dense", "Dropout", "Flatten", "MaxPool2d",
    "cross_entropy_loss", "sigmoid_cross_entropy", "softmax_cross_entropy",
]
