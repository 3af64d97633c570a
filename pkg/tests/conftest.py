"""Shared fixtures: synthetic band-pattern image archives in the NPZ layout."""

import numpy as np
import pytest

SIZE = 28


def band_masks(size=SIZE):
    """Four oriented bright bands, one per class."""
    yy, xx = np.mgrid[0:size, 0:size]
    return [
        np.abs(yy - size // 2) < 3,
        np.abs(xx - size // 2) < 3,
        np.abs(yy - xx) < 3,
        np.abs(yy + xx - (size - 1)) < 3,
    ]


def class_images(rng, n, class_id, noise, lo=0.4, hi=0.9):
    base = band_masks()[class_id].astype(float)
    amp = rng.uniform(lo, hi, size=(n, 1, 1))
    imgs = base * amp + rng.normal(0.0, noise, (n, SIZE, SIZE))
    return (np.clip(imgs, 0.0, 1.0) * 255).astype(np.uint8)


def make_split(rng, sizes, noise):
    imgs, labels = [], []
    for k, nk in enumerate(sizes):
        imgs.append(class_images(rng, nk, k, noise[k]))
        labels.append(np.full(nk, k, dtype=np.int64))
    images = np.concatenate(imgs)
    labels = np.concatenate(labels)
    order = rng.permutation(labels.size)
    return images[order], labels[order]


def make_archive(path, seed, train_sizes, val_sizes, test_sizes, noise):
    """Write a six-key NPZ archive of uint8 28x28 band images."""
    rng = np.random.default_rng(seed)
    tr_images, tr_labels = make_split(rng, train_sizes, noise)
    va_images, va_labels = make_split(rng, val_sizes, noise)
    te_images, te_labels = make_split(rng, test_sizes, noise)
    np.savez_compressed(
        path,
        train_images=tr_images, train_labels=tr_labels,
        val_images=va_images, val_labels=va_labels,
        test_images=te_images, test_labels=te_labels)
    return path


@pytest.fixture(scope="session")
def binary_archive(tmp_path_factory):
    """Small imbalanced binary archive for fast pipeline tests."""
    path = tmp_path_factory.mktemp("data") / "binary.npz"
    return make_archive(path, seed=11, train_sizes=(120, 360), val_sizes=(20, 60),
                        test_sizes=(40, 120), noise=(0.35, 0.3))


@pytest.fixture(scope="session")
def multiclass_archive(tmp_path_factory):
    """Small 4-class archive for multiclass pipeline tests."""
    path = tmp_path_factory.mktemp("data") / "multi.npz"
    return make_archive(path, seed=12, train_sizes=(60, 90, 120, 150),
                        val_sizes=(12, 12, 12, 12), test_sizes=(25, 25, 25, 25),
                        noise=(0.3, 0.3, 0.3, 0.3))
