"""MedMNIST-style NPZ archives: loading, normalization, class inventory."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArchiveError, ConfigError, LabelError, StateError

SPLITS = ("train", "val", "test")
ARCHIVE_KEYS = tuple(f"{s}_{part}" for s in SPLITS for part in ("images", "labels"))


@dataclass
class ImageDataset:
    """One labeled split of fixed-size single-channel images."""

    images: np.ndarray  # [N, H, W, C]; uint8 raw, float64 in [0,1] once normalized
    labels: np.ndarray  # [N] int64
    n_classes: int
    split_name: str
    normalized: bool = False

    @property
    def n_samples(self) -> int:
        return int(self.images.shape[0])

    def inputs(self) -> np.ndarray:
        """Images in [N, C, H, W] layout for the model (a view, not a copy)."""
        return np.moveaxis(self.images, -1, 1)

    def subset(self, indices) -> "ImageDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return replace(self, images=self.images[indices], labels=self.labels[indices])


def _clean_labels(raw, key):
    labels = np.asarray(raw)
    if labels.ndim == 2 and labels.shape[1] == 1:
        labels = labels[:, 0]
    if labels.ndim != 1:
        raise ArchiveError(f"{key} must be shape N or Nx1, got {labels.shape}")
    labels = labels.astype(np.int64)
    if labels.size and labels.min() < 0:
        raise ArchiveError(f"{key} contains negative labels")
    return labels


def load_dataset(path, split_name: str) -> ImageDataset:
    """Load one split of a six-key NPZ archive, preserving raw 8-bit pixels.

    Class count is inferred from the labels of all three splits so every
    split of one archive agrees on it.
    """
    if split_name not in SPLITS:
        raise ConfigError(f"split must be one of {SPLITS}, got {split_name!r}")
    with np.load(path) as archive:
        missing = [k for k in ARCHIVE_KEYS if k not in archive.files]
        if missing:
            raise ArchiveError(f"{path}: missing keys {missing}")
        images = np.asarray(archive[f"{split_name}_images"])
        labels = _clean_labels(archive[f"{split_name}_labels"], f"{split_name}_labels")
        n_classes = 0
        for split in SPLITS:
            split_labels = _clean_labels(archive[f"{split}_labels"], f"{split}_labels")
            if split_labels.size:
                n_classes = max(n_classes, int(split_labels.max()) + 1)

    if images.ndim == 3:
        images = images[..., np.newaxis]
    if images.ndim != 4:
        raise ArchiveError(f"{split_name}_images must be NxHxW or NxHxWxC, got {images.shape}")
    if images.shape[-1] != 1:
        raise ArchiveError(
            f"only single-channel images are supported, got C={images.shape[-1]}")
    if images.shape[0] != labels.shape[0]:
        raise ArchiveError(
            f"{split_name}: {images.shape[0]} images vs {labels.shape[0]} labels")
    if n_classes < 2:
        raise ArchiveError("archive labels span fewer than 2 classes")
    return ImageDataset(images=images, labels=labels, n_classes=n_classes,
                        split_name=split_name, normalized=False)


def normalize(dataset: ImageDataset) -> ImageDataset:
    """Scale 8-bit pixels into [0,1] (divide by 255). Refuses to run twice."""
    if dataset.normalized:
        raise StateError(f"{dataset.split_name} split is already normalized")
    images = dataset.images.astype(np.float64) / 255.0
    return replace(dataset, images=images, normalized=True)


def class_histogram(dataset: ImageDataset) -> np.ndarray:
    """Per-class sample counts; sums to the split size."""
    if dataset.labels.size and dataset.labels.max() >= dataset.n_classes:
        raise LabelError("labels exceed the declared class count")
    return np.bincount(dataset.labels, minlength=dataset.n_classes)
