"""Model checkpoints: a JSON manifest plus a little-endian float64 blob."""

import json
from pathlib import Path

import numpy as np

from .errors import ArchiveError
from .fileio import atomic_write_bytes, atomic_write_text
from .model import CnnModel
from .nn import Conv2d, Dense, Dropout, Flatten, MaxPool2d

FORMAT = "imet-checkpoint"
VERSION = 1
BLOB_DTYPE = "<f8"


def _layer_meta(layer):
    meta = {"kind": layer.kind}
    if layer.kind == "conv2d":
        meta.update(in_channels=layer.in_channels, out_channels=layer.out_channels,
                    kernel_size=layer.kernel_size, activation=layer.activation)
    elif layer.kind == "dense":
        meta.update(in_units=layer.in_units, out_units=layer.out_units,
                    activation=layer.activation)
    elif layer.kind == "maxpool2d":
        meta["window"] = layer.window
    elif layer.kind == "dropout":
        meta["rate"] = layer.rate
    if hasattr(layer, "weights"):
        meta["weights_shape"] = list(layer.weights.shape)
        meta["bias_shape"] = list(layer.bias.shape)
    return meta


def save_checkpoint(model: CnnModel, path) -> Path:
    """Write `<path>` (manifest) and a sibling `.bin` blob; returns the manifest path."""
    path = Path(path)
    blob_path = path.with_suffix(".bin")
    params = model.parameters()
    blob = np.concatenate([p.ravel() for p in params]).astype(BLOB_DTYPE)
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "input_shape": list(model.input_shape),
        "n_classes": model.n_classes,
        "head_kind": model.head_kind,
        "layers": [_layer_meta(layer) for layer in model.layers],
        "blob": {"file": blob_path.name, "dtype": BLOB_DTYPE, "count": int(blob.size)},
    }
    atomic_write_bytes(blob_path, blob.tobytes())
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _build_layer(meta):
    kind = meta["kind"]
    # placeholder rng: stored weights overwrite the fresh initialization
    rng = np.random.default_rng(0)
    if kind == "conv2d":
        return Conv2d(meta["in_channels"], meta["out_channels"], meta["kernel_size"],
                      activation=meta["activation"], rng=rng)
    if kind == "dense":
        return Dense(meta["in_units"], meta["out_units"],
                     activation=meta["activation"], rng=rng)
    if kind == "maxpool2d":
        return MaxPool2d(meta["window"])
    if kind == "dropout":
        return Dropout(meta["rate"])
    if kind == "flatten":
        return Flatten()
    raise ArchiveError(f"unknown layer kind {kind!r} in checkpoint")


def load_checkpoint(path) -> CnnModel:
    """Rebuild a model from a manifest written by save_checkpoint."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"{path}: not a valid checkpoint manifest: {exc}") from exc
    if manifest.get("format") != FORMAT:
        raise ArchiveError(f"{path}: not a {FORMAT} manifest")
    blob_path = path.parent / manifest["blob"]["file"]
    values = np.frombuffer(blob_path.read_bytes(), dtype=manifest["blob"]["dtype"])
    if values.size != manifest["blob"]["count"]:
        raise ArchiveError(
            f"{blob_path}: expected {manifest['blob']['count']} values, got {values.size}")

    layers = [_build_layer(meta) for meta in manifest["layers"]]
    model = CnnModel(layers, manifest["head_kind"], manifest["n_classes"],
                     tuple(manifest["input_shape"]))
    offset = 0
    for layer, meta in zip(layers, manifest["layers"]):
        if not hasattr(layer, "weights"):
            continue
        for attr, shape in (("weights", meta["weights_shape"]), ("bias", meta["bias_shape"])):
            count = int(np.prod(shape))
            chunk = values[offset:offset + count]
            if chunk.size != count:
                raise ArchiveError(f"{blob_path}: blob too short for {attr} {shape}")
            setattr(layer, attr, chunk.reshape(shape).astype(np.float64))
            offset += count
    if offset != values.size:
        raise ArchiveError(f"{blob_path}: {values.size - offset} trailing values in blob")
    return model
