"""Full technique runs: round loop, test/validation evaluation, report files."""

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .data import load_dataset, normalize
from .errors import ConfigError, CurveError
from .fileio import atomic_write_text
from .metrics import MetricsReport, metrics_report
from .model import CnnModel, TrainConfig, build_cnn, train_epochs
from .sampling import (
    INITIAL,
    SampleBatch,
    allocate_quotas,
    batch_composition,
    build_eval_subset,
    equal_sample,
    evaluate_misclassifications,
    imet_sample,
    partition_by_class,
    weighted_sample,
)

TECHNIQUES = ("equal", "weighted", "imet", "baseline")

TECHNIQUE_LABELS = {
    "equal": "Equal Class Sampling",
    "weighted": "Weighted Sampling",
    "imet": "IMET",
    "baseline": "Baseline CNN",
}


@dataclass
class RunConfig:
    """Everything one technique run needs; flat-JSON round-trippable."""

    technique: str
    dataset_path: str
    train: TrainConfig = field(default_factory=TrainConfig)
    budget: int | None = None  # weighted/imet per-round budget; None: n * min class
    m: int | None = None       # equal-sampling per-class size; None: min class size
    output_dir: str | None = None

    def to_flat_dict(self) -> dict:
        flat = {"technique": self.technique, "dataset_path": self.dataset_path,
                "budget": self.budget, "m": self.m, "output_dir": self.output_dir}
        flat.update(asdict(self.train))
        return flat

    @classmethod
    def from_flat_dict(cls, flat: dict) -> "RunConfig":
        flat = dict(flat)
        train_fields = {f for f in TrainConfig.__dataclass_fields__}
        train_kwargs = {k: flat.pop(k) for k in list(flat) if k in train_fields}
        known = {f for f in cls.__dataclass_fields__ if f != "train"}
        unknown = [k for k in flat if k not in known]
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(train=TrainConfig(**train_kwargs), **flat)


@dataclass
class RunReport:
    """One run's full audit trail plus the trained model."""

    config: dict
    technique: str
    parameter_count: int
    rounds: list
    metrics: MetricsReport
    validation: MetricsReport | None
    validation_note: str | None
    samples_with_duplicates: int
    samples_unique: int
    wall_clock_seconds: float
    model: CnnModel


def _epoch_schedule(total: int, rounds: int) -> list[int]:
    """Split the epoch budget evenly across rounds; remainder to the final round."""
    base, extra = divmod(total, rounds)
    if base < 1:
        raise ConfigError(f"epochs_total={total} cannot give {rounds} rounds an epoch each")
    schedule = [base] * rounds
    schedule[-1] += extra
    return schedule


def _as_initial(batch: SampleBatch) -> SampleBatch:
    return SampleBatch(indices=batch.indices,
                       provenance=np.full(batch.indices.size, INITIAL, dtype="<U13"))


def _run(config: RunConfig, technique: str) -> RunReport:
    started = time.perf_counter()
    cfg = config.train
    cfg.validate()

    train_ds = normalize(load_dataset(config.dataset_path, "train"))
    val_ds = normalize(load_dataset(config.dataset_path, "val"))
    test_ds = normalize(load_dataset(config.dataset_path, "test"))
    n = train_ds.n_classes
    index = partition_by_class(train_ds.labels, n)
    min_class = index.min_class_size()

    m = config.m if config.m is not None else min_class
    k = cfg.initial_per_class_k if cfg.initial_per_class_k is not None else min_class
    budget = config.budget if config.budget is not None else n * min_class

    root = np.random.SeedSequence(cfg.seed)
    init_stream, sampler_stream, shuffle_stream = root.spawn(3)
    sampler_rng = np.random.default_rng(sampler_stream)
    train_rng = np.random.default_rng(shuffle_stream)

    height, width, channels = train_ds.images.shape[1:4]
    model = build_cnn(height, width, channels, n, seed=init_stream)

    rounds: list[dict] = []
    batches: list[np.ndarray] = []

    def do_round(number, kind, batch, epochs, quotas, weights=None):
        trace = train_epochs(model, batch, train_ds, epochs, cfg, train_rng)
        composition = batch_composition(batch, train_ds.labels, n)
        for row, quota in zip(composition, quotas):
            row["quota"] = int(quota)
        record = {"round": number, "kind": kind, "batch_size": batch.size,
                  "epochs": epochs, "loss_trace": trace, "composition": composition}
        if weights is not None:
            record["weights_percent"] = [float(p) for p in weights]
        rounds.append(record)
        batches.append(batch.indices)

    if technique == "equal":
        schedule = _epoch_schedule(cfg.epochs_total, cfg.n_rep)
        for i, epochs in enumerate(schedule, start=1):
            batch = equal_sample(index, m, sampler_rng)
            do_round(i, "equal", batch, epochs, quotas=[m] * n)
    elif technique == "baseline":
        all_train = np.arange(train_ds.n_samples, dtype=np.int64)
        batch = _as_initial(SampleBatch(all_train, np.empty(0)))
        do_round(1, "baseline", batch, cfg.epochs_total, quotas=index.sizes())
    elif technique == "weighted":
        schedule = _epoch_schedule(cfg.epochs_total, cfg.n_rep + 1)
        do_round(0, "initial", _as_initial(equal_sample(index, k, sampler_rng)),
                 schedule[0], quotas=[k] * n)
        all_train = np.arange(train_ds.n_samples, dtype=np.int64)
        for i, epochs in enumerate(schedule[1:], start=1):
            report = evaluate_misclassifications(model, all_train, train_ds)
            batch = weighted_sample(index, report, budget, sampler_rng)
            do_round(i, "weighted", batch, epochs,
                     quotas=allocate_quotas(report.weights_percent, budget),
                     weights=report.weights_percent)
    elif technique == "imet":
        schedule = _epoch_schedule(cfg.epochs_total, cfg.n_rep + 1)
        eval_subset = build_eval_subset(index, sampler_rng)
        do_round(0, "initial", _as_initial(equal_sample(index, k, sampler_rng)),
                 schedule[0], quotas=[k] * n)
        for i, epochs in enumerate(schedule[1:], start=1):
            report = evaluate_misclassifications(model, eval_subset.indices, train_ds)
            batch = imet_sample(index, report, budget, sampler_rng)
            do_round(i, "imet", batch, epochs,
                     quotas=allocate_quotas(report.weights_percent, budget // 2),
                     weights=report.weights_percent)
    else:
        raise ConfigError(f"technique must be one of {TECHNIQUES}, got {technique!r}")

    test_labels, test_scores = model.predict(test_ds.inputs())
    test_metrics = metrics_report(test_ds.labels, test_labels, test_scores, n)
    validation, validation_note = None, None
    try:
        val_labels, val_scores = model.predict(val_ds.inputs())
        validation = metrics_report(val_ds.labels, val_labels, val_scores, n)
    except CurveError as exc:
        validation_note = f"validation metrics unavailable: {exc}"

    all_indices = np.concatenate(batches)
    return RunReport(
        config={**config.to_flat_dict(), "technique": technique},
        technique=technique,
        parameter_count=model.parameter_count(),
        rounds=rounds,
        metrics=test_metrics,
        validation=validation,
        validation_note=validation_note,
        samples_with_duplicates=int(all_indices.size),
        samples_unique=int(np.unique(all_indices).size),
        wall_clock_seconds=time.perf_counter() - started,
        model=model,
    )


def run_equal(config: RunConfig) -> RunReport:
    return _run(config, "equal")


def run_weighted(config: RunConfig) -> RunReport:
    return _run(config, "weighted")


def run_imet(config: RunConfig) -> RunReport:
    return _run(config, "imet")


def run_baseline(config: RunConfig) -> RunReport:
    return _run(config, "baseline")


def run_technique(config: RunConfig) -> RunReport:
    if config.technique not in TECHNIQUES:
        raise ConfigError(f"technique must be one of {TECHNIQUES}, got {config.technique!r}")
    return _run(config, config.technique)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def report_payload(report: RunReport) -> dict:
    """The JSON-ready body of report.json."""
    return {
        "config": report.config,
        "technique": report.technique,
        "parameter_count": report.parameter_count,
        "rounds": report.rounds,
        "metrics": report.metrics.to_dict(),
        "validation": report.validation.to_dict() if report.validation else None,
        "validation_note": report.validation_note,
        "samples_with_duplicates": report.samples_with_duplicates,
        "samples_unique": report.samples_unique,
        "wall_clock_seconds": report.wall_clock_seconds,
    }


def metrics_csv_row(report: RunReport) -> list:
    m = report.metrics
    return [TECHNIQUE_LABELS[report.technique], report.parameter_count,
            report.samples_with_duplicates, m.scalars.accuracy, m.headline_auc(),
            m.scalars.precision, m.scalars.recall, m.scalars.f1]


def emit_report(report: RunReport, output_dir) -> dict:
    """Write report.json, metrics.csv, per-curve ROC CSVs, composition.csv, and
    the model checkpoint into output_dir (created on demand). All writes are
    atomic; reruns replace files wholesale. Returns {name: path}."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}

    payload = json.dumps(report_payload(report), indent=2, sort_keys=True) + "\n"
    atomic_write_text(out / "report.json", payload)
    written["report"] = out / "report.json"

    atomic_write_text(out / "metrics.csv", _csv_text(
        ["Model", "Parameters", "Samples", "Accuracy", "AUC", "Precision", "Recall", "F1"],
        [metrics_csv_row(report)]))
    written["metrics"] = out / "metrics.csv"

    for curve in report.metrics.roc:
        if not curve.defined:
            continue
        path = out / f"roc_{curve.scope}.csv"
        atomic_write_text(path, _csv_text(
            ["scope", "fpr", "tpr"],
            [[curve.scope, float(x), float(y)] for x, y in zip(curve.fpr, curve.tpr)]))
        written[f"roc_{curve.scope}"] = path

    comp_rows = []
    for record in report.rounds:
        for row in record["composition"]:
            comp_rows.append([record["round"], row["class"],
                              row["equal_count"] + row["initial_count"],
                              row["weighted_count"], row["quota"]])
    atomic_write_text(out / "composition.csv", _csv_text(
        ["round", "class", "equal_count", "weighted_count", "quota"], comp_rows))
    written["composition"] = out / "composition.csv"

    written["checkpoint"] = save_checkpoint(report.model, out / "model.json")
    return written
