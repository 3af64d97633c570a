"""Per-round batch construction: class partitioning, equal-class sampling,
misclassification-weighted sampling, and the 50/50 composite used by IMET."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SamplingError

EQUAL_PART = "equal-part"
WEIGHTED_PART = "weighted-part"
INITIAL = "initial"
_PROV_DTYPE = "<U13"


@dataclass
class ClassIndex:
    """Training-split indices grouped by class; lists are disjoint and cover the split."""

    n_classes: int
    per_class: list  # one int64 index array per class

    def sizes(self) -> np.ndarray:
        return np.array([len(a) for a in self.per_class], dtype=np.int64)

    def min_class_size(self) -> int:
        return int(self.sizes().min())

    def total(self) -> int:
        return int(self.sizes().sum())


@dataclass
class SampleBatch:
    """The training index multiset for one round, with per-index provenance."""

    indices: np.ndarray
    provenance: np.ndarray  # 'equal-part' | 'weighted-part' | 'initial'

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass
class MisclassificationReport:
    """Per-class misclassified index pools with counts and percentage weights."""

    per_class_misclassified: list
    counts: np.ndarray           # w_k
    weights_percent: np.ndarray  # p_k, sums to 100


@dataclass
class EvalSubset:
    """Fixed equal-count per-class subset of the training split."""

    indices: np.ndarray
    per_class_m: int


def partition_by_class(labels, n_classes: int | None = None) -> ClassIndex:
    """Group sample indices by label; every class must be non-empty."""
    labels = np.asarray(labels, dtype=np.int64)
    n = int(n_classes) if n_classes is not None else int(labels.max()) + 1
    if labels.size and (labels.min() < 0 or labels.max() >= n):
        raise SamplingError(f"labels out of range for {n} classes")
    per_class = [np.flatnonzero(labels == k) for k in range(n)]
    empty = [k for k, a in enumerate(per_class) if a.size == 0]
    if empty:
        raise SamplingError(f"classes {empty} have no samples")
    return ClassIndex(n_classes=n, per_class=per_class)


def equal_sample(index: ClassIndex, m: int, rng) -> SampleBatch:
    """Draw m indices per class, without replacement within each class."""
    if m < 1:
        raise SamplingError(f"per-class sample size must be >= 1, got {m}")
    short = [k for k, a in enumerate(index.per_class) if a.size < m]
    if short:
        raise SamplingError(
            f"classes {short} have fewer than {m} samples (min is {index.min_class_size()})")
    parts = [rng.choice(a, size=m, replace=False) for a in index.per_class]
    indices = np.concatenate(parts)
    return SampleBatch(indices=indices,
                       provenance=np.full(indices.size, EQUAL_PART, dtype=_PROV_DTYPE))


def misclassification_weights(counts) -> np.ndarray:
    """Percentage weights p_k = 100*w_k/sum(w); uniform when nothing was missed."""
    w = np.asarray(counts, dtype=np.float64)
    if w.size == 0 or (w < 0).any():
        raise ConfigError("misclassification counts must be non-negative")
    total = w.sum()
    if total == 0.0:
        return np.full(w.size, 100.0 / w.size)
    return 100.0 * w / total


def allocate_quotas(weights_percent, budget: int) -> np.ndarray:
    """Largest-remainder apportionment of `budget` across classes.

    Floor quotas first, then hand the leftover units to the largest fractional
    parts (ties to the lower class index). Quotas always sum to the budget.
    """
    p = np.asarray(weights_percent, dtype=np.float64)
    if abs(p.sum() - 100.0) > 1e-6:
        raise ConfigError(f"weights must sum to 100, got {p.sum()}")
    if budget < 0:
        raise ConfigError("budget must be non-negative")
    raw = p * budget / 100.0
    base = np.floor(raw).astype(np.int64)
    leftover = budget - int(base.sum())
    if leftover:
        frac = raw - base
        order = np.lexsort((np.arange(p.size), -frac))
        base[order[:leftover]] += 1
    return base


def evaluate_misclassifications(model, eval_indices, dataset) -> MisclassificationReport:
    """Predict on the given training indices and pool the misses by true class."""
    eval_indices = np.asarray(eval_indices, dtype=np.int64)
    if eval_indices.size == 0:
        raise SamplingError("evaluation subset is empty")
    if model.n_classes != dataset.n_classes:
        raise ConfigError(
            f"model has {model.n_classes} classes but dataset has {dataset.n_classes}")
    predicted, _ = model.predict(dataset.inputs()[eval_indices])
    actual = dataset.labels[eval_indices]
    pools = [eval_indices[(actual == k) & (predicted != k)]
             for k in range(dataset.n_classes)]
    counts = np.array([p.size for p in pools], dtype=np.int64)
    return MisclassificationReport(per_class_misclassified=pools, counts=counts,
                                   weights_percent=misclassification_weights(counts))


def weighted_sample(index: ClassIndex, report: MisclassificationReport,
                    budget: int, rng) -> SampleBatch:
    """Draw a budget-sized batch with per-class quotas proportional to the
    misclassification weights.

    Each class quota is drawn from the misclassified pool first, topped up
    from the rest of that class. If a class cannot fill its quota at all, the
    shortfall spills to a uniform draw over the still-unused training indices.
    """
    n = index.n_classes
    if budget < n:
        raise SamplingError(f"budget {budget} is below the class count {n}")
    if budget > index.total():
        raise SamplingError(
            f"budget {budget} exceeds the {index.total()} available training samples")
    quotas = allocate_quotas(report.weights_percent, budget)
    parts = []
    shortfall = 0
    for k in range(n):
        pool = np.asarray(report.per_class_misclassified[k], dtype=np.int64)
        quota = int(quotas[k])
        take = min(quota, pool.size)
        chosen = rng.choice(pool, size=take, replace=False) if take else pool[:0]
        if quota > take:
            rest = np.setdiff1d(index.per_class[k], pool, assume_unique=True)
            extra = min(quota - take, rest.size)
            if extra:
                chosen = np.concatenate([chosen, rng.choice(rest, size=extra, replace=False)])
            shortfall += quota - take - extra
        parts.append(chosen)
    selected = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    if shortfall:
        unused = np.setdiff1d(np.concatenate(index.per_class), selected)
        if unused.size < shortfall:
            raise SamplingError("not enough training data to fill the weighted quota")
        selected = np.concatenate([selected, rng.choice(unused, size=shortfall, replace=False)])
    return SampleBatch(indices=selected,
                       provenance=np.full(selected.size, WEIGHTED_PART, dtype=_PROV_DTYPE))


def imet_sample(index: ClassIndex, report: MisclassificationReport,
                budget: int, rng) -> SampleBatch:
    """Half equal-class, half misclassification-weighted batch.

    The equal half works from ceil(budget/2) and puts floor(ceil(budget/2)/n)
    indices in every class; the weighted half spends floor(budget/2). The
    concatenated batch never exceeds the budget and falls short of it by less
    than n (equal-half rounding).
    """
    n = index.n_classes
    if budget < 2 * n:
        raise SamplingError(f"budget {budget} is below 2x the class count {n}")
    per_class_equal = ((budget + 1) // 2) // n
    equal = equal_sample(index, per_class_equal, rng)
    weighted = weighted_sample(index, report, budget // 2, rng)
    return SampleBatch(indices=np.concatenate([equal.indices, weighted.indices]),
                       provenance=np.concatenate([equal.provenance, weighted.provenance]))


def build_eval_subset(index: ClassIndex, rng) -> EvalSubset:
    """Equal-count per-class evaluation subset sized by the smallest class."""
    m = index.min_class_size()
    parts = [rng.choice(a, size=m, replace=False) for a in index.per_class]
    return EvalSubset(indices=np.concatenate(parts), per_class_m=m)


def batch_composition(batch: SampleBatch, labels, n_classes: int) -> list[dict]:
    """Per-class provenance counts for one round's audit record."""
    labels = np.asarray(labels)
    classes = labels[batch.indices]
    rows = []
    for k in range(n_classes):
        mask = classes == k
        rows.append({
            "class": k,
            "equal_count": int((mask & (batch.provenance == EQUAL_PART)).sum()),
            "weighted_count": int((mask & (batch.provenance == WEIGHTED_PART)).sum()),
            "initial_count": int((mask & (batch.provenance == INITIAL)).sum()),
            "total": int(mask.sum()),
        })
    return rows
