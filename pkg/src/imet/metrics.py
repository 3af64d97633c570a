"""Confusion matrices, scalar classification metrics, and one-vs-rest ROC/AUC."""

from dataclasses import dataclass, field

import numpy as np

from .errors import CurveError, LabelError, ShapeError


@dataclass
class ConfusionMatrix:
    """Counts with rows = actual class, columns = predicted class."""

    counts: np.ndarray  # [n, n] int64

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))


@dataclass
class ScalarMetrics:
    """Per-class one-vs-rest metrics plus support-weighted and macro aggregates."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    per_class_f1: np.ndarray
    support: np.ndarray
    zero_denominator: list = field(default_factory=list)


@dataclass
class RocCurve:
    """Threshold-sweep ROC points and the area under them."""

    scope: str  # 'binary' | 'class_<k>' | 'micro' | 'macro'
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray | None
    auc: float | None
    auc_method: str = "trapezoid"
    defined: bool = True


@dataclass
class MetricsReport:
    confusion: ConfusionMatrix
    scalars: ScalarMetrics
    roc: list
    roc_warnings: list = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.scalars.accuracy

    def auc(self, scope: str):
        for curve in self.roc:
            if curve.scope == scope:
                return curve.auc
        return None

    def headline_auc(self):
        """The table-row AUC: micro average when present, else the binary curve."""
        return self.auc("micro") if self.auc("micro") is not None else self.auc("binary")

    def to_dict(self) -> dict:
        s = self.scalars
        return {
            "confusion": self.confusion.counts.tolist(),
            "accuracy": s.accuracy,
            "precision": s.precision,
            "recall": s.recall,
            "f1": s.f1,
            "macro_precision": s.macro_precision,
            "macro_recall": s.macro_recall,
            "macro_f1": s.macro_f1,
            "per_class": {
                "precision": s.per_class_precision.tolist(),
                "recall": s.per_class_recall.tolist(),
                "f1": s.per_class_f1.tolist(),
                "support": s.support.tolist(),
            },
            "zero_denominator": list(s.zero_denominator),
            "roc": [
                {
                    "scope": c.scope,
                    "auc": c.auc,
                    "auc_method": c.auc_method,
                    "defined": c.defined,
                    "fpr": c.fpr.tolist(),
                    "tpr": c.tpr.tolist(),
                }
                for c in self.roc
            ],
            "roc_warnings": list(self.roc_warnings),
        }


def confusion_matrix(y_true, y_pred, n_classes: int) -> ConfusionMatrix:
    """Count (actual, predicted) pairs into an n x n matrix."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ShapeError("y_true and y_pred must be equal-length 1-d arrays")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelError(f"{name} has labels outside [0, {n_classes})")
    flat = np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes)
    return ConfusionMatrix(counts=flat.reshape(n_classes, n_classes))


def scalar_metrics(cm: ConfusionMatrix) -> ScalarMetrics:
    """Accuracy plus per-class / aggregate precision, recall, F1.

    Per-class values come from the one-vs-rest reduction; zero-denominator
    cases score 0 and are flagged. Aggregates weight classes by support
    (actual count); macro averages weight classes equally.
    """
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise ShapeError("confusion matrix has no samples")
    tp = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    flags = []

    def _safe_div(num, den, name):
        out = np.zeros_like(num)
        for k in range(num.size):
            if den[k] == 0:
                flags.append(f"{name}[{k}]")
            else:
                out[k] = num[k] / den[k]
        return out

    precision = _safe_div(tp, predicted, "precision")
    recall = _safe_div(tp, support, "recall")
    f1 = _safe_div(2 * precision * recall, precision + recall, "f1")

    accuracy = tp.sum() / total
    n = counts.shape[0]
    return ScalarMetrics(
        accuracy=float(accuracy),
        precision=float((support * precision).sum() / total),
        # support-weighted recall reduces algebraically to trace/total
        recall=float(accuracy),
        f1=float((support * f1).sum() / total),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        per_class_precision=precision,
        per_class_recall=recall,
        per_class_f1=f1,
        support=support.astype(np.int64),
        zero_denominator=flags,
    )


def roc_curve(scores, labels, scope: str = "binary") -> RocCurve:
    """Sweep thresholds over the descending scores and integrate TPR over FPR.

    Ties share one threshold step, so the trapezoidal area equals the
    Mann-Whitney pairwise statistic with half credit for tied pairs.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(np.int64)
    if scores.shape != labels.shape:
        raise ShapeError("scores and labels must have equal length")
    pos = int((labels == 1).sum())
    neg = int((labels == 0).sum())
    if pos == 0 or neg == 0:
        raise CurveError(f"ROC needs both label values, got {pos} positives / {neg} negatives")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # last index of each tied-score group
    ends = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tps = np.cumsum(y)[ends]
    fps = ends + 1 - tps
    tpr = np.r_[0.0, tps / pos]
    fpr = np.r_[0.0, fps / neg]
    thresholds = np.r_[s[0] + 1.0, s[ends]]
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(scope=scope, fpr=fpr, tpr=tpr, thresholds=thresholds, auc=auc)


def multiclass_roc(scores, labels):
    """One-vs-rest curves per class plus pooled micro and vertical-average macro.

    Returns (curves, warnings). A class missing from the labels yields an
    undefined curve that is excluded from the macro average.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).reshape(-1).astype(np.int64)
    if scores.ndim != 2 or scores.shape[0] != labels.shape[0]:
        raise ShapeError("scores must be [n_samples, n_classes] aligned with labels")
    n_classes = scores.shape[1]
    if n_classes < 2:
        raise ShapeError("multiclass ROC needs at least 2 classes")

    curves, warnings = [], []
    for k in range(n_classes):
        try:
            curves.append(roc_curve(scores[:, k], (labels == k).astype(np.int64),
                                    scope=f"class_{k}"))
        except CurveError:
            warnings.append(f"class_{k} absent from labels; curve undefined, "
                            "excluded from macro average")
            curves.append(RocCurve(scope=f"class_{k}", fpr=np.empty(0), tpr=np.empty(0),
                                   thresholds=None, auc=None, defined=False))

    onehot = (labels[:, np.newaxis] == np.arange(n_classes)).astype(np.int64)
    curves.append(roc_curve(scores.ravel(), onehot.ravel(), scope="micro"))

    defined = [c for c in curves if c.defined and c.scope.startswith("class_")]
    if not defined:
        warnings.append("no per-class curve is defined; macro curve undefined")
        curves.append(RocCurve(scope="macro", fpr=np.empty(0), tpr=np.empty(0),
                               thresholds=None, auc=None,
                               auc_method="mean-of-class-aucs", defined=False))
        return curves, warnings
    grid = np.unique(np.concatenate([c.fpr for c in defined]))
    mean_tpr = np.mean([np.interp(grid, c.fpr, c.tpr) for c in defined], axis=0)
    if mean_tpr[0] > 0.0:  # keep the sweep-start anchor after vertical averaging
        grid = np.r_[0.0, grid]
        mean_tpr = np.r_[0.0, mean_tpr]
    macro_auc = float(np.mean([c.auc for c in defined]))
    curves.append(RocCurve(scope="macro", fpr=grid, tpr=mean_tpr, thresholds=None,
                           auc=macro_auc, auc_method="mean-of-class-aucs"))
    return curves, warnings


def metrics_report(y_true, y_pred, scores, n_classes: int) -> MetricsReport:
    """Full evaluation bundle: confusion matrix, scalars, and ROC curves.

    Binary problems pass scalar P(class 1) scores and get a single curve;
    multi-class problems pass probability rows and get per-class/micro/macro.
    """
    cm = confusion_matrix(y_true, y_pred, n_classes)
    scalars = scalar_metrics(cm)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        roc = [roc_curve(scores, y_true, scope="binary")]
        warnings = []
    else:
        roc, warnings = multiclass_roc(scores, y_true)
    return MetricsReport(confusion=cm, scalars=scalars, roc=roc, roc_warnings=warnings)
