"""Iterative misclassification error training (IMET) toolkit.

Trains a small from-scratch CNN under three batch-construction strategies
(equal-class, misclassification-weighted, and the 50/50 IMET composite) and
reports confusion matrices, scalar metrics, and ROC/AUC curves.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .data import ImageDataset, class_histogram, load_dataset, normalize
from .errors import (ArchiveError, ConfigError, CurveError, ImetError, LabelError,
                     SamplingError, ShapeError, StateError)
from .experiment import (RunConfig, RunReport, emit_report, run_baseline, run_equal,
                         run_imet, run_technique, run_weighted)
from .metrics import (ConfusionMatrix, MetricsReport, RocCurve, ScalarMetrics,
                      confusion_matrix, metrics_report, multiclass_roc, roc_curve,
                      scalar_metrics)
from .model import CnnModel, TrainConfig, build_cnn, train_epochs
from .sampling import (ClassIndex, EvalSubset, MisclassificationReport, SampleBatch,
                       allocate_quotas, batch_composition, build_eval_subset,
                       equal_sample, evaluate_misclassifications, imet_sample,
                       misclassification_weights, partition_by_class, weighted_sample)

__version__ = "0.1.0"
