"""Command-line entry points: train, evaluate, inspect-dataset."""

import argparse
import json
import sys
from pathlib import Path

from .checkpoint import load_checkpoint
from .data import SPLITS, class_histogram, load_dataset, normalize
from .errors import ImetError
from .experiment import (TECHNIQUES, RunConfig, emit_report, metrics_csv_row,
                         run_technique)
from .fileio import atomic_write_text
from .metrics import metrics_report
from .model import TrainConfig


def _build_parser():
    parser = argparse.ArgumentParser(prog="imet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one sampling technique end to end")
    train.add_argument("--technique", choices=TECHNIQUES)
    train.add_argument("--dataset", help="path to a six-key NPZ archive")
    train.add_argument("--config", help="flat JSON config file; flags override it")
    train.add_argument("--seed", type=int)
    train.add_argument("--out", help="output directory for report files")
    train.add_argument("--epochs", type=int, dest="epochs_total")
    train.add_argument("--n-rep", type=int, dest="n_rep")
    train.add_argument("--budget", type=int)
    train.add_argument("--k", type=int, dest="initial_per_class_k")
    train.add_argument("--m", type=int)
    train.add_argument("--lr", type=float, dest="learning_rate")
    train.add_argument("--weight-decay", type=float, dest="weight_decay")
    train.add_argument("--batch-size", type=int, dest="batch_size")

    evaluate = sub.add_parser("evaluate", help="score a saved checkpoint on a test split")
    evaluate.add_argument("--checkpoint", required=True, help="checkpoint manifest path")
    evaluate.add_argument("--dataset", required=True)
    evaluate.add_argument("--out", required=True)

    inspect = sub.add_parser("inspect-dataset", help="print per-split class histograms")
    inspect.add_argument("--dataset", required=True)
    return parser


def _train_config_from(args) -> RunConfig:
    flat = {}
    if args.config:
        flat = json.loads(Path(args.config).read_text())
    overrides = {
        "technique": args.technique,
        "dataset_path": args.dataset,
        "output_dir": args.out,
        "seed": args.seed,
        "epochs_total": args.epochs_total,
        "n_rep": args.n_rep,
        "budget": args.budget,
        "initial_per_class_k": args.initial_per_class_k,
        "m": args.m,
        "learning_rate": args.learning_rate,
        "weight_decay": args.weight_decay,
        "batch_size": args.batch_size,
    }
    flat.update({k: v for k, v in overrides.items() if v is not None})
    if not flat.get("technique"):
        raise ImetError("a technique is required (flag --technique or config file)")
    if not flat.get("dataset_path"):
        raise ImetError("a dataset path is required (flag --dataset or config file)")
    if not flat.get("output_dir"):
        raise ImetError("an output directory is required (flag --out or config file)")
    return RunConfig.from_flat_dict(flat)


def _cmd_train(args) -> int:
    config = _train_config_from(args)
    report = run_technique(config)
    written = emit_report(report, config.output_dir)
    row = metrics_csv_row(report)
    print(f"{report.technique}: accuracy={row[3]:.4f} auc={row[4]:.4f} "
          f"samples={report.samples_with_duplicates} -> {written['report']}")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_checkpoint(args.checkpoint)
    test = normalize(load_dataset(args.dataset, "test"))
    labels, scores = model.predict(test.inputs())
    metrics = metrics_report(test.labels, labels, scores, test.n_classes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "evaluation.json",
                      json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"test accuracy={metrics.accuracy:.4f} auc={metrics.headline_auc():.4f} "
          f"-> {out / 'evaluation.json'}")
    return 0


def _cmd_inspect(args) -> int:
    for split in SPLITS:
        ds = load_dataset(args.dataset, split)
        counts = class_histogram(ds)
        cells = " ".join(f"class_{k}={int(c)}" for k, c in enumerate(counts))
        print(f"{split}: n={ds.n_samples} {cells}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"train": _cmd_train, "evaluate": _cmd_evaluate,
                "inspect-dataset": _cmd_inspect}
    try:
        return handlers[args.command](args)
    except ImetError as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
