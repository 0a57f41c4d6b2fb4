"""Command-line entry point: ``ffoneclass {train,eval,grid,landscape,summarize}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_arch_list, parse_seeds
from .data import DataFormatError, Dataset, is_canonical_banknote, load_banknote, make_splits
from .experiments import (
    PreparedData,
    arch_label,
    emit_tables,
    grand_mean,
    read_results,
    run_grid,
    summarize,
)
from .landscape import compute_landscape, export_landscape
from .losses import distance_scores
from .model import ModelFormatError, load_model, save_model
from .network import INIT_SCHEME, forward_all, init_network, parse_architecture
from .scoring import evaluate_metrics, score_and_flag
from .training import TrainingDiverged, train

log = logging.getLogger("ffoneclass")

DESIGN_NOTES = {
    "init": INIT_SCHEME,
    "update": "gradient descent W <- W - (lr/n) dL/dW",
    "center_and_radius": "batch column mean; R^2 = (1-nu) quantile of squared center distances; frozen during the gradient step",
    "threshold": "(1-nu) quantile (linear interpolation) of training distances divided by the training maximum",
    "early_stopping": "stop when the best validation loss is more than `patience` epochs old; last parameters kept",
    "validation_loss": "mean final-layer loss with center/radius calibrated on the training split",
    "positive_class": "1 = counterfeit = anomaly",
}


class CommandError(Exception):
    """A user-facing failure; the message goes to stderr."""


def _load_dataset(cfg: RunConfig) -> Dataset:
    path = cfg.resolved_data_path()
    if not path.is_file():
        raise CommandError(f"dataset not found: {path} (set --data or FFOC_BANKNOTE)")
    ds = load_banknote(path)
    if not is_canonical_banknote(ds):
        log.warning("dataset %s has %d rows / %d positives, not the published 1372 / 610", path, len(ds),
                    int(ds.labels.sum()))
    return ds


def _splits(cfg: RunConfig, ds: Dataset):
    return make_splits(ds, cfg.split_fractions, cfg.split_seed, cfg.oneclass, cfg.move_to_test, cfg.standardize)


def _base_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {
        "data_path": getattr(args, "data", None),
        "output_dir": getattr(args, "output_dir", None),
    }
    for name in ("loss", "c", "nu", "regime", "seed", "learning_rate", "epochs_max", "batch_size", "patience",
                 "split_seed", "workers"):
        overrides[name] = getattr(args, name, None)
    if getattr(args, "arch", None):
        overrides["arch"] = ",".join(str(a) for a in parse_architecture(args.arch))
    if getattr(args, "losses", None):
        overrides["grid_losses"] = [s for s in args.losses.split(",") if s]
    if getattr(args, "archs", None):
        overrides["grid_archs"] = [list(a) for a in parse_arch_list(args.archs)]
    if getattr(args, "regimes", None):
        overrides["grid_regimes"] = [s for s in args.regimes.split(",") if s]
    if getattr(args, "seeds", None):
        overrides["grid_seeds"] = parse_seeds(args.seeds)
    for flag, name, value in (("no_standardize", "standardize", False), ("no_oneclass", "oneclass", False),
                              ("move_to_test", "move_to_test", True), ("ff_feed_input", "ff_feed_updated", False),
                              ("record_timing", "record_timing", True)):
        if getattr(args, flag, False):
            overrides[name] = value
    if getattr(args, "bp_loss", None):
        overrides["bp_loss"] = args.bp_loss
    return cfg.with_overrides(**overrides)


def _metrics_dict(m) -> dict:
    return {"accuracy": m.accuracy, "f1": m.f1, "auc": m.auc}


def cmd_train(args) -> int:
    cfg = _base_config(args)
    ds = _load_dataset(cfg)
    splits = _splits(cfg, ds)
    data = PreparedData.from_splits(ds, splits)
    spec, tcfg = cfg.loss_spec(), cfg.train_config()
    arch = parse_architecture(cfg.arch)
    try:
        model, report = train(init_network(arch, cfg.seed), data.x_train, data.x_valid, spec, tcfg)
    except TrainingDiverged as exc:
        raise CommandError(f"training diverged: {exc}") from exc
    model.standardizer = splits.standardizer
    p, flags = score_and_flag(model, data.x_test)
    metrics = evaluate_metrics(p, flags, data.y_test)
    model.metadata.update({
        "run_config": cfg.to_dict(),
        "splits": splits.metadata(),
        "data_path": str(cfg.resolved_data_path()),
        "test_metrics": _metrics_dict(metrics),
    })

    out = cfg.resolved_output_dir() / f"{spec.kind.value}_{arch_label(arch)}_{tcfg.regime.value}_s{cfg.seed}"
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    report.to_csv(out / "report.csv")
    meta = {
        "version": __version__,
        "command": "train",
        "config": cfg.to_dict(),
        "loss": spec.to_dict(),
        "train_config": tcfg.to_dict(),
        "splits": splits.metadata(),
        "design": DESIGN_NOTES,
        "epochs_run": report.epochs_run,
        "stopped_early": report.stopped_early,
        "calibration": model.calibration.to_dict(),
        "test_metrics": _metrics_dict(metrics),
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    print(f"model written to {out / 'model.json'}")
    print(f"test accuracy={metrics.accuracy!r} f1={metrics.f1!r} auc={metrics.auc!r}")
    return 0


def _rebuild_split(model, data_path, split: str):
    """Recreate the split the model was trained with and return ``(ids, x, y)``."""
    run = model.metadata.get("run_config")
    if run is None:
        raise CommandError("model carries no run configuration; cannot recover its data split")
    cfg = RunConfig.from_dict(run)
    if data_path:
        cfg = cfg.with_overrides(data_path=data_path)
    ds = _load_dataset(cfg)
    if split == "all":
        ids = np.arange(len(ds))
    else:
        ids = getattr(_splits(cfg, ds), split)
    return ids, model.preprocess(ds.features[ids]), ds.labels[ids]


def cmd_eval(args) -> int:
    try:
        model = load_model(args.model)
    except (OSError, ModelFormatError) as exc:
        raise CommandError(f"cannot load model {args.model}: {exc}") from exc
    ids, x, y = _rebuild_split(model, args.data, args.split)
    p, flags = score_and_flag(model, x, normalize=args.normalize)
    distances = distance_scores(forward_all(model.network, x)[-1], model.spec, model.state)
    m = evaluate_metrics(p, flags, y)
    out = Path(args.output) if args.output else Path(args.model).with_name(f"scores_{args.split}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "distance", "probability", "flag", "label"])
        for i, d, pi, f, yi in zip(ids, distances, p, flags, y):
            w.writerow([int(i), repr(float(d)), repr(float(pi)), int(f), int(yi)])
    print(f"split={args.split} n={len(ids)} flagged={int(flags.sum())}")
    print(f"accuracy={m.accuracy!r} f1={m.f1!r} auc={m.auc!r}")
    print(f"scores written to {out}")
    return 0


def _write_summaries(records, out: Path) -> dict:
    summaries = summarize(records)
    paths = {}
    for fmt, ext in (("csv", "csv"), ("markdown", "md"), ("latex", "tex")):
        p = out / f"summary.{ext}"
        p.write_text(emit_tables(summaries, fmt))
        paths[fmt] = p
    return summaries


def cmd_grid(args) -> int:
    cfg = _base_config(args)
    grid = cfg.grid_spec()
    ds = _load_dataset(cfg)
    splits = _splits(cfg, ds)
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    splits.write_indices(out / "splits")
    meta = {
        "version": __version__,
        "command": "grid",
        "config": cfg.to_dict(),
        "grid": grid.to_dict(),
        "splits": splits.metadata(),
        "design": DESIGN_NOTES,
    }
    (out / "grid_metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    workers = cfg.workers or os.cpu_count() or 1
    records = run_grid(grid, PreparedData.from_splits(ds, splits), out / "results.csv", workers, cfg.record_timing)
    _write_summaries(records, out)
    n_ok = sum(r.ok for r in records)
    print(f"{len(records)} runs recorded ({len(records) - n_ok} failed) in {out / 'results.csv'}")
    for reg in grid.regimes:
        print(f"{reg.value}: mean accuracy {grand_mean(records, 'accuracy', reg.value)!r}")
    return 0 if n_ok > 0 else 1


def cmd_landscape(args) -> int:
    try:
        model = load_model(args.model)
    except (OSError, ModelFormatError) as exc:
        raise CommandError(f"cannot load model {args.model}: {exc}") from exc
    if not 0 <= args.layer < model.network.depth:
        raise CommandError(f"layer {args.layer} out of range; the model has {model.network.depth} layers")
    _, x, _ = _rebuild_split(model, args.data, args.split)
    grid = compute_landscape(model, args.layer, x, args.radius, args.steps, args.direction_seed,
                             recalibrate=not args.frozen_state)
    out = Path(args.output_dir) if args.output_dir else Path(args.model).parent
    out.mkdir(parents=True, exist_ok=True)
    grid.metadata.update({"model": str(args.model), "split": args.split})
    csv_path, json_path = export_landscape(grid, out / f"landscape_layer{args.layer}.csv")
    print(f"landscape written to {csv_path} (+ {json_path.name}); center loss {grid.center_value!r}")
    return 0


def cmd_summarize(args) -> int:
    records = read_results(args.results)
    if not records:
        raise CommandError(f"no records in {args.results}")
    out = Path(args.output_dir) if args.output_dir else Path(args.results).parent
    out.mkdir(parents=True, exist_ok=True)
    summaries = _write_summaries(records, out)
    print(emit_tables(summaries, "markdown"))
    return 0


def _add_common(p, training: bool = True):
    p.add_argument("--config", help="JSON run configuration; flags override it")
    p.add_argument("--data", help="banknote CSV (default: $FFOC_BANKNOTE or data/data_banknote_authentication.txt)")
    p.add_argument("--output-dir", help=f"output directory (default: ${'{'}FFOC_OUTPUT_DIR{'}'} or ./runs)")
    if not training:
        return
    p.add_argument("--c", type=float, help="loss constant C")
    p.add_argument("--nu", type=float, help="outlier fraction for radius and threshold (default 0.05)")
    p.add_argument("--lr", dest="learning_rate", type=float, help="SGD learning rate (default 0.01)")
    p.add_argument("--epochs", dest="epochs_max", type=int, help="maximum epochs (default 200)")
    p.add_argument("--batch-size", type=int, help="mini-batch size (default: full batch)")
    p.add_argument("--patience", type=int, help="early-stopping patience (default 10)")
    p.add_argument("--split-seed", type=int, help="data split seed (default 0)")
    p.add_argument("--no-standardize", action="store_true", help="skip feature standardisation")
    p.add_argument("--no-oneclass", action="store_true", help="keep counterfeit rows in the training split")
    p.add_argument("--move-to-test", action="store_true", help="move filtered counterfeit rows into the test split")
    p.add_argument("--ff-feed-input", action="store_true",
                   help="forward-forward: feed the next layer the pre-update output")
    p.add_argument("--bp-loss", choices=["final", "sum"], help="backprop: final-layer loss or sum over layers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ffoneclass", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model and write model.json, report.csv, metadata.json")
    _add_common(p)
    p.add_argument("--loss", help="goodness, goodness_adjusted, hb_svdd, svdd or ls_svdd")
    p.add_argument("--arch", help="layer widths, e.g. 4,25,25")
    p.add_argument("--regime", choices=["ff", "bp"])
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a split with a saved model")
    p.add_argument("model")
    p.add_argument("--data")
    p.add_argument("--split", choices=["train", "valid", "test", "all"], default="test")
    p.add_argument("--normalize", choices=["train", "batch"], default="train",
                   help="divide distances by the training maximum (default) or by this batch's maximum")
    p.add_argument("--output", help="score CSV path (default: next to the model)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="run the loss x architecture x regime x seed grid")
    _add_common(p)
    p.add_argument("--losses", help="comma-separated loss kinds")
    p.add_argument("--archs", help='architectures separated by ";", e.g. "4,10,10;4,25,25"')
    p.add_argument("--regimes", help="comma-separated regimes (ff,bp)")
    p.add_argument("--seeds", help='seed list, e.g. "1..50" or "1,2,3"')
    p.add_argument("--workers", type=int, help="worker processes (default: logical cores)")
    p.add_argument("--record-timing", action="store_true", help="fill wall_ms (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("landscape", help="export a 2-D loss slice for one layer")
    p.add_argument("model")
    p.add_argument("--layer", type=int, required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=41)
    p.add_argument("--direction-seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "valid", "test", "all"], default="train")
    p.add_argument("--frozen-state", action="store_true", help="keep center/radius at the unperturbed values")
    p.add_argument("--data")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("summarize", help="rebuild summary tables from results.csv")
    p.add_argument("results")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CommandError, ConfigError, DataFormatError, ModelFormatError) as exc:
        print(f"ffoneclass {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError) as exc:
        print(f"ffoneclass {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
