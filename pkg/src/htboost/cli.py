"""Command-line harness: train, predict, evaluate, cv, grid-search, calibrate.

Every subcommand is deterministic for a fixed ``--seed`` and writes only
under the paths it is given. An optional ``--config`` JSON file supplies
flag defaults; explicitly passed flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .booster import (
    BoosterConfig,
    PenaltyConfig,
    fit,
    load_model,
    predict,
    save_model,
)
from .data import DataError, Dataset, kfold_indices, load_csv
from .evaluate import (
    calibrate_correlation,
    calibrate_type1,
    cross_validate,
    default_grid,
    grid_search,
)
from .losses import LossKind
from .nulltest import TestConfig


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--target", required=True, help="name of the target column")
    p.add_argument("--drop-columns", default="", help="comma-separated columns to ignore")
    p.add_argument("--one-hot-max-levels", type=int, default=32)


def _add_booster_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", choices=[k.value for k in LossKind], default="squared_error")
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--n-estimators", type=int, default=1000, help="estimator cap")
    p.add_argument("--min-child-rows", type=int, default=1)
    p.add_argument("--max-bins", type=int, default=256)
    p.add_argument(
        "--regularizer",
        choices=["test", "penalties"],
        default="test",
        help="null-gain hypothesis test (default) or classical penalties",
    )
    p.add_argument("--test-k", type=int, default=3, help="null draws per split")
    p.add_argument("--rho", type=float, default=0.0, help="competitor correlation strength")
    p.add_argument("--max-resample", type=int, default=16)
    p.add_argument("--reg-lambda", type=float, default=0.0, help="L2 penalty")
    p.add_argument("--reg-alpha", type=float, default=0.0, help="L1 penalty")
    p.add_argument("--gamma", type=float, default=0.0, help="minimum gain per split")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htboost",
        description="Gradient boosted trees pruned by a permutation null-gain test.",
    )
    parser.add_argument("--config", help="JSON file of flag defaults (flags win)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parser._subcommands = {}

    p = parser._subcommands["train"] = sub.add_parser("train", help="fit a model and write it to disk")
    _add_data_flags(p)
    _add_booster_flags(p)
    p.add_argument("--out", required=True, help="path for the model JSON")
    p.add_argument("--out-dir", help="directory for the training log (default: model dir)")
    p.add_argument("--emit-prune-report", action="store_true")

    p = parser._subcommands["predict"] = sub.add_parser("predict", help="score a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="path for the predictions CSV")

    p = parser._subcommands["evaluate"] = sub.add_parser("evaluate", help="score a saved model against labels")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--metric", choices=["mae", "roc_auc"], required=True)
    p.add_argument("--out-dir", required=True)

    p = parser._subcommands["cv"] = sub.add_parser("cv", help="k-fold cross-validation of one config")
    _add_data_flags(p)
    _add_booster_flags(p)
    p.add_argument("--metric", choices=["mae", "roc_auc"], required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)

    p = parser._subcommands["grid-search"] = sub.add_parser("grid-search", help="exhaustive grid search over configs")
    _add_data_flags(p)
    _add_booster_flags(p)
    p.add_argument("--metric", choices=["mae", "roc_auc"], required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--grid-file", help="JSON {param: [values]}; default grid if omitted")
    p.add_argument("--out-dir", required=True)

    p = parser._subcommands["calibrate"] = sub.add_parser("calibrate", help="statistical calibration of the test itself")
    p.add_argument("--mode", choices=["type1", "correlation"], required=True)
    p.add_argument("--k", default="1,2,3,4", help="comma list of draw counts (type1)")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--n", type=int, default=100, help="rows per trial (type1)")
    p.add_argument("--rho", type=float, default=0.0, help="competitor strength (type1)")
    p.add_argument("--rhos", default="0,0.25,0.5,0.75,1", help="comma list (correlation)")
    p.add_argument("--c", type=int, default=10000, help="sample size (correlation)")
    p.add_argument("--reps", type=int, default=100, help="repetitions (correlation)")
    p.add_argument("--out-dir", required=True)
    return parser


def _booster_config(args) -> BoosterConfig:
    if args.regularizer == "test":
        reg = TestConfig(
            k_draws=args.test_k, rho=args.rho, seed=args.seed, max_resample=args.max_resample
        )
    else:
        reg = PenaltyConfig(
            reg_lambda=args.reg_lambda, alpha_l1=args.reg_alpha, gamma=args.gamma
        )
    return BoosterConfig(
        loss=LossKind(args.loss),
        learning_rate=args.learning_rate,
        max_depth=args.max_depth,
        n_estimators_cap=args.n_estimators,
        regularizer=reg,
        min_child_rows=args.min_child_rows,
        max_bins=args.max_bins,
        seed=args.seed,
    )


def _load_dataset(args) -> Dataset:
    drop = [c for c in args.drop_columns.split(",") if c.strip()]
    return load_csv(
        args.data,
        target_column=args.target,
        drop_columns=drop,
        one_hot_max_levels=args.one_hot_max_levels,
    )


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def _flatten_row(row: dict) -> dict:
    flat = {}
    for key, value in row.items():
        if isinstance(value, (list, tuple)):
            for i, item in enumerate(value):
                flat[f"{key}_{i}"] = item
        else:
            flat[key] = value
    return flat


def emit_report(results: dict, out_dir, rows: list[dict]) -> list[Path]:
    """Write report.json (full results) and report.csv (one row per record)."""
    if not rows:
        raise ValueError("nothing to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    csv_path = out_dir / "report.csv"
    _write_json(json_path, results)
    flat = [_flatten_row(r) for r in rows]
    fields: list[str] = []
    for row in flat:
        for key in row:
            if key not in fields:
                fields.append(key)
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(flat)
    return [json_path, csv_path]


def _features_for_model(model, data_path: str, target: str | None = None):
    """Rebuild the model's feature columns (including one-hot ones) from a CSV."""
    with open(data_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        raw_rows = [r for r in reader if r]
    if not raw_rows:
        raise DataError(f"{data_path}: no data rows")
    columns = {name: [row[i] for row in raw_rows] for i, name in enumerate(header)}
    n = len(raw_rows)
    mat = np.empty((n, model.n_features), dtype=np.float64)
    for f, name in enumerate(model.feature_names):
        if name in columns:
            try:
                mat[:, f] = [float(c) for c in columns[name]]
            except ValueError as exc:
                raise DataError(f"column {name!r} has non-numeric values: {exc}") from exc
        elif "=" in name and name.split("=", 1)[0] in columns:
            base, level = name.split("=", 1)
            mat[:, f] = [1.0 if c.strip() == level else 0.0 for c in columns[base]]
        else:
            raise DataError(f"column {name!r} required by the model is missing from {data_path}")
    if not np.all(np.isfinite(mat)):
        raise DataError(f"{data_path}: non-finite feature values")
    y = None
    if target is not None:
        if target not in columns:
            raise DataError(f"target column {target!r} not found in {data_path}")
        try:
            y = np.array([float(c) for c in columns[target]], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"target column {target!r} is not numeric: {exc}") from exc
    return mat, y


def _cmd_train(args) -> int:
    dataset = _load_dataset(args)
    config = _booster_config(args)
    model = fit(dataset, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    out_dir = Path(args.out_dir) if args.out_dir else out.parent
    log = {
        "n_trees": model.n_trees,
        "ingest_summary": dataset.summary.to_dict() if dataset.summary else None,
        "iterations": model.training_log,
    }
    _write_json(out_dir / "training_log.json", log)
    if args.emit_prune_report:
        _write_json(
            out_dir / "prune_reports.json",
            [r.to_dict() for r in model.prune_reports],
        )
    if args.verbose:
        print(f"trained {model.n_trees} trees -> {out}")
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    features, _ = _features_for_model(model, args.data)
    preds = predict(model, features)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction"])
        for p in preds:
            writer.writerow([repr(float(p))])
    return 0


def _cmd_evaluate(args) -> int:
    from .evaluate import _score  # local alias of the metric dispatcher

    model = load_model(args.model)
    features, y = _features_for_model(model, args.data, target=args.target)
    preds = predict(model, features)
    value = _score(args.metric, y, preds)
    report = {"metric": args.metric, "value": value, "n": int(y.size)}
    emit_report(report, args.out_dir, rows=[report])
    if args.verbose:
        print(f"{args.metric} = {value}")
    return 0


def _cmd_cv(args) -> int:
    dataset = _load_dataset(args)
    config = _booster_config(args)
    folds = kfold_indices(dataset.n, args.folds, args.seed)
    result = cross_validate(dataset, config, folds, args.metric, jobs=args.jobs)
    report = {
        "metric": args.metric,
        "folds": args.folds,
        "fold_metrics": result.fold_metrics,
        "mean_metric": result.mean_metric,
    }
    rows = [
        {"fold": i, "metric": m} for i, m in enumerate(result.fold_metrics)
    ]
    emit_report(report, args.out_dir, rows=rows)
    if args.verbose:
        print(f"mean {args.metric} = {result.mean_metric}")
    return 0


def _cmd_grid_search(args) -> int:
    dataset = _load_dataset(args)
    base_config = _booster_config(args)
    folds = kfold_indices(dataset.n, args.folds, args.seed)
    if args.grid_file:
        grid = json.loads(Path(args.grid_file).read_text(encoding="utf-8"))
        if not isinstance(grid, dict):
            raise DataError(f"{args.grid_file}: expected a JSON object of parameter lists")
    else:
        grid = default_grid(args.regularizer)
    result = grid_search(dataset, grid, folds, args.metric, base_config, jobs=args.jobs)
    out_dir = Path(args.out_dir)
    report = {
        "metric": args.metric,
        "n_combinations": len(result.combos),
        "best_index": result.best_index,
        "best_params": result.combos[result.best_index],
        "best_mean_metric": result.mean_metrics[result.best_index],
        "spread": result.spread,
        "combinations": result.rows(),
    }
    emit_report(report, out_dir, rows=result.rows())
    save_model(result.final_model, out_dir / "best_model.json")
    if args.verbose:
        print(f"best {args.metric} = {report['best_mean_metric']} at {report['best_params']}")
    return 0


def _cmd_calibrate(args) -> int:
    if args.mode == "type1":
        ks = [int(v) for v in str(args.k).split(",") if v.strip()]
        rows = calibrate_type1(args.n, ks, args.rho, args.trials, args.seed)
        report = {"mode": "type1", "n": args.n, "rho": args.rho, "results": rows}
    else:
        rhos = [float(v) for v in str(args.rhos).split(",") if v.strip()]
        rows = calibrate_correlation(args.c, rhos, args.reps, args.seed)
        report = {"mode": "correlation", "c": args.c, "reps": args.reps, "results": rows}
    emit_report(report, args.out_dir, rows=rows)
    if args.verbose:
        for row in rows:
            print(row)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "cv": _cmd_cv,
    "grid-search": _cmd_grid_search,
    "calibrate": _cmd_calibrate,
}


def run(argv: list[str]) -> int:
    """Parse and execute one subcommand; returns a process exit code."""
    parser = build_parser()
    try:
        # first pass finds --config so its values can become defaults
        probe, _ = parser.parse_known_args(argv)
        if getattr(probe, "config", None):
            defaults = json.loads(Path(probe.config).read_text(encoding="utf-8"))
            if not isinstance(defaults, dict):
                raise DataError(f"{probe.config}: expected a JSON object of flag defaults")
            cleaned = {k.replace("-", "_"): v for k, v in defaults.items()}
            parser.set_defaults(**cleaned)
            for sub in parser._subcommands.values():
                sub.set_defaults(**cleaned)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (DataError, ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
