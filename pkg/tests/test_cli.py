import json

import numpy as np
import pytest

from htboost.cli import run


@pytest.fixture
def regression_csv(tmp_path, rng):
    n = 80
    x0 = rng.standard_normal(n)
    x1 = rng.standard_normal(n)
    y = 2.0 * x0 + 0.5 * rng.standard_normal(n)
    lines = ["x0,x1,y"] + [f"{a},{b},{c}" for a, b, c in zip(x0, x1, y)]
    path = tmp_path / "train.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def classification_csv(tmp_path, rng):
    n = 80
    x0 = rng.standard_normal(n)
    y = (x0 + 0.3 * rng.standard_normal(n) > 0).astype(int)
    lines = ["x0,color,y"] + [
        f"{a},{'red' if i % 2 else 'blue'},{b}" for i, (a, b) in enumerate(zip(x0, y))
    ]
    path = tmp_path / "train_cls.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_train_happy_path(tmp_path, regression_csv):
    out = tmp_path / "model.json"
    code = run(
        [
            "--seed", "7",
            "train",
            "--data", str(regression_csv),
            "--target", "y",
            "--loss", "squared_error",
            "--test-k", "3",
            "--rho", "0.1",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert out.exists()
    log = json.loads((tmp_path / "training_log.json").read_text())
    assert log["n_trees"] >= 1
    assert log["ingest_summary"]["n_rows_kept"] == 80


def test_train_emit_prune_report(tmp_path, regression_csv):
    out = tmp_path / "m.json"
    code = run(
        [
            "--seed", "3",
            "train",
            "--data", str(regression_csv),
            "--target", "y",
            "--out", str(out),
            "--out-dir", str(tmp_path / "rep"),
            "--emit-prune-report",
        ]
    )
    assert code == 0
    reports = json.loads((tmp_path / "rep" / "prune_reports.json").read_text())
    assert isinstance(reports, list) and reports
    assert {"tests_performed", "splits_kept", "nodes"} <= set(reports[0])


def test_predict_and_evaluate(tmp_path, regression_csv):
    model = tmp_path / "model.json"
    assert run(["--seed", "1", "train", "--data", str(regression_csv),
                "--target", "y", "--out", str(model)]) == 0
    preds = tmp_path / "preds.csv"
    assert run(["predict", "--model", str(model), "--data", str(regression_csv),
                "--out", str(preds)]) == 0
    lines = preds.read_text().strip().splitlines()
    assert lines[0] == "prediction" and len(lines) == 81

    out_dir = tmp_path / "eval"
    assert run(["evaluate", "--model", str(model), "--data", str(regression_csv),
                "--target", "y", "--metric", "mae", "--out-dir", str(out_dir)]) == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["metric"] == "mae" and report["n"] == 80 and report["value"] >= 0.0


def test_evaluate_classification_with_one_hot(tmp_path, classification_csv):
    model = tmp_path / "model.json"
    assert run(["--seed", "2", "train", "--data", str(classification_csv),
                "--target", "y", "--loss", "logistic", "--rho", "0.1",
                "--out", str(model)]) == 0
    out_dir = tmp_path / "eval"
    assert run(["evaluate", "--model", str(model), "--data", str(classification_csv),
                "--target", "y", "--metric", "roc_auc", "--out-dir", str(out_dir)]) == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert 0.0 <= report["value"] <= 1.0


def test_cv_writes_reports(tmp_path, regression_csv):
    out_dir = tmp_path / "cv"
    code = run(["--seed", "4", "cv", "--data", str(regression_csv), "--target", "y",
                "--metric", "mae", "--folds", "4", "--max-depth", "2",
                "--n-estimators", "5", "--out-dir", str(out_dir)])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert len(report["fold_metrics"]) == 4
    csv_lines = (out_dir / "report.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 5  # header + one row per fold


def test_grid_search_tiny_grid(tmp_path, regression_csv):
    grid_file = tmp_path / "grid.json"
    grid_file.write_text(json.dumps({"learning_rate": [0.1, 0.3], "max_depth": [1, 2]}))
    out_dir = tmp_path / "gs"
    code = run(["--seed", "5", "grid-search", "--data", str(regression_csv),
                "--target", "y", "--metric", "mae", "--folds", "2",
                "--n-estimators", "5", "--grid-file", str(grid_file),
                "--out-dir", str(out_dir)])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["n_combinations"] == 4
    assert (out_dir / "best_model.json").exists()
    csv_lines = (out_dir / "report.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 5  # header + one row per combination


def test_calibrate_type1(tmp_path):
    out_dir = tmp_path / "cal"
    code = run(["--seed", "7", "calibrate", "--mode", "type1", "--k", "1,2",
                "--trials", "150", "--n", "40", "--out-dir", str(out_dir)])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    ks = [r["k_draws"] for r in report["results"]]
    assert ks == [1, 2]
    assert all(r["alpha"] == 2.0 ** (-r["k_draws"]) for r in report["results"])


def test_calibrate_correlation(tmp_path):
    out_dir = tmp_path / "cal"
    code = run(["--seed", "8", "calibrate", "--mode", "correlation",
                "--rhos", "0,1", "--c", "500", "--reps", "5", "--out-dir", str(out_dir)])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["results"][1]["mean_corr"] == 1.0


def test_rerun_byte_identical(tmp_path, regression_csv):
    args = lambda d: ["--seed", "9", "cv", "--data", str(regression_csv), "--target", "y",
                      "--metric", "mae", "--folds", "3", "--max-depth", "2",
                      "--n-estimators", "4", "--out-dir", str(d)]
    assert run(args(tmp_path / "a")) == 0
    assert run(args(tmp_path / "b")) == 0
    assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()
    assert (tmp_path / "a/report.csv").read_bytes() == (tmp_path / "b/report.csv").read_bytes()


def test_config_file_defaults_with_flag_override(tmp_path, regression_csv):
    config = tmp_path / "conf.json"
    config.write_text(json.dumps({"max_depth": 1, "n_estimators": 3, "test_k": 2}))
    out = tmp_path / "m.json"
    code = run(["--config", str(config), "--seed", "1", "train",
                "--data", str(regression_csv), "--target", "y",
                "--max-depth", "2", "--out", str(out)])
    assert code == 0
    model = json.loads(out.read_text())
    # depth honors the explicit flag (2), estimator cap the config file (3)
    assert len(model["trees"]) <= 3


def test_missing_file_is_reported(tmp_path, capsys):
    code = run(["train", "--data", str(tmp_path / "nope.csv"), "--target", "y",
                "--out", str(tmp_path / "m.json")])
    assert code != 0
    assert "error" in capsys.readouterr().err.lower()


def test_unknown_flag_fails_cleanly(tmp_path):
    code = run(["train", "--nonsense"])
    assert code != 0


def test_bad_metric_rejected(tmp_path, regression_csv):
    code = run(["cv", "--data", str(regression_csv), "--target", "y",
                "--metric", "rmse", "--out-dir", str(tmp_path / "x")])
    assert code != 0


def test_penalties_regularizer_flag(tmp_path, regression_csv):
    out = tmp_path / "pen.json"
    code = run(["--seed", "2", "train", "--data", str(regression_csv), "--target", "y",
                "--regularizer", "penalties", "--gamma", "1.0", "--reg-lambda", "1.0",
                "--n-estimators", "6", "--out", str(out)])
    assert code == 0
    model = json.loads(out.read_text())
    assert len(model["trees"]) == 6
