"""Gradient boosting loop, ensemble prediction and model files.

Two regularizer modes, exactly one active per config:

* ``TestConfig`` — trees grow unhindered, every stored split is then
  tested against null gains; a fully pruned tree is discarded and ends
  training.
* ``PenaltyConfig`` — the classical baseline: L1/L2/min-gain penalties
  gate splits during growth and training runs to the estimator cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset, bin_dataset
from .losses import GradHess, LossKind, base_score, grad_hess, loss_value, sigmoid
from .nulltest import PruneReport, TestConfig, prune_tree, stop_check
from .rng import RngStream
from .tree import Tree, TreeNode, _grow, predict_rows

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for unreadable or incompatible model files."""


@dataclass(frozen=True)
class PenaltyConfig:
    """Classical penalty regularization: L2, L1 and a flat split charge."""

    reg_lambda: float = 0.0
    alpha_l1: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.reg_lambda < 0 or self.alpha_l1 < 0 or self.gamma < 0:
            raise ValueError("penalty terms must be non-negative")


@dataclass(frozen=True)
class BoosterConfig:
    loss: LossKind = LossKind.SQUARED_ERROR
    learning_rate: float = 0.1
    max_depth: int = 6
    n_estimators_cap: int = 1000
    regularizer: TestConfig | PenaltyConfig = field(default_factory=TestConfig)
    min_child_rows: int = 1
    max_bins: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.n_estimators_cap < 0:
            raise ValueError("n_estimators_cap must be >= 0")
        if self.min_child_rows < 1:
            raise ValueError("min_child_rows must be >= 1")
        if self.max_bins < 2:
            raise ValueError("max_bins must be >= 2")
        if not isinstance(self.regularizer, (TestConfig, PenaltyConfig)):
            raise ValueError("regularizer must be a TestConfig or a PenaltyConfig")

    @property
    def uses_test(self) -> bool:
        return isinstance(self.regularizer, TestConfig)

    def reseeded(self, seed: int) -> "BoosterConfig":
        reg = self.regularizer
        if isinstance(reg, TestConfig):
            reg = replace(reg, seed=seed)
        return replace(self, seed=seed, regularizer=reg)


@dataclass
class Ensemble:
    trees: list[Tree]
    base_score: float
    learning_rate: float
    loss: LossKind
    n_features: int
    feature_names: list[str] = field(default_factory=list)
    training_log: list[dict] = field(default_factory=list)
    prune_reports: list[PruneReport] = field(default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} feature columns, got {features.shape}"
            )
        raw = np.full(features.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            raw += self.learning_rate * predict_rows(tree, features)
        return raw


def fit(dataset: Dataset, config: BoosterConfig) -> Ensemble:
    """Boost until the estimator cap, or until a tree is fully pruned.

    Each iteration recomputes the gradient/Hessian at the current raw
    scores, grows one tree, and in test mode prunes it; a surviving tree
    updates the raw scores by ``learning_rate`` times its leaf weights.
    """
    y = dataset.target
    if config.loss is LossKind.LOGISTIC and not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("logistic loss requires a binary 0/1 target")

    binned = bin_dataset(dataset, config.max_bins)
    codes = np.empty((dataset.j, dataset.n), dtype=np.int64)
    for f, col in enumerate(binned):
        codes[f] = col.codes
    nbins = np.array([col.n_bins for col in binned], dtype=np.int64)
    edges = [col.edges for col in binned]
    base = base_score(config.loss, y)
    raw = np.full(dataset.n, base, dtype=np.float64)
    penalties = None if config.uses_test else config.regularizer
    min_child = max(1, config.min_child_rows)

    ensemble = Ensemble(
        trees=[],
        base_score=base,
        learning_rate=config.learning_rate,
        loss=config.loss,
        n_features=dataset.j,
        feature_names=list(dataset.column_names),
    )

    for it in range(config.n_estimators_cap):
        gh = grad_hess(config.loss, y, raw)
        tree, leaf_values = _grow(
            codes, nbins, edges, gh.g, gh.h, config.max_depth, min_child, penalties, True
        )
        entry = {"iteration": it, "grown_internal_nodes": tree.n_internal}
        if config.uses_test:
            stream = RngStream(config.regularizer.seed).child(it)
            tree, report = prune_tree(tree, gh, y, config.regularizer, stream)
            ensemble.prune_reports.append(report)
            entry.update(
                tests_performed=report.tests_performed,
                splits_kept=report.splits_kept,
                splits_pruned=report.splits_pruned,
                fully_pruned=report.tree_fully_pruned,
            )
            if stop_check(report):
                entry["train_loss"] = loss_value(config.loss, y, raw)
                ensemble.training_log.append(entry)
                break
            if report.splits_pruned > 0:
                leaf_values = predict_rows(tree, dataset.features)
        raw = raw + config.learning_rate * leaf_values
        ensemble.trees.append(tree)
        entry["train_loss"] = loss_value(config.loss, y, raw)
        ensemble.training_log.append(entry)
    return ensemble


def predict(ensemble: Ensemble, data) -> np.ndarray:
    """Raw scores for regression, probabilities for the logistic loss."""
    features = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    raw = ensemble.predict_raw(features)
    return sigmoid(raw) if ensemble.loss is LossKind.LOGISTIC else raw


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"leaf": node.weight, "cover": node.cover}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": node.left,
        "right": node.right,
        "gain": node.gain,
        "cover": node.cover,
    }


def _node_from_dict(obj: dict) -> TreeNode:
    if "leaf" in obj:
        return TreeNode(weight=float(obj["leaf"]), cover=int(obj.get("cover", 0)))
    return TreeNode(
        feature=int(obj["feature"]),
        threshold=float(obj["threshold"]),
        left=int(obj["left"]),
        right=int(obj["right"]),
        gain=float(obj.get("gain", 0.0)),
        cover=int(obj.get("cover", 0)),
    )


def save_model(ensemble: Ensemble, path) -> None:
    """Write the ensemble as JSON; reloading reproduces predictions exactly."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "loss": ensemble.loss.value,
        "base_score": ensemble.base_score,
        "learning_rate": ensemble.learning_rate,
        "n_features": ensemble.n_features,
        "feature_names": ensemble.feature_names,
        "trees": [{"nodes": [_node_to_dict(n) for n in t.nodes]} for t in ensemble.trees],
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_model(path) -> Ensemble:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model file ({exc})") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise ModelFormatError(f"{path}: missing format_version field")
    if payload["format_version"] != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format version {payload['format_version']} is not supported "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    try:
        trees = []
        for tree_obj in payload["trees"]:
            nodes = [_node_from_dict(o) for o in tree_obj["nodes"]]
            depth = _assign_depths(nodes)
            trees.append(Tree(nodes=nodes, depth=depth))
        return Ensemble(
            trees=trees,
            base_score=float(payload["base_score"]),
            learning_rate=float(payload["learning_rate"]),
            loss=LossKind(payload["loss"]),
            n_features=int(payload["n_features"]),
            feature_names=list(payload.get("feature_names", [])),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from exc


def _assign_depths(nodes: list[TreeNode]) -> int:
    if not nodes:
        raise ValueError("a tree needs at least one node")
    max_depth = 0
    stack = [(0, 0)]
    while stack:
        nid, depth = stack.pop()
        node = nodes[nid]
        node.depth = depth
        max_depth = max(max_depth, depth)
        if not node.is_leaf:
            stack.append((node.left, depth + 1))
            stack.append((node.right, depth + 1))
    return max_depth
