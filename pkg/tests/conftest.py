"""Shared fixtures and independent oracle implementations.

The oracles here deliberately avoid the library's own code paths: split
search is exhaustive over raw-value midpoints, AUC counts pairs directly,
and the reference tree grower is a plain recursion. Tests compare the
fast implementations against these.
"""

from __future__ import annotations

import numpy as np
import pytest

from htboost import Dataset, GradHess, LossKind, find_best_split


def make_noise_dataset(rng: np.random.Generator, n: int, j: int) -> Dataset:
    X = rng.standard_normal((n, j))
    y = rng.standard_normal(n)
    return Dataset(X, y, [f"x{i}" for i in range(j)], ["numeric"] * j)


def make_signal_dataset(rng: np.random.Generator, n: int, j: int) -> Dataset:
    X = rng.standard_normal((n, j))
    y = 2.0 * X[:, 0] + rng.standard_normal(n)
    return Dataset(X, y, [f"x{i}" for i in range(j)], ["numeric"] * j)


def first_step_gradhess(y: np.ndarray) -> GradHess:
    """Squared-error gradients at the mean-target base score."""
    y = np.asarray(y, dtype=np.float64)
    return GradHess(np.full(y.shape, np.mean(y)) - y, np.ones_like(y))


def exhaustive_best_gain(X: np.ndarray, g: np.ndarray, h: np.ndarray) -> float:
    """Best split gain by brute force over every midpoint of raw values."""
    best = -np.inf
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            threshold = (lo + hi) / 2.0
            left = X[:, f] < threshold
            gl, hl = g[left].sum(), h[left].sum()
            gr, hr = g[~left].sum(), h[~left].sum()
            gain = gl * gl / hl + gr * gr / hr - (gl + gr) ** 2 / (hl + hr)
            best = max(best, gain)
    return best


def pairwise_auc(y: np.ndarray, scores: np.ndarray) -> float:
    """AUC by counting every positive/negative pair, ties worth one half."""
    pos = scores[np.asarray(y) == 1]
    neg = scores[np.asarray(y) == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def reference_grow(rows, binned, gh, max_depth, min_child_rows=1):
    """Plain recursive grower; returns nested tuples for structure checks.

    Leaves are ('leaf', cover); splits are ('split', feature, threshold,
    gain, left, right). Uses the same per-node search as the library but
    orchestrates recursion independently of the level-wise builder.
    """
    rows = np.asarray(rows, dtype=np.intp)

    def build(node_rows, depth):
        if depth >= max_depth or node_rows.size < 2 * min_child_rows:
            return ("leaf", int(node_rows.size))
        cand = find_best_split(node_rows, binned, gh, min_child_rows)
        if cand is None:
            return ("leaf", int(node_rows.size))
        values = np.stack([binned[cand.feature].codes[node_rows]])
        edge_bin = np.searchsorted(binned[cand.feature].edges, cand.threshold, side="left")
        left_mask = values[0] <= edge_bin
        left = build(node_rows[left_mask], depth + 1)
        right = build(node_rows[~left_mask], depth + 1)
        return ("split", cand.feature, cand.threshold, cand.gain, left, right)

    return build(rows, 0)


def tree_structure(tree):
    """Convert a grown Tree to the reference's nested-tuple shape."""

    def walk(nid):
        node = tree.nodes[nid]
        if node.is_leaf:
            return ("leaf", node.cover)
        return (
            "split",
            node.feature,
            node.threshold,
            node.gain,
            walk(node.left),
            walk(node.right),
        )

    return walk(0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240613)
