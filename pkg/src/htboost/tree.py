"""Single-tree growth: histogram split search, leaf weights, prediction.

Split semantics: a row goes left when ``value < threshold`` and right when
``value >= threshold``. Thresholds are bin edges, so routing binned codes
during training agrees exactly with routing raw values at prediction time.

Growth is greedy and depth-wise. Nodes are numbered in depth-first
preorder; those ids key the random streams used by post-fit pruning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import BinnedColumn
from .losses import GradHess

GAIN_CLAMP = 1e-12

_LEAF = -1


def split_gain(g_left, h_left, g_right, h_right, clamp: bool = True):
    """Loss improvement of a split: GL^2/HL + GR^2/HR - (GL+GR)^2/(HL+HR).

    Non-negative for any partition when all per-row Hessians are positive;
    rounding can produce values a hair below zero, which are clamped unless
    ``clamp`` is False. Accepts scalars or equal-shaped arrays.
    """
    gl = np.asarray(g_left, dtype=np.float64)
    hl = np.asarray(h_left, dtype=np.float64)
    gr = np.asarray(g_right, dtype=np.float64)
    hr = np.asarray(h_right, dtype=np.float64)
    if np.any(hl <= 0.0) or np.any(hr <= 0.0):
        raise ValueError("Hessian sums must be positive")
    gain = gl * gl / hl + gr * gr / hr - (gl + gr) ** 2 / (hl + hr)
    if clamp:
        gain = np.where((gain < 0.0) & (gain > -GAIN_CLAMP), 0.0, gain)
    return float(gain) if gain.ndim == 0 else gain


def regularized_gain(
    g_left: float,
    h_left: float,
    g_right: float,
    h_right: float,
    reg_lambda: float = 0.0,
    alpha_l1: float = 0.0,
    gamma: float = 0.0,
) -> float:
    """Penalty-based split score used by the baseline regularizer.

    L1 soft-thresholds each gradient sum, L2 inflates each Hessian sum and
    gamma is a flat per-split charge, so the result may be negative (the
    split is then rejected). With all penalties zero this is half the
    unregularized gain.
    """
    if h_left <= 0.0 or h_right <= 0.0:
        raise ValueError("Hessian sums must be positive")
    if reg_lambda < 0.0 or alpha_l1 < 0.0 or gamma < 0.0:
        raise ValueError("penalty terms must be non-negative")

    def soft(x: float) -> float:
        return float(np.sign(x) * max(abs(x) - alpha_l1, 0.0))

    gl, gr, gp = soft(g_left), soft(g_right), soft(g_left + g_right)
    score = 0.5 * (
        gl * gl / (h_left + reg_lambda)
        + gr * gr / (h_right + reg_lambda)
        - gp * gp / (h_left + h_right + reg_lambda)
    )
    return float(score - gamma)


def leaf_weight(g_sum: float, h_sum: float, reg_lambda: float = 0.0) -> float:
    """Optimal leaf value -G/(H + lambda) for the second-order objective."""
    denom = h_sum + reg_lambda
    if denom <= 0.0:
        raise ValueError("leaf weight needs a positive Hessian sum")
    return float(-g_sum / denom)


@dataclass
class SplitCandidate:
    feature: int
    threshold: float
    gain: float
    cover: int
    g_left: float
    h_left: float
    g_right: float
    h_right: float
    n_left: int
    n_right: int


@dataclass(slots=True)
class TreeNode:
    """One tree node; ``feature == -1`` marks a leaf.

    Every node keeps its gradient/Hessian sums and cover so a split can
    later be collapsed to a leaf without revisiting the training rows.
    """

    feature: int = _LEAF
    threshold: float = float("nan")
    left: int = -1
    right: int = -1
    gain: float = 0.0
    cover: int = 0
    g_sum: float = 0.0
    h_sum: float = 0.0
    weight: float = 0.0
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature == _LEAF


@dataclass
class Tree:
    nodes: list[TreeNode] = field(default_factory=list)
    depth: int = 0

    @property
    def n_internal(self) -> int:
        return sum(1 for n in self.nodes if not n.is_leaf)

    @property
    def n_leaves(self) -> int:
        return len(self.nodes) - self.n_internal


_NO_SPLIT = (-np.inf, -1, -1, 0.0, 0.0, 0.0, 0.0, 0, 0)


def _batch_best_splits(groups, codes, g, h, nbins, min_child_rows):
    """Best boundary per row group, vectorized over (group, feature, bin).

    ``groups`` holds local row-index arrays; ``codes`` is the (j, n) bin
    code matrix. Histograms accumulate in ascending bin order so results
    are bit-stable. Returns one tuple per group:
    (raw_gain, feature, bin, g_left, h_left, g_right, h_right, n_left,
    n_right) with gain -inf when no boundary satisfies ``min_child_rows``.
    """
    j = codes.shape[0]
    B = int(nbins.max())
    m = len(groups)
    if B < 2:
        return [_NO_SPLIT] * m
    sizes = np.array([r.size for r in groups], dtype=np.intp)
    rcat = np.concatenate(groups)
    scat = np.repeat(np.arange(m), sizes)

    # one bincount covers the g, h and count histograms of every
    # (group, feature) pair; sections of length m*j*B hold each quantity
    stride = j * B
    length = m * stride
    key = (scat * stride)[None, :] + (np.arange(j) * B)[:, None] + codes[:, rcat]
    flat = key.ravel()
    stacked = np.stack((g[rcat], h[rcat], np.ones(rcat.size)))[:, None, :]
    weights = np.broadcast_to(stacked, (3, j, rcat.size)).ravel()
    flat3 = np.concatenate((flat, flat + length, flat + 2 * length))
    hist = np.bincount(flat3, weights=weights, minlength=3 * length)
    cum = np.cumsum(hist.reshape(3, m, j, B), axis=3)

    gt, ht, ct = cum[0, :, :, -1:], cum[1, :, :, -1:], cum[2, :, :, -1:]
    gl, hl, cl = cum[0, :, :, :-1], cum[1, :, :, :-1], cum[2, :, :, :-1]
    gr, hr, cr = gt - gl, ht - hl, ct - cl

    valid = (cl >= min_child_rows) & (cr >= min_child_rows)
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = gl * gl / hl + gr * gr / hr - gt * gt / ht
    gains = np.where(valid, gains, -np.inf)

    flat_gains = gains.reshape(m, j * (B - 1))
    arg = np.argmax(flat_gains, axis=1)
    best = flat_gains[np.arange(m), arg]
    out = []
    for i in range(m):
        if not np.isfinite(best[i]):
            out.append(_NO_SPLIT)
            continue
        f, b = divmod(int(arg[i]), B - 1)
        out.append(
            (
                float(best[i]),
                f,
                b,
                float(gl[i, f, b]),
                float(hl[i, f, b]),
                float(gr[i, f, b]),
                float(hr[i, f, b]),
                int(cl[i, f, b]),
                int(cr[i, f, b]),
            )
        )
    return out


def _clamp_gain(gain: float) -> float:
    return 0.0 if -GAIN_CLAMP < gain < 0.0 else gain


def find_best_split(node_rows, binned: list[BinnedColumn], gh: GradHess, min_child_rows: int = 1):
    """Best split of one node by unregularized gain, or None.

    Scans every bin boundary of every feature; ties resolve to the lowest
    feature index, then the lowest threshold. The threshold is the upper
    edge of the left bin, so rows with ``value < threshold`` go left.
    """
    rows = np.asarray(node_rows, dtype=np.intp)
    min_child_rows = max(1, int(min_child_rows))
    if rows.size < 2 * min_child_rows:
        return None
    codes, nbins, edges, g, h = _localize(rows, binned, gh)
    (gain, f, b, gl, hl, gr, hr, cl, cr) = _batch_best_splits(
        [np.arange(rows.size)], codes, g, h, nbins, min_child_rows
    )[0]
    if not np.isfinite(gain):
        return None
    return SplitCandidate(
        feature=f,
        threshold=float(binned[f].edges[b]),
        gain=_clamp_gain(gain),
        cover=int(rows.size),
        g_left=gl,
        h_left=hl,
        g_right=gr,
        h_right=hr,
        n_left=cl,
        n_right=cr,
    )


def _penalty_scores(gl, hl, gr, hr, penalties):
    """Vectorized penalized split scores; matches ``regularized_gain``."""
    lam, alpha, gamma = penalties.reg_lambda, penalties.alpha_l1, penalties.gamma

    def soft(x):
        return np.sign(x) * np.maximum(np.abs(x) - alpha, 0.0)

    sl, sr, sp = soft(gl), soft(gr), soft(gl + gr)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (
            0.5 * (sl * sl / (hl + lam) + sr * sr / (hr + lam) - sp * sp / (hl + hr + lam))
            - gamma
        )


def _grow(codes, nbins, edges, g, h, max_depth, min_child_rows, penalties, want_leaf_values):
    """Depth-wise greedy growth over pre-sliced local arrays.

    ``codes`` is the (j, n_local) bin code matrix of the rows to grow on;
    ``g``/``h`` align with its columns. Returns the tree and, when asked,
    the leaf value each local row ends in.
    """
    n_local = codes.shape[1] if codes.ndim == 2 else 0
    reg_lambda = penalties.reg_lambda if penalties is not None else 0.0
    leaf_values = np.empty(n_local, dtype=np.float64) if want_leaf_values else None

    build: list[TreeNode] = [TreeNode()]
    frontier: list[tuple[int, np.ndarray]] = [(0, np.arange(n_local))]
    level = 0
    max_level = 0
    while frontier:
        max_level = level
        groups = [r for _, r in frontier]
        sizes = np.array([r.size for r in groups], dtype=np.intp)
        rcat = np.concatenate(groups)
        scat = np.repeat(np.arange(len(groups)), sizes)
        gtot = np.bincount(scat, weights=g[rcat], minlength=len(groups))
        htot = np.bincount(scat, weights=h[rcat], minlength=len(groups))
        for i, (nid, r) in enumerate(frontier):
            node = build[nid]
            node.depth = level
            node.cover = int(r.size)
            node.g_sum = float(gtot[i])
            node.h_sum = float(htot[i])

        may_split = [
            (nid, r) for nid, r in frontier if level < max_depth and r.size >= 2 * min_child_rows
        ]
        found = {}
        if may_split:
            candidates = _batch_best_splits(
                [r for _, r in may_split], codes, g, h, nbins, min_child_rows
            )
            if penalties is not None:
                cand_arr = np.array([c[3:7] for c in candidates], dtype=np.float64)
                scores = _penalty_scores(
                    cand_arr[:, 0], cand_arr[:, 1], cand_arr[:, 2], cand_arr[:, 3], penalties
                )
                candidates = [
                    c if np.isfinite(c[0]) and s > 0.0 else _NO_SPLIT
                    for c, s in zip(candidates, scores)
                ]
            found = {nid: cand for (nid, _), cand in zip(may_split, candidates)}

        next_frontier: list[tuple[int, np.ndarray]] = []
        for nid, r in frontier:
            node = build[nid]
            cand = found.get(nid)
            if cand is None or not np.isfinite(cand[0]):
                node.feature = _LEAF
                node.weight = leaf_weight(node.g_sum, node.h_sum, reg_lambda)
                if want_leaf_values:
                    leaf_values[r] = node.weight
                continue
            raw_gain, f, b, *_ = cand
            node.feature = f
            node.threshold = float(edges[f][b])
            node.gain = _clamp_gain(raw_gain)
            left_mask = codes[f, r] <= b
            build.append(TreeNode())
            node.left = len(build) - 1
            build.append(TreeNode())
            node.right = len(build) - 1
            next_frontier.append((node.left, r[left_mask]))
            next_frontier.append((node.right, r[~left_mask]))
        frontier = next_frontier
        level += 1

    # relabel from creation order to depth-first preorder
    order: list[int] = []
    stack = [0]
    while stack:
        nid = stack.pop()
        order.append(nid)
        node = build[nid]
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)
    remap = {old: new for new, old in enumerate(order)}
    nodes = []
    for old in order:
        node = build[old]
        if not node.is_leaf:
            node.left = remap[node.left]
            node.right = remap[node.right]
        nodes.append(node)
    return Tree(nodes=nodes, depth=max_level), leaf_values


def _localize(node_rows, binned: list[BinnedColumn], gh: GradHess):
    rows = np.asarray(node_rows, dtype=np.intp)
    codes = np.empty((len(binned), rows.size), dtype=np.int64)
    for f, col in enumerate(binned):
        codes[f] = col.codes[rows]
    nbins = np.array([col.n_bins for col in binned], dtype=np.int64)
    edges = [col.edges for col in binned]
    g = np.asarray(gh.g, dtype=np.float64)[rows]
    h = np.asarray(gh.h, dtype=np.float64)[rows]
    return codes, nbins, edges, g, h


def grow_tree(
    node_rows,
    binned: list[BinnedColumn],
    gh: GradHess,
    max_depth: int,
    min_child_rows: int = 1,
    penalties=None,
) -> Tree:
    """Grow a tree greedily, depth level by depth level.

    A node becomes a leaf when it sits at ``max_depth``, has fewer than
    ``2 * min_child_rows`` rows, or no boundary is available. Without
    ``penalties`` no gain threshold is applied during growth (rejection is
    deferred to post-fit pruning); with penalties, a split whose penalized
    score is <= 0 is rejected and the node becomes a leaf.
    """
    rows = np.asarray(node_rows, dtype=np.intp)
    if rows.size == 0:
        raise ValueError("cannot grow a tree from an empty row set")
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    min_child_rows = max(1, int(min_child_rows))
    codes, nbins, edges, g, h = _localize(rows, binned, gh)
    tree, _ = _grow(codes, nbins, edges, g, h, max_depth, min_child_rows, penalties, False)
    return tree


def predict_tree(tree: Tree, row) -> float:
    """Route one row to a leaf; ties at a threshold go right."""
    row = np.asarray(row, dtype=np.float64)
    node = tree.nodes[0]
    while not node.is_leaf:
        node = tree.nodes[node.left if row[node.feature] < node.threshold else node.right]
    return float(node.weight)


def predict_rows(tree: Tree, features: np.ndarray) -> np.ndarray:
    """Vectorized routing of an (n, j) matrix through one tree."""
    features = np.asarray(features, dtype=np.float64)
    out = np.empty(features.shape[0], dtype=np.float64)
    stack: list[tuple[int, np.ndarray]] = [(0, np.arange(features.shape[0]))]
    while stack:
        nid, idx = stack.pop()
        node = tree.nodes[nid]
        if node.is_leaf:
            out[idx] = node.weight
            continue
        mask = features[idx, node.feature] < node.threshold
        stack.append((node.right, idx[~mask]))
        stack.append((node.left, idx[mask]))
    return out
