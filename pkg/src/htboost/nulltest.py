"""Permutation null-gain test for split quality, pruning and stopping.

Any partition of the gradient/Hessian vectors has non-negative gain, even
a partition induced by a variable that carries no information about the
target. The test therefore scores a candidate split against draws from
that "null" gain distribution:

1. sample ``cover`` rows of (g, h, y) uniformly without replacement from
   the full training vectors;
2. build a competitor target ``r_y`` by permuting the sampled y values,
   optionally keeping a fraction ``rho`` unpermuted (the kept fraction is
   the competitor's expected correlation to the target);
3. split the sampled gradients at a random threshold on ``r_y`` and take
   the gain of that partition.

A candidate passes when its gain strictly exceeds all ``k_draws`` such
null gains; ties fail. Pruning applies the test to every stored split
top-down and collapses failures to leaves, and boosting stops when a
whole tree is pruned.

Each (tree, node, draw) triple uses its own derived random stream, so
verdicts are reproducible and independent of traversal order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .losses import GradHess
from .rng import RngStream
from .tree import Tree, TreeNode, leaf_weight, split_gain

DEFAULT_MAX_RESAMPLE = 16


@dataclass
class TouchCounter:
    """Counts row-level operations of the null sampling procedure.

    Four passes are counted, mirroring how the sampling cost scales:
    drawing the cover indices, gathering the (g, h, y) triples, selecting
    the permuted positions of ``r_y``, and writing ``r_y`` itself. At
    ``cover == n`` and ``rho == 0`` one draw touches exactly ``4n`` rows;
    raising rho only shrinks the selection pass. Threshold choice and the
    gain evaluation are not part of the sampling accounting.
    """

    touches: int = 0

    def add(self, k: int) -> None:
        self.touches += int(k)


@dataclass(frozen=True)
class TestConfig:
    """Null-test settings; the per-split type-1 target is ``2**-k_draws``."""

    __test__ = False  # not a pytest class, despite the name

    k_draws: int = 3
    rho: float = 0.0
    seed: int = 0
    max_resample: int = DEFAULT_MAX_RESAMPLE

    def __post_init__(self) -> None:
        if self.k_draws < 1:
            raise ValueError("k_draws must be at least 1")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.max_resample < 0:
            raise ValueError("max_resample must be non-negative")

    @property
    def alpha(self) -> float:
        return 2.0 ** (-self.k_draws)


@dataclass
class NullDraw:
    """One sampled null gain; ``resamples`` counts degenerate retries."""

    gain: float
    threshold_used: float
    resamples: int = 0


@dataclass
class NodeTestRecord:
    node_id: int
    gain: float
    cover: int
    null_gains: list[float]
    passed: bool


@dataclass
class PruneReport:
    """Outcome of testing one tree's stored splits."""

    tests_performed: int = 0
    splits_pruned: int = 0
    splits_kept: int = 0
    tree_fully_pruned: bool = False
    records: list[NodeTestRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tests_performed": self.tests_performed,
            "splits_pruned": self.splits_pruned,
            "splits_kept": self.splits_kept,
            "tree_fully_pruned": self.tree_fully_pruned,
            "nodes": [
                {
                    "node_id": r.node_id,
                    "gain": r.gain,
                    "cover": r.cover,
                    "null_gains": r.null_gains,
                    "passed": r.passed,
                }
                for r in self.records
            ],
        }


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def sample_cover_triples(
    gh: GradHess,
    y,
    cover: int,
    rng: np.random.Generator,
    counter: TouchCounter | None = None,
):
    """Draw ``cover`` paired (g, h, y) rows uniformly without replacement.

    Sampling is always from the full training vectors, not a node's rows,
    so every node with the same cover faces the same null distribution.
    With ``cover == n`` the result is a permutation of the full triples.
    """
    y = np.asarray(y, dtype=np.float64)
    n = gh.n
    if y.shape[0] != n:
        raise ValueError("target length must match the gradient length")
    if not 1 <= cover <= n:
        raise ValueError(f"cover must lie in [1, {n}], got {cover}")
    idx = rng.choice(n, size=cover, replace=False)
    if counter is not None:
        counter.add(cover)  # index draws
        counter.add(cover)  # triple gathers
    return gh.g[idx], gh.h[idx], y[idx]


def make_r_y(
    y_c,
    rho: float,
    rng: np.random.Generator,
    counter: TouchCounter | None = None,
) -> np.ndarray:
    """Build the information-reduced competitor target.

    Keeps ``round(rho * len(y_c))`` uniformly chosen positions identical to
    ``y_c`` and gives the remaining positions a uniform random permutation
    of their own values. rho=0 is a full permutation; rho=1 returns the
    sample unchanged. The kept fraction equals the expected correlation of
    the result to ``y_c``.
    """
    y_c = np.asarray(y_c, dtype=np.float64)
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    c = y_c.shape[0]
    n_keep = _round_half_up(rho * c)
    n_perm = c - n_keep
    if counter is not None:
        counter.add(n_perm)  # permuted-position selection
        counter.add(c)  # output writes
    if n_perm <= 0:
        return y_c.copy()
    if n_keep == 0:
        return y_c[rng.permutation(c)]
    pos = rng.choice(c, size=n_perm, replace=False)
    out = y_c.copy()
    out[np.sort(pos)] = y_c[pos]
    return out


def null_gain_draw(
    g_c,
    h_c,
    r_y,
    rng: np.random.Generator,
    max_resample: int = DEFAULT_MAX_RESAMPLE,
    counter: TouchCounter | None = None,
) -> NullDraw:
    """Gain of one random split of the sampled gradients on ``r_y``.

    The threshold is uniform over the distinct values of ``r_y`` excluding
    the minimum, so both sides are non-empty whenever a split exists at
    all. A constant ``r_y`` admits no split; after ``max_resample``
    attempts the draw degenerates to gain 0, the weakest competitor.
    """
    g_c = np.asarray(g_c, dtype=np.float64)
    h_c = np.asarray(h_c, dtype=np.float64)
    r_y = np.asarray(r_y, dtype=np.float64)
    if g_c.shape != h_c.shape or g_c.shape != r_y.shape:
        raise ValueError("g, h and r_y must have equal lengths")
    if g_c.shape[0] < 2:
        raise ValueError("need at least 2 rows to draw a null split")

    candidates = np.unique(r_y)[1:]
    attempts = 0
    while candidates.size > 0:
        threshold = float(candidates[rng.integers(candidates.size)])
        left = r_y < threshold
        n_left = int(np.count_nonzero(left))
        if 0 < n_left < r_y.shape[0]:
            gain = split_gain(
                float(g_c[left].sum()),
                float(h_c[left].sum()),
                float(g_c[~left].sum()),
                float(h_c[~left].sum()),
            )
            return NullDraw(gain=float(gain), threshold_used=threshold, resamples=attempts)
        if attempts >= max_resample:
            break
        attempts += 1
    return NullDraw(gain=0.0, threshold_used=float("nan"), resamples=max_resample)


def split_test(
    candidate_gain: float,
    cover: int,
    gh: GradHess,
    y,
    config: TestConfig,
    stream: RngStream,
) -> tuple[bool, list[NullDraw]]:
    """Test one candidate gain against ``k_draws`` independent null draws.

    The candidate passes only when its gain strictly exceeds every null
    gain; a tie counts as a failure. Draw ``d`` uses the derived stream
    ``stream.child(d)``.
    """
    if candidate_gain < 0.0:
        raise ValueError("candidate gain must be non-negative")
    draws: list[NullDraw] = []
    for d in range(config.k_draws):
        rng = stream.child(d).generator()
        g_c, h_c, y_c = sample_cover_triples(gh, y, cover, rng)
        r_y = make_r_y(y_c, config.rho, rng)
        draws.append(null_gain_draw(g_c, h_c, r_y, rng, config.max_resample))
    passed = all(candidate_gain > d.gain for d in draws)
    return passed, draws


def prune_tree(
    tree: Tree,
    gh: GradHess,
    y,
    config: TestConfig,
    stream: RngStream,
) -> tuple[Tree, PruneReport]:
    """Test every surviving split top-down; collapse failures to leaves.

    Traversal is breadth-first from the root. When a node fails, it
    becomes a leaf with weight -G/H over its cover rows and its subtree is
    discarded untested, so ``tests_performed`` counts executed tests only.
    Node ``m`` draw ``d`` uses ``stream.child(m, d)``, making the report
    independent of traversal order.
    """
    verdicts: dict[int, tuple[bool, list[NullDraw]]] = {}
    queue = [0]
    while queue:
        nid = queue.pop(0)
        node = tree.nodes[nid]
        if node.is_leaf:
            continue
        if node.cover < 1 or node.h_sum <= 0.0:
            raise ValueError(f"node {nid} lacks stored split statistics")
        passed, draws = split_test(node.gain, node.cover, gh, y, config, stream.child(nid))
        verdicts[nid] = (passed, draws)
        if passed:
            queue.append(node.left)
            queue.append(node.right)

    report = PruneReport()
    for nid in sorted(verdicts):
        passed, draws = verdicts[nid]
        node = tree.nodes[nid]
        report.records.append(
            NodeTestRecord(
                node_id=nid,
                gain=node.gain,
                cover=node.cover,
                null_gains=[d.gain for d in draws],
                passed=passed,
            )
        )
    report.tests_performed = len(report.records)
    report.splits_kept = sum(1 for r in report.records if r.passed)
    report.splits_pruned = report.tests_performed - report.splits_kept
    report.tree_fully_pruned = report.splits_kept == 0

    pruned_nodes: list[TreeNode] = []

    def copy_subtree(nid: int) -> int:
        node = tree.nodes[nid]
        keep_split = not node.is_leaf and verdicts[nid][0]
        new_id = len(pruned_nodes)
        if not keep_split:
            weight = node.weight if node.is_leaf else leaf_weight(node.g_sum, node.h_sum)
            pruned_nodes.append(
                TreeNode(
                    weight=weight,
                    cover=node.cover,
                    g_sum=node.g_sum,
                    h_sum=node.h_sum,
                    depth=node.depth,
                )
            )
            return new_id
        pruned_nodes.append(
            TreeNode(
                feature=node.feature,
                threshold=node.threshold,
                gain=node.gain,
                cover=node.cover,
                g_sum=node.g_sum,
                h_sum=node.h_sum,
                depth=node.depth,
            )
        )
        pruned_nodes[new_id].left = copy_subtree(node.left)
        pruned_nodes[new_id].right = copy_subtree(node.right)
        return new_id

    copy_subtree(0)
    depth = max(n.depth for n in pruned_nodes)
    return Tree(nodes=pruned_nodes, depth=depth), report


def stop_check(report: PruneReport) -> bool:
    """Boosting stops as soon as an entire tree is pruned away."""
    return report.tree_fully_pruned
