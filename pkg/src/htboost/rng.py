"""Deterministic derivation of independent random streams.

Randomized routines in this package never share a mutable generator across
logical units of work. Instead, each unit (a tree, a node test, a single
null draw, a cross-validation fold) addresses its own stream by an integer
path under a root seed. Two consequences:

* results are bit-reproducible for a fixed seed, and
* verdicts do not depend on the order in which units are evaluated, so
  parallel and serial execution agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A root seed plus an integer path identifying one logical stream."""

    seed: int
    path: tuple[int, ...] = ()

    def child(self, *steps: int) -> "RngStream":
        """Extend the path, e.g. ``stream.child(tree_index, node_id)``."""
        return RngStream(self.seed, self.path + tuple(int(s) for s in steps))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed & _MASK64, spawn_key=self.path)
        return np.random.default_rng(seq)


def derive_seed(seed: int, *path: int) -> int:
    """Derive a 63-bit integer seed for a sub-task such as a CV fold."""
    seq = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, np.uint64)[0] >> 1)
