"""Truncated uniform random walks over the supra graph.

Each walk owns a child generator seeded from (seed, root, walk index), so
the corpus is identical no matter in which order walks are produced. Walks
terminate early at neighbor-less replicas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .supra import SupraGraph

_SHUFFLE_STREAM = 1  # keeps shuffle draws disjoint from per-walk streams


@dataclass
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    seed: int = 42

    def validate(self) -> None:
        if self.walks_per_node < 1:
            raise ValidationError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValidationError("walk_length must be >= 2")


@dataclass
class WalkCorpus:
    """Walks as arrays of replica indices, plus exact token counts."""

    walks: list[np.ndarray]
    frequencies: np.ndarray

    @property
    def num_tokens(self) -> int:
        return int(self.frequencies.sum())


def _single_walk(adjacency, root: int, length: int, rng: np.random.Generator) -> np.ndarray:
    walk = np.empty(length, dtype=np.int64)
    walk[0] = root
    cur = root
    steps = 1
    for t in range(1, length):
        nbrs = adjacency[cur]
        if len(nbrs) == 0:
            break
        cur = int(nbrs[rng.integers(len(nbrs))])
        walk[t] = cur
        steps += 1
    return walk[:steps]


def generate_walks(g: SupraGraph, cfg: WalkConfig) -> WalkCorpus:
    """walks_per_node truncated walks rooted at every replica.

    Root order is shuffled per pass (affects corpus order only); walk
    contents depend only on (seed, root, pass).
    """
    cfg.validate()
    n = g.num_nodes
    if n == 0:
        raise ValidationError("empty supra graph")
    walks: list[np.ndarray] = []
    shuffle_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((cfg.seed, _SHUFFLE_STREAM))))
    for epoch in range(cfg.walks_per_node):
        order = shuffle_rng.permutation(n)
        for root in order:
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((cfg.seed, 0, int(root), epoch)))
            )
            walks.append(_single_walk(g.adjacency, int(root), cfg.walk_length, rng))
    frequencies = np.zeros(n, dtype=np.int64)
    for walk in walks:
        frequencies += np.bincount(walk, minlength=n)
    return WalkCorpus(walks, frequencies)


def save_corpus(corpus: WalkCorpus, g: SupraGraph, path) -> None:
    """One walk per line, `node@layer` tokens in the caller's original ids."""
    net = g.base
    with open(path, "w", encoding="utf-8") as fh:
        for walk in corpus.walks:
            tokens = (
                f"{net.node_tokens[net.replica_node[i]]}@{net.layer_tokens[net.replica_layer[i]]}"
                for i in walk
            )
            fh.write(" ".join(tokens) + "\n")
