"""Multi-layered network data model and file IO.

A multi-layered network is a list of undirected, unweighted layers over a
shared node universe. Node ids are densified to 0..N-1 on load; the same
physical id used in two layers marks the two replicas as counterparts.

Replica (supra node) packing is layer-major: replicas of layer 0 come
first, ordered by node id, then layer 1, and so on. All embedding tables
and partition arrays are indexed by this packing.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class SupraNode:
    """One replica: physical node `node` inside layer `layer` (dense ids)."""

    node: int
    layer: int


@dataclass
class Layer:
    """Single undirected layer: sorted adjacency lists over present nodes."""

    layer: int
    adjacency: dict[int, list[int]]

    @property
    def present(self) -> list[int]:
        return sorted(self.adjacency)

    @property
    def num_edges(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def has_node(self, node: int) -> bool:
        return node in self.adjacency

    def validate(self) -> None:
        for u, nbrs in self.adjacency.items():
            if sorted(set(nbrs)) != nbrs:
                raise ValidationError(f"layer {self.layer}: neighbor list of {u} not sorted/unique")
            if u in nbrs:
                raise ValidationError(f"layer {self.layer}: self-loop at {u}")
            for v in nbrs:
                if u not in self.adjacency.get(v, ()):
                    raise ValidationError(f"layer {self.layer}: edge {u}-{v} not symmetric")


@dataclass
class LabelTable:
    """Partial node -> dense class index map, with the original class tokens."""

    labels: dict[int, int]
    class_tokens: list[str]

    @property
    def num_classes(self) -> int:
        return len(self.class_tokens)


@dataclass
class MultilayerNetwork:
    """Validated multi-layered network with dense node and layer ids.

    `node_tokens[v]` / `layer_tokens[l]` keep the original input ids so
    files written back refer to the caller's universe.
    """

    layers: list[Layer]
    num_nodes: int
    node_tokens: list[int] = field(default_factory=list)
    layer_tokens: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.node_tokens:
            self.node_tokens = list(range(self.num_nodes))
        if not self.layer_tokens:
            self.layer_tokens = list(range(len(self.layers)))
        self._build_packing()

    def _build_packing(self):
        self._present_sorted = [layer.present for layer in self.layers]
        self._offsets = np.zeros(len(self.layers) + 1, dtype=np.int64)
        for l, present in enumerate(self._present_sorted):
            self._offsets[l + 1] = self._offsets[l] + len(present)
        n = int(self._offsets[-1])
        self._replica_node = np.empty(n, dtype=np.int64)
        self._replica_layer = np.empty(n, dtype=np.int64)
        for l, present in enumerate(self._present_sorted):
            lo, hi = self._offsets[l], self._offsets[l + 1]
            self._replica_node[lo:hi] = present
            self._replica_layer[lo:hi] = l

    # --- structure queries -------------------------------------------------

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_replicas(self) -> int:
        return int(self._offsets[-1])

    @property
    def replica_node(self) -> np.ndarray:
        return self._replica_node

    @property
    def replica_layer(self) -> np.ndarray:
        return self._replica_layer

    def has_replica(self, node: int, layer: int) -> bool:
        return 0 <= layer < self.num_layers and self.layers[layer].has_node(node)

    def replica_index(self, node: int, layer: int) -> int:
        """Dense layer-major index of the replica; errors if absent."""
        self._check(node, layer)
        present = self._present_sorted[layer]
        return int(self._offsets[layer]) + bisect_left(present, node)

    def supra_node(self, index: int) -> SupraNode:
        return SupraNode(int(self._replica_node[index]), int(self._replica_layer[index]))

    def layers_of(self, node: int) -> list[int]:
        return [l for l in range(self.num_layers) if self.layers[l].has_node(node)]

    def neighbors(self, v: SupraNode) -> list[int]:
        """Sorted intra-layer neighbor node ids of replica v."""
        self._check(v.node, v.layer)
        return list(self.layers[v.layer].adjacency[v.node])

    def degree(self, v: SupraNode) -> int:
        self._check(v.node, v.layer)
        return self.layers[v.layer].degree(v.node)

    def _check(self, node: int, layer: int) -> None:
        if not 0 <= layer < self.num_layers:
            raise ValidationError(f"layer {layer} out of range (L={self.num_layers})")
        if not self.layers[layer].has_node(node):
            raise ValidationError(f"node {node} not present in layer {layer}")

    def validate(self, strict_universe: bool = True) -> None:
        for layer in self.layers:
            layer.validate()
            for u in layer.adjacency:
                if not 0 <= u < self.num_nodes:
                    raise ValidationError(f"node {u} outside universe 0..{self.num_nodes - 1}")
        if strict_universe:
            used = set()
            for layer in self.layers:
                used.update(layer.adjacency)
            if used != set(range(self.num_nodes)):
                missing = sorted(set(range(self.num_nodes)) - used)[:5]
                raise ValidationError(f"node universe not covered; unused ids start at {missing}")

    # --- construction ------------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        edges: list[tuple[int, int, int]],
        num_layers: int | None = None,
        num_nodes: int | None = None,
        strict_universe: bool = True,
    ) -> "MultilayerNetwork":
        """Build from (layer, u, v) triples already in dense id space.

        Duplicate and reversed-duplicate edges collapse; self-loops are
        rejected. With `num_nodes` given, ids without any edge are kept in
        the universe (used by edge-holdout evaluation); `strict_universe`
        then must be False.
        """
        if num_layers is None:
            num_layers = 1 + max((e[0] for e in edges), default=-1)
        per_layer: list[set[tuple[int, int]]] = [set() for _ in range(num_layers)]
        max_node = -1
        for l, u, v in edges:
            if u == v:
                raise ValidationError(f"self-loop {u}-{v} in layer {l}")
            if not 0 <= l < num_layers:
                raise ValidationError(f"layer {l} out of range")
            per_layer[l].add((min(u, v), max(u, v)))
            max_node = max(max_node, u, v)
        if num_nodes is None:
            num_nodes = max_node + 1
        elif max_node >= num_nodes:
            raise ValidationError(f"node {max_node} outside universe 0..{num_nodes - 1}")
        layers = []
        for l, pairs in enumerate(per_layer):
            adjacency: dict[int, list[int]] = {}
            for u, v in sorted(pairs):
                adjacency.setdefault(u, []).append(v)
                adjacency.setdefault(v, []).append(u)
            for u in adjacency:
                adjacency[u].sort()
            layers.append(Layer(l, adjacency))
        net = cls(layers, num_nodes)
        net.validate(strict_universe=strict_universe)
        return net


def load_multilayer(path, strict: bool = True) -> MultilayerNetwork:
    """Load an edge-list file: `layer src dst` per line, `#` comments.

    Arbitrary non-negative integer ids are densified (sorted order); the
    original ids are retained as tokens. In strict mode a weight column or
    a self-loop is an error; otherwise weights are ignored and self-loops
    dropped.
    """
    raw_edges: list[tuple[int, int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) == 4 and not strict:
                parts = parts[:3]
            if len(parts) != 3:
                raise ParseError(path, lineno, f"expected `layer src dst`, got {len(parts)} fields")
            try:
                l, u, v = (int(p) for p in parts)
            except ValueError:
                raise ParseError(path, lineno, f"non-integer field in {parts!r}") from None
            if l < 0 or u < 0 or v < 0:
                raise ParseError(path, lineno, "negative id")
            if u == v:
                if strict:
                    raise ParseError(path, lineno, f"self-loop at node {u}")
                continue
            raw_edges.append((l, u, v))
    if not raw_edges:
        raise ValidationError(f"{path}: no edges found")
    layer_tokens = sorted({e[0] for e in raw_edges})
    node_tokens = sorted({e[1] for e in raw_edges} | {e[2] for e in raw_edges})
    layer_map = {tok: i for i, tok in enumerate(layer_tokens)}
    node_map = {tok: i for i, tok in enumerate(node_tokens)}
    dense = [(layer_map[l], node_map[u], node_map[v]) for l, u, v in raw_edges]
    net = MultilayerNetwork.from_edges(dense, num_layers=len(layer_tokens))
    net.node_tokens = node_tokens
    net.layer_tokens = layer_tokens
    return net


def save_multilayer(net: MultilayerNetwork, path) -> None:
    """Write the canonical edge list (sorted, one line per undirected edge)."""
    with open(path, "w", encoding="utf-8") as fh:
        for l, layer in enumerate(net.layers):
            ltok = net.layer_tokens[l]
            for u in layer.present:
                for v in layer.adjacency[u]:
                    if u < v:
                        fh.write(f"{ltok} {net.node_tokens[u]} {net.node_tokens[v]}\n")


def load_labels(path, net: MultilayerNetwork) -> LabelTable:
    """Load `node class_token` lines; node ids are the file's original ids.

    Class tokens are re-indexed densely in sorted token order. Duplicate
    assignments must agree; unknown or out-of-range nodes are errors.
    """
    token_of_node = {tok: i for i, tok in enumerate(net.node_tokens)}
    raw: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ParseError(path, lineno, f"expected `node class`, got {len(parts)} fields")
            try:
                node_tok = int(parts[0])
            except ValueError:
                raise ParseError(path, lineno, f"non-integer node id {parts[0]!r}") from None
            if node_tok not in token_of_node:
                raise ValidationError(f"{path}:{lineno}: node {node_tok} not in the network")
            node = token_of_node[node_tok]
            if node in raw and raw[node] != parts[1]:
                raise ValidationError(
                    f"{path}:{lineno}: node {node_tok} labeled both {raw[node]!r} and {parts[1]!r}"
                )
            raw[node] = parts[1]
    class_tokens = sorted(set(raw.values()))
    class_map = {tok: i for i, tok in enumerate(class_tokens)}
    return LabelTable({node: class_map[tok] for node, tok in raw.items()}, class_tokens)
