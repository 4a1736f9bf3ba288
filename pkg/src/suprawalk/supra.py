"""Supra graph construction: Jaccard-gated inter-layer coupling edges.

Counterpart replicas (same node id, different layers) are linked when the
Jaccard overlap of their intra-layer neighborhoods clears a threshold.
Surviving inter-layer edges are binarized, so the walker treats them like
any intra-layer edge. Intra-layer edges are copied verbatim; the supra
adjacency is block-diagonal per layer plus counterpart off-diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import MultilayerNetwork, SupraNode


def jaccard_coupling(net: MultilayerNetwork, node: int, layer_a: int, layer_b: int) -> float:
    """Neighborhood Jaccard overlap of node's replicas in two layers.

    Two empty neighborhoods give 0.0: coupling isolated replicas would
    assert similarity with no evidence.
    """
    na = set(net.neighbors(SupraNode(node, layer_a)))
    nb = set(net.neighbors(SupraNode(node, layer_b)))
    union = len(na | nb)
    if union == 0:
        return 0.0
    return len(na & nb) / union


@dataclass
class SupraGraph:
    """Immutable supra graph over the dense replica packing of `base`."""

    base: MultilayerNetwork
    threshold: float
    # (node, layer_a, layer_b, jaccard weight) for every surviving edge, layer_a < layer_b
    inter_edges: list[tuple[int, int, int, float]]
    # per replica index: neighbor replica indices, intra (node order) then inter (layer order)
    adjacency: list[np.ndarray] = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return self.base.num_replicas

    def neighbor_indices(self, index: int) -> np.ndarray:
        return self.adjacency[index]

    def supra_neighbors(self, v: SupraNode) -> list[SupraNode]:
        """Neighbors of replica v: same-layer nodes then counterparts."""
        idx = self.base.replica_index(v.node, v.layer)
        return [self.base.supra_node(int(j)) for j in self.adjacency[idx]]

    def inter_edge_counts(self) -> dict[tuple[int, int], int]:
        """Surviving inter edges per unordered layer pair."""
        counts: dict[tuple[int, int], int] = {}
        for _, la, lb, _ in self.inter_edges:
            counts[(la, lb)] = counts.get((la, lb), 0) + 1
        return counts


def build_supra(net: MultilayerNetwork, threshold: float = 0.1) -> SupraGraph:
    """Assemble the supra graph keeping counterpart edges with Jaccard >= threshold.

    Pairs with Jaccard exactly 0 are never connected, even at threshold 0.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must be in [0, 1], got {threshold}")
    inter_edges = []
    inter_nbrs: dict[int, list[int]] = {}
    for node in range(net.num_nodes):
        layers = net.layers_of(node)
        for i, la in enumerate(layers):
            for lb in layers[i + 1 :]:
                w = jaccard_coupling(net, node, la, lb)
                if w > 0.0 and w >= threshold:
                    inter_edges.append((node, la, lb, w))
                    ia = net.replica_index(node, la)
                    ib = net.replica_index(node, lb)
                    inter_nbrs.setdefault(ia, []).append(ib)
                    inter_nbrs.setdefault(ib, []).append(ia)
    adjacency = []
    for idx in range(net.num_replicas):
        node = int(net.replica_node[idx])
        layer = int(net.replica_layer[idx])
        intra = [net.replica_index(u, layer) for u in net.layers[layer].adjacency[node]]
        inter = sorted(inter_nbrs.get(idx, []))
        adjacency.append(np.asarray(intra + inter, dtype=np.int64))
    return SupraGraph(net, threshold, inter_edges, adjacency)


def counterpart_pairs(net: MultilayerNetwork) -> list[tuple[int, int]]:
    """All unordered counterpart replica-index pairs (node present in both layers)."""
    pairs = []
    for node in range(net.num_nodes):
        layers = net.layers_of(node)
        for i, la in enumerate(layers):
            for lb in layers[i + 1 :]:
                pairs.append((net.replica_index(node, la), net.replica_index(node, lb)))
    return pairs


def save_supra(g: SupraGraph, path) -> None:
    """Export the supra edge list in the multilayer text format.

    Intra edges keep their layer token; each inter edge gets a synthetic
    `inter:la-lb` tag (original layer tokens) with the node id repeated,
    since both endpoints are replicas of the same node.
    """
    net = g.base
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# supra graph export: intra lines `layer u v`, inter lines `inter:la-lb node node`\n")
        for l, layer in enumerate(net.layers):
            ltok = net.layer_tokens[l]
            for u in layer.present:
                for v in layer.adjacency[u]:
                    if u < v:
                        fh.write(f"{ltok} {net.node_tokens[u]} {net.node_tokens[v]}\n")
        for node, la, lb, _ in g.inter_edges:
            tag = f"inter:{net.layer_tokens[la]}-{net.layer_tokens[lb]}"
            fh.write(f"{tag} {net.node_tokens[node]} {net.node_tokens[node]}\n")
