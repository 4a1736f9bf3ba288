import numpy as np
import pytest

from suprawalk import (
    MultilayerNetwork,
    SupraNode,
    ValidationError,
    build_supra,
    counterpart_pairs,
    jaccard_coupling,
)

from oracles import jaccard_oracle, random_multilayer


def net_with_neighborhoods(na, nb):
    """Node 0 gets neighborhood na in layer 0 and nb in layer 1."""
    edges = [(0, 0, v) for v in na] + [(1, 0, v) for v in nb]
    # make every mentioned node present somewhere
    layers = 2
    return MultilayerNetwork.from_edges(edges, num_layers=layers, strict_universe=False,
                                        num_nodes=max(na | nb) + 1)


class TestJaccard:
    def test_identical_neighborhoods(self):
        net = net_with_neighborhoods({2, 3}, {2, 3})
        assert jaccard_coupling(net, 0, 0, 1) == 1.0

    def test_disjoint_neighborhoods(self):
        net = net_with_neighborhoods({2, 3}, {4, 5})
        assert jaccard_coupling(net, 0, 0, 1) == 0.0

    def test_half_overlap(self):
        net = net_with_neighborhoods({1, 2, 3}, {2, 3, 4})
        assert jaccard_coupling(net, 0, 0, 1) == 0.5

    def test_absent_replica_errors(self):
        net = MultilayerNetwork.from_edges([(0, 0, 1), (1, 1, 2)], num_layers=2)
        with pytest.raises(ValidationError):
            jaccard_coupling(net, 0, 0, 1)

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            net = random_multilayer(rng, num_layers=3, num_nodes=7, p=0.4)
            for node in range(net.num_nodes):
                layers = net.layers_of(node)
                for i, la in enumerate(layers):
                    for lb in layers[i + 1:]:
                        assert jaccard_coupling(net, node, la, lb) == pytest.approx(
                            jaccard_oracle(net, node, la, lb), abs=1e-12
                        )


class TestBuildSupra:
    def test_zero_similarity_not_connected_even_at_zero_threshold(self):
        net = net_with_neighborhoods({2, 3}, {4, 5})
        g = build_supra(net, threshold=0.0)
        assert all(node != 0 for node, _, _, _ in g.inter_edges)

    def test_threshold_gates_edges(self):
        net = net_with_neighborhoods({1, 2, 3}, {2, 3, 4})  # weight 0.5 for node 0
        kept = build_supra(net, threshold=0.5)
        assert any(node == 0 for node, _, _, _ in kept.inter_edges)
        dropped = build_supra(net, threshold=0.50001)
        assert all(node != 0 for node, _, _, _ in dropped.inter_edges)

    def test_edges_shrink_monotonically_with_threshold(self, two_layer_toy):
        sizes = [len(build_supra(two_layer_toy, t).inter_edges) for t in (0.0, 0.3, 0.6, 1.0)]
        assert sizes == sorted(sizes, reverse=True)

    def test_threshold_out_of_range(self, two_layer_toy):
        for t in (-0.1, 1.0001):
            with pytest.raises(ValidationError):
                build_supra(two_layer_toy, t)

    def test_adjacency_lists_intra_then_inter(self, two_layer_supra):
        g = two_layer_supra
        net = g.base
        for idx in range(net.num_replicas):
            v = net.supra_node(idx)
            intra = [net.replica_index(u, v.layer) for u in net.neighbors(v)]
            nbrs = list(g.neighbor_indices(idx))
            assert nbrs[: len(intra)] == intra
            extra = nbrs[len(intra):]
            # whatever follows are counterparts of the same physical node
            for j in extra:
                assert int(net.replica_node[j]) == v.node
                assert int(net.replica_layer[j]) != v.layer

    def test_supra_neighbors_wrapper(self, two_layer_supra):
        nbrs = two_layer_supra.supra_neighbors(SupraNode(0, 0))
        assert all(isinstance(v, SupraNode) for v in nbrs)

    def test_weights_recorded_with_sorted_layer_pairs(self, two_layer_supra):
        for node, la, lb, w in two_layer_supra.inter_edges:
            assert la < lb
            assert 0 < w <= 1.0
            assert w == pytest.approx(jaccard_oracle(two_layer_supra.base, node, la, lb))

    def test_full_disagreement_leaves_intra_only(self):
        # neighborhoods disjoint across layers for every shared node
        edges = [(0, 0, 1), (0, 2, 3), (1, 0, 2), (1, 1, 3)]
        net = MultilayerNetwork.from_edges(edges, num_layers=2)
        g = build_supra(net, threshold=1.0)
        assert g.inter_edges == []
        for idx in range(net.num_replicas):
            v = net.supra_node(idx)
            assert len(g.neighbor_indices(idx)) == net.degree(v)

    def test_coupling_invariant_under_node_relabeling(self):
        rng = np.random.default_rng(5)
        net = random_multilayer(rng, num_layers=2, num_nodes=8, p=0.4)
        perm = rng.permutation(net.num_nodes)
        relabeled = []
        for l, layer in enumerate(net.layers):
            for u in layer.present:
                for v in layer.adjacency[u]:
                    if u < v:
                        relabeled.append((l, int(perm[u]), int(perm[v])))
        net2 = MultilayerNetwork.from_edges(relabeled, num_layers=2)
        w1 = sorted(round(w, 12) for _, _, _, w in build_supra(net, 0.0).inter_edges)
        w2 = sorted(round(w, 12) for _, _, _, w in build_supra(net2, 0.0).inter_edges)
        assert w1 == w2


class TestCounterparts:
    def test_all_pairs_enumerated(self, two_layer_toy):
        pairs = counterpart_pairs(two_layer_toy)
        assert len(pairs) == 4  # nodes 0..3 present in both layers
        for a, b in pairs:
            assert two_layer_toy.replica_node[a] == two_layer_toy.replica_node[b]
            assert two_layer_toy.replica_layer[a] != two_layer_toy.replica_layer[b]

    def test_partial_presence_skips_missing(self):
        net = MultilayerNetwork.from_edges([(0, 0, 1), (1, 0, 2)], num_layers=2)
        pairs = counterpart_pairs(net)
        assert len(pairs) == 1  # only node 0 lives in both layers
