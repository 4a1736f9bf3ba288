import csv
import logging

import numpy as np
import pytest

from suprawalk import (
    LabelTable,
    LinearClassifier,
    ModularityParams,
    MultilayerNetwork,
    SbmSpec,
    SgnsConfig,
    ValidationError,
    WalkConfig,
    aggregate_node_vectors,
    auroc,
    community_detection_eval,
    generate_sbm,
    link_prediction_eval,
    nmi,
    node_classification_eval,
    format_summary,
    write_results_csv,
)
from suprawalk.evaluate import _edge_folds, _sample_negative_pairs, _stratified_folds

from oracles import auroc_oracle, nmi_oracle


class TestAggregation:
    def test_single_layer_is_identity(self, two_triangles):
        vectors = np.random.default_rng(0).normal(size=(6, 4))
        assert np.array_equal(aggregate_node_vectors(vectors, two_triangles), vectors)

    def test_opposite_replicas_cancel(self, two_layer_toy):
        rng = np.random.default_rng(1)
        vectors = np.zeros((8, 3))
        for node in range(4):
            v = rng.normal(size=3)
            vectors[two_layer_toy.replica_index(node, 0)] = v
            vectors[two_layer_toy.replica_index(node, 1)] = -v
        out = aggregate_node_vectors(vectors, two_layer_toy)
        assert np.abs(out).max() < 1e-15

    def test_mean_over_three_layers(self):
        net = MultilayerNetwork.from_edges([(0, 0, 1), (1, 0, 1), (2, 0, 1)], num_layers=3)
        vectors = np.zeros((6, 3))
        for l in range(3):
            vectors[net.replica_index(0, l), l] = 1.0  # e1, e2, e3
        out = aggregate_node_vectors(vectors, net)
        assert np.allclose(out[0], [1.0 / 3.0] * 3)

    def test_concat_places_layer_slices(self):
        net = MultilayerNetwork.from_edges([(0, 0, 1), (1, 1, 2)], num_layers=2)
        vectors = np.arange(8, dtype=np.float64).reshape(4, 2)  # 4 replicas, d=2
        out = aggregate_node_vectors(vectors, net, mode="concat")
        assert out.shape == (3, 4)
        idx01 = net.replica_index(0, 0)
        assert np.array_equal(out[0, :2], vectors[idx01])
        assert np.array_equal(out[0, 2:], [0.0, 0.0])  # node 0 absent from layer 1
        idx12 = net.replica_index(2, 1)
        assert np.array_equal(out[2, 2:], vectors[idx12])

    def test_node_without_any_replica_gets_zeros(self):
        net = MultilayerNetwork.from_edges([(0, 0, 1)], num_nodes=3, strict_universe=False)
        vectors = np.ones((2, 4))
        out = aggregate_node_vectors(vectors, net)
        assert np.array_equal(out[2], np.zeros(4))

    def test_unknown_mode_rejected(self, two_triangles):
        with pytest.raises(ValidationError):
            aggregate_node_vectors(np.zeros((6, 2)), two_triangles, mode="median")


class TestAuroc:
    def test_hand_computed_case(self):
        assert auroc([0.8, 0.4], [0.6, 0.2]) == pytest.approx(0.75)

    def test_extremes(self):
        assert auroc([2.0, 3.0], [0.0, 1.0]) == pytest.approx(1.0)
        assert auroc([0.0, 1.0], [2.0, 3.0]) == pytest.approx(0.0)
        assert auroc([1.0, 1.0], [1.0, 1.0]) == pytest.approx(0.5)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(2)
        pos = rng.normal(size=30)
        neg = rng.normal(size=40) - 0.5
        assert auroc(np.exp(pos), np.exp(neg)) == pytest.approx(auroc(pos, neg), abs=1e-12)

    def test_matches_pair_counting_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            pos = rng.integers(0, 5, size=rng.integers(1, 20)).astype(float)
            neg = rng.integers(0, 5, size=rng.integers(1, 20)).astype(float)
            assert auroc(pos, neg) == pytest.approx(auroc_oracle(pos, neg), abs=1e-12)

    def test_empty_side_rejected(self):
        with pytest.raises(ValidationError):
            auroc([], [1.0])


class TestNmi:
    def test_identical_partitions(self):
        a = np.array([0, 0, 1, 1, 2, 2])
        assert nmi(a, a) == pytest.approx(1.0)
        relabeled = np.array([5, 5, 3, 3, 9, 9])
        assert nmi(a, relabeled) == pytest.approx(1.0)

    def test_trivial_partition_conventions(self):
        a = np.array([0, 0, 1, 1])
        flat = np.zeros(4, dtype=np.int64)
        assert nmi(a, flat) == pytest.approx(0.0)
        assert nmi(flat, a) == pytest.approx(0.0)
        assert nmi(flat, flat) == pytest.approx(1.0)

    def test_symmetric_and_matches_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(5, 30))
            a = rng.integers(0, 4, size=n)
            b = rng.integers(0, 3, size=n)
            assert nmi(a, b) == pytest.approx(nmi(b, a), abs=1e-12)
            assert nmi(a, b) == pytest.approx(
                float(np.clip(nmi_oracle(a, b), 0.0, 1.0)), abs=1e-10
            )

    def test_independent_partitions_score_low(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 3, size=2000)
        b = rng.integers(0, 3, size=2000)
        assert nmi(a, b) < 0.05

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            nmi(np.zeros(3), np.zeros(4))


class TestClassification:
    def blob_data(self, rng, per_class=21, noise=0.3):
        centers = np.eye(3) * 5.0
        x = np.vstack([centers[c] + noise * rng.normal(size=(per_class, 3)) for c in range(3)])
        y = np.repeat(np.arange(3), per_class)
        return x, y

    def test_stratified_folds_cover_and_balance(self):
        rng = np.random.default_rng(6)
        y = np.repeat(np.arange(3), [9, 12, 7])
        fold_of = _stratified_folds(y, 3, rng)
        assert set(fold_of) == {0, 1, 2}
        for cls in range(3):
            counts = np.bincount(fold_of[y == cls], minlength=3)
            assert counts.max() - counts.min() <= 1

    def test_underfilled_class_rejected(self):
        with pytest.raises(ValidationError, match="class"):
            _stratified_folds(np.array([0, 0, 0, 1, 1]), 3, np.random.default_rng(0))

    def test_separable_blobs_classified_perfectly(self):
        rng = np.random.default_rng(7)
        x, y = self.blob_data(rng)
        clf = LinearClassifier().fit(x, y, 3)
        assert (clf.predict(x) == y).all()

    def test_standardization_absorbs_affine_feature_changes(self):
        rng = np.random.default_rng(8)
        x, y = self.blob_data(rng, noise=1.0)
        base = LinearClassifier().fit(x, y, 3).predict(x)
        moved = LinearClassifier().fit(3.0 * x + 5.0, y, 3).predict(3.0 * x + 5.0)
        assert np.array_equal(base, moved)

    def test_eval_trains_on_single_fold(self):
        rng = np.random.default_rng(9)
        x, y = self.blob_data(rng)
        labels = LabelTable({i: int(c) for i, c in enumerate(y)}, ["a", "b", "c"])
        accs, mean = node_classification_eval(x, labels, folds=3, seed=0)
        assert len(accs) == 3
        assert mean == pytest.approx(np.mean(accs))
        assert mean == pytest.approx(100.0)

    def test_uninformative_features_score_near_chance(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(120, 6))
        y = np.repeat([0, 1], 60)
        labels = LabelTable({i: int(c) for i, c in enumerate(y)}, ["x", "y"])
        _, mean = node_classification_eval(x, labels, folds=3, seed=0)
        assert 30.0 < mean < 70.0

    def test_partial_label_coverage(self):
        rng = np.random.default_rng(11)
        x, y = self.blob_data(rng)
        keep = {i: int(y[i]) for i in range(0, len(y), 2)}
        labels = LabelTable(keep, ["a", "b", "c"])
        _, mean = node_classification_eval(x, labels, folds=3, seed=0)
        assert mean > 90.0


class TestLinkPrediction:
    def test_edge_folds_partition_the_edges(self):
        rng = np.random.default_rng(12)
        edges = [(u, u + 1) for u in range(17)]
        folds = _edge_folds(edges, 5, rng)
        seen = sorted(i for fold in folds for i in fold)
        assert seen == list(range(17))
        sizes = sorted(len(f) for f in folds)
        assert sizes[-1] - sizes[0] <= 1

    def test_negative_pairs_avoid_existing_edges(self, two_triangles):
        rng = np.random.default_rng(13)
        layer = two_triangles.layers[0]
        existing = {(u, v) for u in layer.present for v in layer.adjacency[u] if u < v}
        pairs = _sample_negative_pairs(two_triangles, 0, 5, rng)
        assert len(pairs) == 5
        assert len(set(pairs)) == 5
        assert not (set(pairs) & existing)

    def test_negative_pool_exhaustion_rejected(self, two_triangles):
        # 15 node pairs, 6 edges -> 9 absent pairs
        with pytest.raises(ValidationError):
            _sample_negative_pairs(two_triangles, 0, 10, np.random.default_rng(0))

    def test_small_pipeline_produces_bounded_scores(self):
        sample = generate_sbm(SbmSpec(layers=2, nodes=20, num_blocks=2, p_in=0.5, p_out=0.05, seed=1))
        result = link_prediction_eval(
            sample.net,
            folds=3,
            theta=0.1,
            walk_cfg=WalkConfig(walks_per_node=3, walk_length=10, seed=0),
            sgns_cfg=SgnsConfig(dim=8, window=2, negatives=2, epochs=1, batch_size=64, seed=0),
            seed=0,
        )
        assert set(result.per_layer_fold) == {0, 1}
        for layer, scores in result.per_layer_fold.items():
            assert len(scores) == 3
            assert all(0.0 <= s <= 1.0 for s in scores)
            assert result.per_layer_mean[layer] == pytest.approx(np.mean(scores))
        assert result.mean == pytest.approx(np.mean(list(result.per_layer_mean.values())))

    def test_too_few_edges_rejected(self, single_edge_net):
        with pytest.raises(ValidationError, match="edges"):
            link_prediction_eval(single_edge_net, folds=5)


class TestCommunityDetection:
    def planted_vectors(self, net):
        vectors = np.zeros((net.num_replicas, 3))
        for idx in range(net.num_replicas):
            block = 0 if net.replica_node[idx] < 3 else 1
            vectors[idx, block] = 10.0
            vectors[idx, 2] = 0.01 * idx  # break exact duplicates
        return vectors

    def test_sweep_reports_requested_k(self, twin_triangle_layers):
        net = twin_triangle_layers
        vectors = self.planted_vectors(net)
        rows = community_detection_eval(vectors, net, [1, 2], seed=0)
        assert [k for k, _ in rows] == [1, 2]
        q1 = dict(rows)[1]
        q2 = dict(rows)[2]
        assert q2 > q1

    def test_infeasible_k_skipped(self, twin_triangle_layers, caplog):
        vectors = self.planted_vectors(twin_triangle_layers)
        with caplog.at_level(logging.WARNING, logger="suprawalk.evaluate"):
            rows = community_detection_eval(vectors, twin_triangle_layers, [2, 50], seed=0)
        assert [k for k, _ in rows] == [2]
        assert "skipped" in caplog.text

    def test_degenerate_embeddings_skipped(self, twin_triangle_layers, caplog):
        vectors = np.ones((twin_triangle_layers.num_replicas, 3))
        with caplog.at_level(logging.WARNING, logger="suprawalk.evaluate"):
            rows = community_detection_eval(vectors, twin_triangle_layers, [2], seed=0)
        assert rows == []
        assert "skipped" in caplog.text


class TestSbmGenerator:
    def test_extreme_probabilities_give_block_cliques(self):
        spec = SbmSpec(layers=2, nodes=12, num_blocks=3, p_in=1.0, p_out=0.0, seed=0)
        sample = generate_sbm(spec)
        assert np.array_equal(sample.per_layer[0], sample.planted)
        for l, layer in enumerate(sample.net.layers):
            part = sample.per_layer[l]
            for u in layer.present:
                for v in layer.adjacency[u]:
                    assert part[u] == part[v]
            block_sizes = np.bincount(part)
            expected = int((block_sizes * (block_sizes - 1) // 2).sum())
            assert layer.num_edges == expected

    def test_edge_density_tracks_probabilities(self):
        spec = SbmSpec(layers=1, nodes=60, num_blocks=3, p_in=0.3, p_out=0.05, seed=1)
        sample = generate_sbm(spec)
        part = sample.per_layer[0]
        same = (part[:, None] == part[None, :])
        iu = np.triu_indices(60, k=1)
        n_in = int(same[iu].sum())
        n_out = len(iu[0]) - n_in
        mean = n_in * 0.3 + n_out * 0.05
        sigma = np.sqrt(n_in * 0.3 * 0.7 + n_out * 0.05 * 0.95)
        assert abs(sample.net.layers[0].num_edges - mean) < 3.0 * sigma

    def test_shared_versus_shuffled_partitions(self):
        spec = SbmSpec(
            layers=2, nodes=30, num_blocks=3, p_in=0.9, p_out=0.0,
            shared_partition_layers=(0,), seed=2,
        )
        sample = generate_sbm(spec)
        assert np.array_equal(sample.per_layer[0], sample.planted)
        assert sorted(sample.per_layer[1]) == sorted(sample.planted)
        assert not np.array_equal(sample.per_layer[1], sample.planted)
        replicas = sample.planted_replicas()
        for idx in range(sample.net.num_replicas):
            l = int(sample.net.replica_layer[idx])
            node = int(sample.net.replica_node[idx])
            assert replicas[idx] == sample.per_layer[l][node]

    def test_deterministic_under_seed(self):
        spec = SbmSpec(layers=2, nodes=25, num_blocks=2, p_in=0.4, p_out=0.1, seed=3)
        a, b = generate_sbm(spec), generate_sbm(spec)
        for la, lb in zip(a.net.layers, b.net.layers):
            assert la.adjacency == lb.adjacency

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValidationError):
            generate_sbm(SbmSpec(layers=1, nodes=10, num_blocks=2, p_in=0.2, p_out=0.5))
        with pytest.raises(ValidationError):
            generate_sbm(SbmSpec(layers=1, nodes=2, num_blocks=3, p_in=0.5, p_out=0.1))


class TestResultOutput:
    def test_csv_round_trip(self, tmp_path):
        rows = [("nc", "toy", "fold0", 91.5), ("lp", "toy", "mean", 0.88)]
        path = tmp_path / "results.csv"
        write_results_csv(rows, path)
        with open(path, newline="") as fh:
            back = list(csv.reader(fh))
        assert back[0] == ["metric", "dataset", "key", "value"]
        assert back[1] == ["nc", "toy", "fold0", "91.5"]
        assert back[2] == ["lp", "toy", "mean", "0.88"]

    def test_summary_is_aligned(self):
        rows = [("nc", "toy", "fold0", 91.5), ("linkpred", "toy", "mean", 0.88)]
        text = format_summary(rows)
        lines = text.splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("metric")
        assert lines[1].index("toy") == lines[2].index("toy")
