"""Evaluation protocols: node classification, link prediction, community
detection, plus a planted-partition generator and NMI for synthetic truth.

Classification trains a self-contained multinomial logistic regression on
ONE of the stratified folds and tests on the remaining ones (the smaller
partition trains). Link prediction holds out edge folds per layer, re-runs
the embedding pipeline on the incomplete network, and scores held-out
pairs by cosine similarity of the endpoint replica vectors.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError
from .graph import LabelTable, MultilayerNetwork
from .modularity import ModularityParams, PartitionState
from .refine import init_clusters
from .sgns import SgnsConfig, train
from .supra import build_supra
from .walks import WalkConfig, generate_walks

log = logging.getLogger(__name__)


def aggregate_node_vectors(
    vectors: np.ndarray, net: MultilayerNetwork, mode: str = "mean"
) -> np.ndarray:
    """Per physical node: combine its replica vectors into one feature row.

    mode="mean" averages over the layers containing the node (nodes
    without any replica, possible only in holdout networks, get zeros);
    mode="concat" stacks the per-layer vectors, zero-filled where absent.
    """
    if mode == "concat":
        d = vectors.shape[1]
        out = np.zeros((net.num_nodes, net.num_layers * d))
        for idx in range(net.num_replicas):
            node = int(net.replica_node[idx])
            layer = int(net.replica_layer[idx])
            out[node, layer * d : (layer + 1) * d] = vectors[idx]
        return out
    if mode != "mean":
        raise ValidationError(f"unknown aggregation mode {mode!r}")
    out = np.zeros((net.num_nodes, vectors.shape[1]))
    counts = np.zeros(net.num_nodes)
    np.add.at(out, net.replica_node, vectors)
    np.add.at(counts, net.replica_node, 1.0)
    mask = counts > 0
    out[mask] /= counts[mask, None]
    return out


# --- linear classifier -------------------------------------------------------


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class LinearClassifier:
    """Multinomial logistic regression with L2 penalty.

    Full-batch gradient descent with backtracking until the loss change
    drops below tolerance. Features are standardized on the training set.
    """

    def __init__(self, l2: float = 1e-3, max_iter: int = 2000, tol: float = 1e-8):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, x: np.ndarray, y: np.ndarray, num_classes: int) -> "LinearClassifier":
        self.mean_ = x.mean(axis=0)
        std = x.std(axis=0)
        self.std_ = np.where(std > 0, std, 1.0)
        xs = np.hstack([(x - self.mean_) / self.std_, np.ones((x.shape[0], 1))])
        onehot = np.eye(num_classes)[y]
        w = np.zeros((num_classes, xs.shape[1]))
        lr = 1.0

        def loss_of(weights):
            probs = _softmax(xs @ weights.T)
            ce = -np.log(probs[np.arange(len(y)), y].clip(min=1e-300)).mean()
            return ce + 0.5 * self.l2 * (weights[:, :-1] ** 2).sum()

        loss = loss_of(w)
        for _ in range(self.max_iter):
            probs = _softmax(xs @ w.T)
            grad = (probs - onehot).T @ xs / len(y)
            grad[:, :-1] += self.l2 * w[:, :-1]
            while lr > 1e-12:
                candidate = w - lr * grad
                new_loss = loss_of(candidate)
                if new_loss <= loss:
                    break
                lr *= 0.5
            w = w - lr * grad
            lr = min(lr * 1.5, 1e3)
            new_loss = loss_of(w)
            if abs(loss - new_loss) < self.tol * max(1.0, abs(loss)):
                loss = new_loss
                break
            loss = new_loss
        self.weights_ = w
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        xs = np.hstack([(x - self.mean_) / self.std_, np.ones((x.shape[0], 1))])
        return (xs @ self.weights_.T).argmax(axis=1)


def _stratified_folds(y: np.ndarray, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold index per sample; every class is dealt round-robin across folds."""
    fold_of = np.empty(len(y), dtype=np.int64)
    for cls in np.unique(y):
        members = np.nonzero(y == cls)[0]
        if len(members) < folds:
            raise ValidationError(f"class {cls} has {len(members)} < {folds} labeled nodes")
        members = rng.permutation(members)
        fold_of[members] = np.arange(len(members)) % folds
    return fold_of


def node_classification_eval(
    representations: np.ndarray,
    labels: LabelTable,
    folds: int = 3,
    seed: int = 42,
) -> tuple[list[float], float]:
    """Accuracy (%) per fold and the mean; trains on one fold, tests on the rest."""
    nodes = np.asarray(sorted(labels.labels), dtype=np.int64)
    y = np.asarray([labels.labels[v] for v in nodes], dtype=np.int64)
    x = representations[nodes]
    rng = np.random.default_rng(seed)
    fold_of = _stratified_folds(y, folds, rng)
    accuracies = []
    for f in range(folds):
        train_mask = fold_of == f
        if len(np.unique(y[train_mask])) < labels.num_classes:
            raise ValidationError(f"fold {f}: some class absent from the training fold")
        clf = LinearClassifier().fit(x[train_mask], y[train_mask], labels.num_classes)
        pred = clf.predict(x[~train_mask])
        accuracies.append(100.0 * float((pred == y[~train_mask]).mean()))
    return accuracies, float(np.mean(accuracies))


# --- link prediction -----------------------------------------------------------


def auroc(positive_scores, negative_scores) -> float:
    """Rank-based AUROC with averaged tie ranks (Mann-Whitney)."""
    pos = np.asarray(positive_scores, dtype=np.float64)
    neg = np.asarray(negative_scores, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise ValidationError("AUROC needs at least one positive and one negative score")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: len(pos)].sum() - len(pos) * (len(pos) + 1) / 2.0
    return float(u / (len(pos) * len(neg)))


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def _edge_folds(layer_edges: list[tuple[int, int]], folds: int, rng: np.random.Generator):
    """Disjoint folds covering the layer's edge set."""
    order = rng.permutation(len(layer_edges))
    return [sorted(order[f::folds]) for f in range(folds)]


def _sample_negative_pairs(net, layer: int, count: int, rng: np.random.Generator):
    """Uniform absent pairs among the layer's present nodes, no replacement."""
    lay = net.layers[layer]
    present = lay.present
    existing = {(u, v) for u in present for v in lay.adjacency[u] if u < v}
    n = len(present)
    max_pairs = n * (n - 1) // 2 - len(existing)
    if count > max_pairs:
        raise ValidationError(f"layer {layer}: cannot sample {count} absent pairs ({max_pairs} exist)")
    if n <= 500:
        absent = [
            (present[i], present[j])
            for i in range(n)
            for j in range(i + 1, n)
            if (present[i], present[j]) not in existing
        ]
        chosen = rng.choice(len(absent), size=count, replace=False)
        return [absent[int(i)] for i in chosen]
    picked: set[tuple[int, int]] = set()
    while len(picked) < count:
        i, j = rng.integers(n), rng.integers(n)
        u, v = present[int(i)], present[int(j)]
        if u == v:
            continue
        pair = (min(u, v), max(u, v))
        if pair not in existing and pair not in picked:
            picked.add(pair)
    return sorted(picked)


@dataclass
class LinkPredictionResult:
    per_layer_fold: dict[int, list[float]]  # layer -> AUROC per fold
    per_layer_mean: dict[int, float]
    mean: float


def link_prediction_eval(
    net: MultilayerNetwork,
    folds: int = 5,
    theta: float = 0.1,
    walk_cfg: WalkConfig | None = None,
    sgns_cfg: SgnsConfig | None = None,
    seed: int = 42,
) -> LinkPredictionResult:
    """Per-layer AUROC over edge-holdout folds.

    Each fold removes its edge share from every layer at once; embeddings
    are retrained on the incomplete network. A held-out endpoint whose
    replica vanished is scored by its aggregated node vector (zero vector
    if the node vanished entirely).
    """
    walk_cfg = walk_cfg or WalkConfig(seed=seed)
    sgns_cfg = sgns_cfg or SgnsConfig(seed=seed)
    rng = np.random.default_rng(seed)
    layer_edges = []
    for layer in net.layers:
        edges = [(u, v) for u in layer.present for v in layer.adjacency[u] if u < v]
        if len(edges) < folds:
            raise ValidationError(f"layer {layer.layer} has {len(edges)} < {folds} edges")
        layer_edges.append(edges)
    fold_ids = [_edge_folds(edges, folds, rng) for edges in layer_edges]
    negatives = [
        [
            _sample_negative_pairs(net, l, len(fold_ids[l][f]), rng)
            for f in range(folds)
        ]
        for l in range(net.num_layers)
    ]

    per_layer_fold: dict[int, list[float]] = {l: [] for l in range(net.num_layers)}
    for f in range(folds):
        held = [set(fold_ids[l][f]) for l in range(net.num_layers)]
        retained = []
        for l in range(net.num_layers):
            retained.extend(
                (l, u, v) for i, (u, v) in enumerate(layer_edges[l]) if i not in held[l]
            )
        sub = MultilayerNetwork.from_edges(
            retained, num_layers=net.num_layers, num_nodes=net.num_nodes, strict_universe=False
        )
        supra = build_supra(sub, theta)
        corpus = generate_walks(supra, walk_cfg)
        table = train(supra, corpus, sgns_cfg)
        aggregated = aggregate_node_vectors(table.input_vectors, sub)

        def vector_of(node: int, layer: int) -> np.ndarray:
            if sub.has_replica(node, layer):
                return table.input_vectors[sub.replica_index(node, layer)]
            return aggregated[node]

        for l in range(net.num_layers):
            pos_pairs = [layer_edges[l][i] for i in sorted(held[l])]
            pos = [_cosine(vector_of(u, l), vector_of(v, l)) for u, v in pos_pairs]
            neg = [_cosine(vector_of(u, l), vector_of(v, l)) for u, v in negatives[l][f]]
            per_layer_fold[l].append(auroc(pos, neg))
    per_layer_mean = {l: float(np.mean(v)) for l, v in per_layer_fold.items()}
    return LinkPredictionResult(
        per_layer_fold, per_layer_mean, float(np.mean(list(per_layer_mean.values())))
    )


# --- community detection ---------------------------------------------------------


def community_detection_eval(
    vectors: np.ndarray,
    net: MultilayerNetwork,
    k_list,
    params: ModularityParams | None = None,
    seed: int = 42,
    supra=None,
) -> list[tuple[int, float]]:
    """k-means sweep: (K, Q_multi) per requested community count.

    Infeasible K values (more than #replicas, or degenerate embeddings)
    are skipped with a warning. `supra` is only needed when the params
    restrict coupling to surviving inter-layer edges.
    """
    params = params or ModularityParams()
    rows = []
    for k in k_list:
        if k > net.num_replicas:
            log.warning("K=%d exceeds %d replicas; skipped", k, net.num_replicas)
            continue
        try:
            _, labels = init_clusters(vectors, k, seed)
        except ValidationError as exc:
            log.warning("K=%d skipped: %s", k, exc)
            continue
        state = PartitionState(net, labels, params, num_communities=k, supra=supra)
        rows.append((k, state.q_multi()))
    return rows


# --- synthetic ground truth -------------------------------------------------------


@dataclass
class SbmSpec:
    layers: int
    nodes: int  # shared node universe size
    num_blocks: int
    p_in: float
    p_out: float
    shared_partition_layers: tuple[int, ...] | None = None  # None = all layers share
    seed: int = 42

    def validate(self) -> None:
        if self.layers < 1 or self.nodes < self.num_blocks or self.num_blocks < 1:
            raise ValidationError("need layers >= 1 and nodes >= num_blocks >= 1")
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ValidationError("need 0 <= p_out < p_in <= 1")


@dataclass
class SbmSample:
    net: MultilayerNetwork
    planted: np.ndarray                      # base block per node
    per_layer: list[np.ndarray] = field(default_factory=list)  # block per node per layer

    def planted_replicas(self) -> np.ndarray:
        """Planted block per replica, following the layer's own partition."""
        out = np.empty(self.net.num_replicas, dtype=np.int64)
        for idx in range(self.net.num_replicas):
            l = int(self.net.replica_layer[idx])
            out[idx] = self.per_layer[l][self.net.replica_node[idx]]
        return out


def generate_sbm(spec: SbmSpec) -> SbmSample:
    """Planted-partition multilayer sample: Bernoulli(p_in) inside blocks,
    Bernoulli(p_out) across; non-shared layers use an independently
    shuffled copy of the planted partition."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    planted = (np.arange(spec.nodes) * spec.num_blocks) // spec.nodes
    shared = set(range(spec.layers)) if spec.shared_partition_layers is None else set(spec.shared_partition_layers)
    per_layer = []
    edges = []
    for l in range(spec.layers):
        part = planted if l in shared else planted[rng.permutation(spec.nodes)]
        per_layer.append(part)
        same = part[:, None] == part[None, :]
        prob = np.where(same, spec.p_in, spec.p_out)
        hit = rng.random((spec.nodes, spec.nodes)) < prob
        ii, jj = np.nonzero(np.triu(hit, k=1))
        edges.extend((l, int(u), int(v)) for u, v in zip(ii, jj))
    net = MultilayerNetwork.from_edges(
        edges, num_layers=spec.layers, num_nodes=spec.nodes, strict_universe=False
    )
    return SbmSample(net, planted, per_layer)


def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information, arithmetic-mean normalization.

    Returns 1.0 when both partitions are single-cluster (identical), and
    0.0 when exactly one side carries no information.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValidationError("partitions must cover the same nodes")
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    counts = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(counts, (ai, bi), 1.0)
    pij = counts / n
    pa = pij.sum(axis=1)
    pb = pij.sum(axis=0)
    outer = pa[:, None] * pb[None, :]
    mask = pij > 0
    mi = float((pij[mask] * np.log(pij[mask] / outer[mask])).sum())
    ha = -float((pa[pa > 0] * np.log(pa[pa > 0])).sum())
    hb = -float((pb[pb > 0] * np.log(pb[pb > 0])).sum())
    denom = 0.5 * (ha + hb)
    if denom == 0.0:
        return 1.0
    return float(np.clip(mi / denom, 0.0, 1.0))


# --- result output -----------------------------------------------------------------


def write_results_csv(rows, path) -> None:
    """Rows of (metric, dataset, key, value) with a header line."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "dataset", "key", "value"])
        for row in rows:
            writer.writerow(list(row))


def format_summary(rows) -> str:
    widths = [max(len(str(r[i])) for r in ([("metric", "dataset", "key", "value")] + list(rows))) for i in range(4)]
    lines = []
    for r in [("metric", "dataset", "key", "value")] + list(rows):
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)
