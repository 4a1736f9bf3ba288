"""Skip-gram with negative sampling over the walk corpus.

One embedding row per replica (node-layer copy), addressed by the dense
layer-major packing. The published embedding is the input (center) side;
context vectors stay internal. Training is minibatch SGD: gradients within
a batch are computed against the table as of the batch start, so a batch
of size 1 reproduces `sgns_step` exactly.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ValidationError
from .graph import MultilayerNetwork
from .supra import SupraGraph
from .walks import WalkCorpus

log = logging.getLogger(__name__)


@dataclass
class SgnsConfig:
    dim: int = 128
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr_initial: float = 0.025
    lr_final: float = 0.0001
    noise_exponent: float = 0.75
    seed: int = 42
    batch_size: int = 512
    workers: int = 1  # >1 = pair-sharded threads, benign races, determinism waived

    def validate(self) -> None:
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 0:
            raise ValidationError("dim, window, negatives must be >= 1 and epochs >= 0")
        if not self.lr_initial >= self.lr_final > 0:
            raise ValidationError("need lr_initial >= lr_final > 0")
        if self.batch_size < 1 or self.workers < 1:
            raise ValidationError("batch_size and workers must be >= 1")


@dataclass
class EmbeddingTable:
    input_vectors: np.ndarray   # (num replicas, d), the published embeddings
    output_vectors: np.ndarray  # context side, internal
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    @classmethod
    def initialize(cls, num_vectors: int, dim: int, seed: int) -> "EmbeddingTable":
        # word2vec-style init: inputs uniform in [-0.5/d, 0.5/d], outputs zero
        rng = np.random.default_rng(seed)
        inp = (rng.random((num_vectors, dim)) - 0.5) / dim
        return cls(inp, np.zeros((num_vectors, dim)))

    def check_finite(self) -> None:
        if not (np.isfinite(self.input_vectors).all() and np.isfinite(self.output_vectors).all()):
            raise NumericError("embedding table contains non-finite entries")


@dataclass
class NoiseDistribution:
    """Unigram noise: mass proportional to frequency ** exponent."""

    probabilities: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_frequencies(cls, frequencies: np.ndarray, exponent: float) -> "NoiseDistribution":
        weights = np.asarray(frequencies, dtype=np.float64) ** exponent
        total = weights.sum()
        if total <= 0:
            raise ValidationError("all token frequencies are zero")
        probs = weights / total
        return cls(probs, np.cumsum(probs))

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        u = rng.random(shape)
        return np.searchsorted(self.cumulative, u, side="right").clip(max=len(self.probabilities) - 1)


def extract_pairs(corpus: WalkCorpus, window: int) -> np.ndarray:
    """(center, context) pairs for every position and offset 0 < |j| <= window.

    Returned as an (M, 2) array ordered by walk, position, then offset.
    """
    if window < 1:
        raise ValidationError("window must be >= 1")
    chunks = []
    for walk in corpus.walks:
        n = len(walk)
        for t in range(n):
            lo, hi = max(0, t - window), min(n, t + window + 1)
            ctx = np.concatenate([walk[lo:t], walk[t + 1 : hi]])
            if len(ctx):
                pair = np.empty((len(ctx), 2), dtype=np.int64)
                pair[:, 0] = walk[t]
                pair[:, 1] = ctx
                chunks.append(pair)
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sgns_step(table: EmbeddingTable, center: int, context: int, negatives: np.ndarray, lr: float) -> float:
    """One step on -log sigmoid(u_ctx . v) - sum log sigmoid(-u_neg . v).

    Mutates the table in place; all gradients are evaluated at the
    pre-step parameters. Returns the step loss.
    """
    if lr < 0:
        raise ValidationError("lr must be >= 0")
    negatives = np.asarray(negatives, dtype=np.int64)
    inp, out = table.input_vectors, table.output_vectors
    v = inp[center].copy()
    u_ctx = out[context].copy()
    u_neg = out[negatives].copy()
    pos_dot = float(u_ctx @ v)
    neg_dot = u_neg @ v
    g_pos = _sigmoid(np.array(pos_dot)) - 1.0
    g_neg = _sigmoid(neg_dot)
    inp[center] -= lr * (g_pos * u_ctx + g_neg @ u_neg)
    out[context] -= lr * (g_pos * v)
    np.add.at(out, negatives, -lr * g_neg[:, None] * v[None, :])
    loss = float(np.logaddexp(0.0, -pos_dot) + np.logaddexp(0.0, neg_dot).sum())
    if not np.isfinite(loss):
        raise NumericError(f"non-finite SGNS loss at center={center}, context={context}")
    return loss


def _batch_update(inp, out, centers, contexts, negatives, lr) -> float:
    v = inp[centers]
    u = out[contexts]
    un = out[negatives]
    pos_dot = np.einsum("bd,bd->b", v, u)
    neg_dot = np.einsum("bkd,bd->bk", un, v)
    g_pos = _sigmoid(pos_dot) - 1.0
    g_neg = _sigmoid(neg_dot)
    grad_v = g_pos[:, None] * u + np.einsum("bk,bkd->bd", g_neg, un)
    np.add.at(inp, centers, -lr * grad_v)
    np.add.at(out, contexts, -lr * g_pos[:, None] * v)
    d = inp.shape[1]
    np.add.at(out, negatives.reshape(-1), (-lr * g_neg[..., None] * v[:, None, :]).reshape(-1, d))
    return float(np.logaddexp(0.0, -pos_dot).sum() + np.logaddexp(0.0, neg_dot).sum())


def train(g: SupraGraph, corpus: WalkCorpus, cfg: SgnsConfig) -> EmbeddingTable:
    """Train embeddings for every replica of g from the walk corpus.

    Epochs iterate over a fresh shuffle of all pairs with the learning
    rate annealed linearly from lr_initial to lr_final. Mean epoch losses
    are logged and kept on the returned table.
    """
    cfg.validate()
    table = EmbeddingTable.initialize(g.num_nodes, cfg.dim, cfg.seed)
    pairs = extract_pairs(corpus, cfg.window)
    if len(pairs) == 0:
        log.warning("no (center, context) pairs in corpus; returning initialized table")
        return table
    noise = NoiseDistribution.from_frequencies(corpus.frequencies, cfg.noise_exponent)
    rng = np.random.default_rng(cfg.seed)
    total_steps = cfg.epochs * len(pairs)
    lr_span = cfg.lr_final - cfg.lr_initial

    def run_shard(shard: np.ndarray, steps_done: int, shard_rng: np.random.Generator) -> float:
        loss = 0.0
        for start in range(0, len(shard), cfg.batch_size):
            batch = shard[start : start + cfg.batch_size]
            frac = (steps_done + start) / total_steps
            lr = max(cfg.lr_final, cfg.lr_initial + lr_span * frac)
            negs = noise.sample(shard_rng, (len(batch), cfg.negatives))
            loss += _batch_update(
                table.input_vectors, table.output_vectors, batch[:, 0], batch[:, 1], negs, lr
            )
            if not np.isfinite(loss):
                raise NumericError("non-finite SGNS loss; lower lr_initial or check the corpus")
        return loss

    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(pairs))
        shuffled = pairs[perm]
        epoch_loss = 0.0
        if cfg.workers == 1:
            epoch_loss = run_shard(shuffled, epoch * len(pairs), rng)
        else:
            bounds = np.linspace(0, len(pairs), cfg.workers + 1, dtype=np.int64)
            child_rngs = rng.spawn(cfg.workers)
            results = [0.0] * cfg.workers
            errors: list[BaseException] = []

            def work(w):
                try:
                    results[w] = run_shard(
                        shuffled[bounds[w] : bounds[w + 1]], epoch * len(pairs) + int(bounds[w]), child_rngs[w]
                    )
                except BaseException as exc:  # re-raised in the caller
                    errors.append(exc)

            threads = [threading.Thread(target=work, args=(w,)) for w in range(cfg.workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            if errors:
                raise errors[0]
            epoch_loss = sum(results)
        mean_loss = epoch_loss / len(pairs)
        table.epoch_losses.append(mean_loss)
        log.info("sgns epoch %d/%d mean loss %.6f", epoch + 1, cfg.epochs, mean_loss)
    table.check_finite()
    return table


def save_embeddings(table_or_vectors, net: MultilayerNetwork, path) -> None:
    """Write `num_vectors d` then one `node@layer v1 .. vd` line per replica.

    Floats use repr-precision %.17g so reloading is bit-exact.
    """
    vectors = getattr(table_or_vectors, "input_vectors", table_or_vectors)
    if vectors.shape[0] != net.num_replicas:
        raise ValidationError(
            f"vector count {vectors.shape[0]} != replica count {net.num_replicas}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{vectors.shape[0]} {vectors.shape[1]}\n")
        for idx in range(vectors.shape[0]):
            tok = f"{net.node_tokens[net.replica_node[idx]]}@{net.layer_tokens[net.replica_layer[idx]]}"
            fh.write(tok + " " + " ".join(format(x, ".17g") for x in vectors[idx]) + "\n")


def load_embeddings(path, net: MultilayerNetwork) -> np.ndarray:
    """Read an embedding file back into replica order; requires full coverage."""
    node_of_tok = {tok: i for i, tok in enumerate(net.node_tokens)}
    layer_of_tok = {tok: i for i, tok in enumerate(net.layer_tokens)}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            count, dim = int(header[0]), int(header[1])
        except (IndexError, ValueError):
            raise ValidationError(f"{path}: bad header {header!r}") from None
        vectors = np.full((net.num_replicas, dim), np.nan)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            name = parts[0].split("@")
            if len(name) != 2 or len(parts) != dim + 1:
                raise ValidationError(f"{path}:{lineno}: malformed vector line")
            try:
                node = node_of_tok.get(int(name[0]))
                layer = layer_of_tok.get(int(name[1]))
                row = [float(x) for x in parts[1:]]
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: malformed vector line") from None
            if node is None or layer is None:
                raise ValidationError(f"{path}:{lineno}: unknown replica token {parts[0]!r}")
            vectors[net.replica_index(node, layer)] = row
    if count != net.num_replicas or np.isnan(vectors).any():
        raise ValidationError(f"{path}: does not cover all {net.num_replicas} replicas")
    return vectors
