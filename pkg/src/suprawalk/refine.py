"""Embedding refinement: proxy clustering KL objective + modularity moves.

A 4-layer fully connected net H maps the trained embeddings X to refined
embeddings Xbar of the same width. H is pretrained as an autoencoder, then
fine-tuned by KL(P||Q) where Q are Student-t soft cluster assignments
(alpha = 1) against trainable centroids and P is the sharpened target.
Between KL rounds, replicas with low modularity fitness are sampled by a
rank power law and moved to their best-gain community, nudging Q toward
the updated assignment.

All gradients (MSE, KL, centroids) are hand-derived and finite-difference
checked in the test suite.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ValidationError
from .modularity import ModularityParams, PartitionState
from .supra import SupraGraph

log = logging.getLogger(__name__)


@dataclass
class RefineConfig:
    num_communities: int
    boost: float = 0.25
    moves_per_iter: int = 0  # 0 = auto: max(1, 1% of replicas)
    max_outer_iters: int = 100
    assignment_change_tol: float = 0.001
    inner_epochs: int = 15
    refine_lr: float = 0.001
    pretrain_epochs: int = 500
    pretrain_lr: float = 0.05
    pretrain_batch: int = 32
    hidden: tuple[int, int, int] = (256, 64, 256)
    gamma: float = 1.0
    sigma: float = 1.0
    couple_all: bool = True
    kmeans_reseed_every: int = 0  # 0 = centroids evolve by gradient only
    seed: int = 42

    def validate(self) -> None:
        if self.num_communities < 2:
            raise ValidationError("num_communities must be >= 2")
        if self.boost <= 0:
            raise ValidationError("boost must be > 0")
        if not 0.0 < self.assignment_change_tol < 1.0:
            raise ValidationError("assignment_change_tol must be in (0, 1)")
        if self.moves_per_iter < 0 or self.max_outer_iters < 0:
            raise ValidationError("moves_per_iter and max_outer_iters must be >= 0")
        if len(self.hidden) != 3 or any(h < 1 for h in self.hidden):
            raise ValidationError("hidden must be three positive widths")


class RefineNet:
    """4-layer fully connected map R^d -> R^d, ReLU hidden, linear output."""

    def __init__(self, dim: int, hidden: tuple[int, int, int] = (256, 64, 256), seed: int = 42):
        sizes = [dim, *hidden, dim]
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = math.sqrt(2.0 / fan_in)
            self.weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
            self.biases.append(np.zeros(fan_out))
        self.dim = dim

    # --- forward / backward --------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_with_cache(x)[0]

    def forward_with_cache(self, x: np.ndarray):
        activations = [x]
        a = x
        for i in range(3):
            z = a @ self.weights[i] + self.biases[i]
            a = np.maximum(z, 0.0)
            activations.append(a)
        y = a @ self.weights[3] + self.biases[3]
        return y, activations

    def backward(self, activations: list[np.ndarray], d_out: np.ndarray):
        """Parameter gradients for upstream gradient d_out on the output."""
        grads_w = [None] * 4
        grads_b = [None] * 4
        delta = d_out
        for i in range(3, -1, -1):
            grads_w[i] = activations[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (activations[i] > 0.0)
        return grads_w, grads_b

    # --- parameter plumbing ----------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def flat_parameters(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat_parameters(self, flat: np.ndarray) -> None:
        pos = 0
        for p in self.parameters():
            p[...] = flat[pos : pos + p.size].reshape(p.shape)
            pos += p.size

    def apply_gradients(self, grads_w, grads_b, lr: float) -> None:
        for i in range(4):
            self.weights[i] -= lr * grads_w[i]
            self.biases[i] -= lr * grads_b[i]
        for p in self.parameters():
            if not np.isfinite(p).all():
                raise NumericError("refine net parameters diverged; lower the learning rate")


def mse_loss(net: RefineNet, x: np.ndarray):
    """Mean squared reconstruction error and its parameter gradients."""
    y, cache = net.forward_with_cache(x)
    residual = y - x
    loss = float((residual**2).sum() / x.shape[0])
    grads_w, grads_b = net.backward(cache, 2.0 * residual / x.shape[0])
    return loss, grads_w, grads_b


def pretrain_autoencoder(
    net: RefineNet,
    x: np.ndarray,
    epochs: int,
    lr: float,
    batch_size: int = 256,
    seed: int = 42,
) -> RefineNet:
    """Minibatch gradient descent on mean ||H(x) - x||^2; mutates net in place."""
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    # overflow/invalid are expected on divergence and guarded below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, batch_size):
                batch = x[order[start : start + batch_size]]
                loss, gw, gb = mse_loss(net, batch)
                if not np.isfinite(loss):
                    raise NumericError("autoencoder pretraining diverged; lower pretrain_lr")
                net.apply_gradients(gw, gb, lr)
                epoch_loss += loss * batch.shape[0]
            if epoch == 0 or epoch == epochs - 1:
                log.debug("autoencoder epoch %d loss %.6f", epoch, epoch_loss / n)
    return net


# --- clustering ------------------------------------------------------------


def soft_assign(xbar: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Row-stochastic Student-t (alpha=1) similarity to each centroid."""
    d2 = ((xbar[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    kernel = 1.0 / (1.0 + d2)
    return kernel / kernel.sum(axis=1, keepdims=True)


def target_distribution(q: np.ndarray) -> np.ndarray:
    """Sharpened target: square q, normalize by soft cluster frequencies."""
    freq = q.sum(axis=0)
    weight = q**2 / freq
    return weight / weight.sum(axis=1, keepdims=True)


def kl_loss(p: np.ndarray, q: np.ndarray) -> float:
    """KL(P||Q) summed over nodes; p rows are treated as constants."""
    mask = p > 0
    return float((p[mask] * np.log(p[mask] / q[mask])).sum())


def kl_backward(p: np.ndarray, xbar: np.ndarray, centroids: np.ndarray):
    """KL(P||Q) plus gradients wrt the refined embeddings and centroids."""
    diff = xbar[:, None, :] - centroids[None, :, :]
    d2 = (diff**2).sum(axis=2)
    kernel = 1.0 / (1.0 + d2)
    q = kernel / kernel.sum(axis=1, keepdims=True)
    loss = kl_loss(p, q)
    coeff = (p - q) * kernel
    d_xbar = 2.0 * np.einsum("nk,nkd->nd", coeff, diff)
    d_centroids = -2.0 * np.einsum("nk,nkd->kd", coeff, diff)
    return loss, d_xbar, d_centroids


def init_clusters(xbar: np.ndarray, k: int, seed: int, max_iter: int = 300, n_init: int = 10):
    """Lloyd k-means with k-means++ seeding; stops at an assignment fixpoint.

    Runs n_init seeded restarts and keeps the lowest-inertia result, all
    deterministic under the seed. Errors when fewer than k distinct rows
    exist; an emptied cluster is reseeded with the point farthest from its
    assigned centroid.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if n_init < 1:
        raise ValidationError("n_init must be >= 1")
    if len(np.unique(xbar, axis=0)) < k:
        raise ValidationError(f"k-means needs >= {k} distinct rows")
    restart_seeds = np.random.default_rng(seed).integers(0, 2**31, size=n_init)
    best = None
    for restart_seed in restart_seeds:
        centroids, labels = _lloyd_once(xbar, k, int(restart_seed), max_iter)
        inertia = float(((xbar - centroids[labels]) ** 2).sum())
        if best is None or inertia < best[0]:
            best = (inertia, centroids, labels)
    return best[1], best[2]


def _lloyd_once(xbar: np.ndarray, k: int, seed: int, max_iter: int):
    n = xbar.shape[0]
    rng = np.random.default_rng(seed)
    centroids = np.empty((k, xbar.shape[1]))
    centroids[0] = xbar[rng.integers(n)]
    d2 = ((xbar - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # duplicates of chosen centroids remain; pick any distinct row
            idx = int(np.nonzero(d2 > 0)[0][0]) if (d2 > 0).any() else int(rng.integers(n))
        centroids[j] = xbar[idx]
        d2 = np.minimum(d2, ((xbar - centroids[j]) ** 2).sum(axis=1))

    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        dist = ((xbar[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        if (new_labels == labels).all():
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = xbar[members].mean(axis=0)
            else:
                worst = int(np.argmax(dist[np.arange(n), labels]))
                centroids[j] = xbar[worst]
                labels[worst] = j
    return centroids, labels


# --- extremal-optimization style sampling -----------------------------------


def rank_probabilities(n: int) -> tuple[np.ndarray, float]:
    """Normalized s^(-tau) mass over ranks 1..n with tau = 1 + 1/ln(n)."""
    if n < 2:
        raise ValidationError("need at least 2 replicas to sample by rank")
    tau = 1.0 + 1.0 / math.log(n)
    weights = np.arange(1, n + 1, dtype=np.float64) ** (-tau)
    return weights / weights.sum(), tau


def sample_low_fitness(state: PartitionState, rng: np.random.Generator, fitness: np.ndarray | None = None) -> int:
    """Draw a replica, rank 1 = lowest fitness, rank s with mass ~ s^(-tau)."""
    if fitness is None:
        fitness = state.fitness_all()
    order = np.argsort(fitness, kind="stable")  # ties break to the lower index
    probs, _ = rank_probabilities(len(order))
    s = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return int(order[min(s, len(order) - 1)])


def modularity_moves(
    state: PartitionState, q: np.ndarray, cfg: RefineConfig, rng: np.random.Generator
) -> list[tuple[int, int, int, float]]:
    """Sample low-fitness replicas, apply best-gain moves, boost q rows.

    Fitness is recomputed after every applied move; q is mutated in place
    (boosted row renormalized). Returns (replica, from, to, gain) tuples.
    """
    n = state.net.num_replicas
    num_moves = cfg.moves_per_iter if cfg.moves_per_iter > 0 else max(1, round(0.01 * n))
    moves = []
    for _ in range(num_moves):
        v = sample_low_fitness(state, rng)
        source = int(state.assignment[v])
        target, gain = state.best_move(v)
        state.move(v, target)
        q[v, target] += cfg.boost
        q[v] /= q[v].sum()
        moves.append((v, source, target, gain))
    return moves


# --- full refinement loop ----------------------------------------------------


@dataclass
class RefineResult:
    embeddings: np.ndarray          # Xbar, one row per replica
    assignment: np.ndarray          # final hard labels
    initial_assignment: np.ndarray  # k-means labels before any refinement
    q_multi_initial: float
    q_multi_final: float
    outer_iters: int
    kl_losses: list[float] = field(default_factory=list)


def refine(
    x: np.ndarray,
    net,
    supra: SupraGraph,
    cfg: RefineConfig,
    mlp: RefineNet | None = None,
) -> RefineResult:
    """Full refinement: pretrain, k-means init, then alternate KL and moves.

    `net` is the multilayer network the embeddings belong to; the mapping
    net H is built from cfg.hidden unless an existing RefineNet is passed.
    Stops when the fraction of replicas whose hard assignment changed
    between outer iterations drops below cfg.assignment_change_tol.
    """
    cfg.validate()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != net.num_replicas:
        raise ValidationError("embedding rows do not match the network's replicas")
    params = ModularityParams(cfg.gamma, cfg.sigma, cfg.couple_all)
    rng = np.random.default_rng(cfg.seed)
    h = mlp if mlp is not None else RefineNet(x.shape[1], cfg.hidden, cfg.seed)
    pretrain_autoencoder(h, x, cfg.pretrain_epochs, cfg.pretrain_lr, cfg.pretrain_batch, cfg.seed)
    xbar = h.forward(x)
    centroids, hard = init_clusters(xbar, cfg.num_communities, cfg.seed)
    state = PartitionState(net, hard, params, num_communities=cfg.num_communities, supra=supra)
    q_multi_initial = state.q_multi()
    initial_assignment = hard.copy()
    prev_hard = hard.copy()
    kl_losses = []
    iters = 0
    for _ in range(cfg.max_outer_iters):
        iters += 1
        q = soft_assign(xbar, centroids)
        state.set_assignment(q.argmax(axis=1))
        modularity_moves(state, q, cfg, rng)
        p = target_distribution(q)
        # overflow/invalid/divide are expected on divergence and guarded below
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for _ in range(cfg.inner_epochs):
                xbar, cache = h.forward_with_cache(x)
                loss, d_xbar, d_centroids = kl_backward(p, xbar, centroids)
                gw, gb = h.backward(cache, d_xbar)
                h.apply_gradients(gw, gb, cfg.refine_lr)
                centroids -= cfg.refine_lr * d_centroids
                if not np.isfinite(centroids).all():
                    raise NumericError("centroids diverged during KL refinement")
        kl_losses.append(loss)
        xbar = h.forward(x)
        if cfg.kmeans_reseed_every and iters % cfg.kmeans_reseed_every == 0:
            centroids, _ = init_clusters(xbar, cfg.num_communities, cfg.seed + iters)
        new_hard = soft_assign(xbar, centroids).argmax(axis=1)
        changed = float((new_hard != prev_hard).mean())
        prev_hard = new_hard
        log.debug("refine outer %d: kl %.5f, changed %.4f", iters, loss, changed)
        if changed < cfg.assignment_change_tol:
            break
    state.set_assignment(prev_hard)
    return RefineResult(
        embeddings=xbar,
        assignment=prev_hard,
        initial_assignment=initial_assignment,
        q_multi_initial=q_multi_initial,
        q_multi_final=state.q_multi(),
        outer_iters=iters,
        kl_losses=kl_losses,
    )
