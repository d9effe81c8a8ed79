"""Training loop: precompute input similarities, fit the network, emit embeddings.

The pipeline has two phases.  ``precompute`` turns the graph into two joint
similarity matrices — one over the priori edge set, one over the complete
(or k-NN substituted) graph — and caches both distances and similarities on
disk keyed by a content hash.  ``train`` then runs the epoch/batch loop:
augment edges, forward the whole node set through the network, evaluate the
fused loss on the batch pairs, and update parameters with Adam or SGD.  The
final embedding always comes from a forward pass with the unaugmented
priori adjacency.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .augmentation import AugmentationConfig, augment
from .container import (
    MAGIC_DISTANCE,
    MAGIC_SIMILARITY,
    atomic_write_text,
    content_hash,
    load_matrix,
    save_matrix,
)
from .distances import complete_graph_distances, geodesic_distances
from .graph import AttributedGraph, adjacency, adjacency_from_edges, hop_neighborhoods, knn_graph
from .losses import BregmanKind, LossTerms, fused_loss
from .network import (
    GradientTape,
    NetworkParams,
    aggregation_matrix,
    backward,
    default_stack,
    forward,
    init_network,
)
from .similarity import SimilarityMatrix, similarity_from_distances

__all__ = [
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "precompute",
    "train",
    "embed",
    "write_embeddings",
    "read_embeddings",
    "write_loss_history",
]

log = logging.getLogger("dmage")

# rng stream offsets; stride 4 keeps streams of different base seeds disjoint
_INIT_STREAM = 0
_SHUFFLE_STREAM = 1
_AUGMENT_STREAM = 2


class TrainingDivergedError(RuntimeError):
    """Total loss became non-finite during training."""

    def __init__(self, epoch: int, last_finite_epoch: int):
        self.epoch = epoch
        self.last_finite_epoch = last_finite_epoch
        super().__init__(
            f"loss became non-finite in epoch {epoch}; "
            f"last epoch with finite loss: {last_finite_epoch}"
        )


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters and switches for one training run.

    ``batch_size=0`` means min(n, 1024).  ``knn_k=0`` uses the true complete
    graph for the feature-side similarity; a positive value substitutes the
    k-nearest-neighbor graph.  ``lambda_`` scales the unconnected-pair
    distance and serializes under the key "lambda".
    """

    learning_rate: float = 1e-3
    epochs: int = 500
    batch_size: int = 0
    alpha: float = 1.0
    nu_input: float = 100.0
    nu_latent: float = 1.0
    q_p: float = 16.0
    p_minus: float = 0.01
    lambda_: float = 10.0
    metric: str = "euclidean"
    knn_k: int = 0
    seed: int = 0
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    bregman: str = "logi"
    no_augment: bool = False
    no_fca: bool = False
    hard_similarity: bool = False
    hidden_dims: tuple = (500, 250)
    latent_dim: int = 200
    activation: str = "leaky_relu"
    fca_variant: str = "gcn"
    self_loops: bool = True
    symmetrize_variant: str = "paper"
    augment_per_batch: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size != 0 and self.batch_size < 2:
            raise ValueError(f"batch_size must be 0 (auto) or >= 2, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.p_minus <= 1.0:
            raise ValueError(f"p_minus must be in [0, 1], got {self.p_minus}")
        if not self.lambda_ > 1:
            raise ValueError(f"lambda must be > 1, got {self.lambda_}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.nu_input > 0 and self.nu_latent > 0):
            raise ValueError("nu_input and nu_latent must be positive")
        if not self.q_p > 1:
            raise ValueError(f"q_p must be > 1, got {self.q_p}")
        if self.knn_k < 0:
            raise ValueError(f"knn_k must be >= 0, got {self.knn_k}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        BregmanKind(self.bregman)
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("lambda_")
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "lambda" in d:
            if "lambda_" in d:
                raise ValueError("config sets both 'lambda' and 'lambda_'")
            d["lambda_"] = d.pop("lambda")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrainResult:
    embeddings: np.ndarray
    params: NetworkParams
    loss_history: tuple
    config_echo: TrainConfig


class _SgdOptimizer:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params: NetworkParams, dW, dB):
        for W, B, gw, gb in zip(params.weights, params.biases, dW, dB):
            W -= self.lr * gw
            B -= self.lr * gb
        params.bump()


class _AdamOptimizer:
    def __init__(self, lr, beta1, beta2, eps):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params: NetworkParams, dW, dB):
        grads = list(dW) + list(dB)
        tensors = list(params.weights) + list(params.biases)
        if self.m is None:
            self.m = [np.zeros_like(t) for t in tensors]
            self.v = [np.zeros_like(t) for t in tensors]
        self.t += 1
        correct1 = 1.0 - self.b1**self.t
        correct2 = 1.0 - self.b2**self.t
        for x, g, m, v in zip(tensors, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            x -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)
        params.bump()


def _make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return _SgdOptimizer(cfg.learning_rate)
    return _AdamOptimizer(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)


def _cache_dir(explicit=None):
    if explicit is not None:
        return explicit
    return os.environ.get("DMAGE_CACHE_DIR") or None


def _cached_matrix(cache, name, magic, compute):
    """Load ``<cache>/<name>`` if present, else compute and persist."""
    if cache is None:
        return compute()
    os.makedirs(cache, exist_ok=True)
    path = os.path.join(cache, name)
    if os.path.exists(path):
        matrix, _ = load_matrix(path, expect_magic=magic)
        log.info("cache hit: %s", path)
        return matrix
    matrix = compute()
    save_matrix(path, matrix, magic)
    log.info("cache write: %s", path)
    return matrix


def precompute(g: AttributedGraph, cfg: TrainConfig, cache_dir=None):
    """Input similarity matrices: complete-graph ("feature") and priori-graph.

    Returns ``(P_complete, P_prior)`` as joint :class:`SimilarityMatrix`.
    Distances and similarities are cached under ``cache_dir`` (or the
    DMAGE_CACHE_DIR environment variable) keyed by a content hash of the
    graph and the relevant config fields; cache hits reload bit-identically.
    With ``hard_similarity`` the priori matrix is the 0/1 adjacency instead
    of the geodesic similarity.
    """
    cache = _cache_dir(cache_dir)
    base = content_hash(g.n, g.edge_array(), g.features)

    def sim_from(dist_key, dist_fn, tag):
        d = _cached_matrix(cache, f"{tag}-{dist_key[:32]}.dmgd", MAGIC_DISTANCE, dist_fn)
        sim_key = content_hash(
            dist_key, cfg.nu_input, cfg.q_p, cfg.symmetrize_variant
        )
        s = _cached_matrix(
            cache,
            f"{tag}-{sim_key[:32]}.dmgs",
            MAGIC_SIMILARITY,
            lambda: similarity_from_distances(
                d, cfg.nu_input, cfg.q_p, symmetrize_variant=cfg.symmetrize_variant
            ).matrix,
        )
        return SimilarityMatrix(s, "joint")

    if cfg.knn_k > 0:
        knn_g = knn_graph(g.features, cfg.knn_k, cfg.metric)
        complete_key = content_hash(base, "knn", cfg.knn_k, cfg.metric, cfg.lambda_)
        p_complete = sim_from(
            complete_key,
            lambda: geodesic_distances(knn_g, cfg.metric, cfg.lambda_).matrix,
            "complete",
        )
    else:
        complete_key = content_hash(base, "complete", cfg.metric)
        p_complete = sim_from(
            complete_key,
            lambda: complete_graph_distances(g.features, cfg.metric),
            "complete",
        )

    if cfg.hard_similarity:
        p_prior = SimilarityMatrix(adjacency(g).to_dense(), "joint")
    else:
        prior_key = content_hash(base, "prior", cfg.metric, cfg.lambda_)
        p_prior = sim_from(
            prior_key,
            lambda: geodesic_distances(g, cfg.metric, cfg.lambda_).matrix,
            "prior",
        )
    return p_complete, p_prior


def _batches(perm, batch_size):
    """Chunk a permutation; a trailing singleton merges into the previous batch."""
    chunks = [perm[i : i + batch_size] for i in range(0, perm.size, batch_size)]
    if len(chunks) > 1 and chunks[-1].size < 2:
        chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
        chunks.pop()
    return chunks


def _build_specs(g: AttributedGraph, cfg: TrainConfig):
    return default_stack(
        g.features.shape[1],
        cfg.hidden_dims,
        cfg.latent_dim,
        cfg.activation,
        no_fca=cfg.no_fca,
        fca_variant=cfg.fca_variant,
        self_loops=cfg.self_loops,
    )


def train(g: AttributedGraph, cfg: TrainConfig, cache_dir=None) -> TrainResult:
    """Fit the embedding network on one graph; deterministic given cfg.seed.

    Raises :class:`TrainingDivergedError` (with the last finite epoch in the
    message) if the loss leaves the finite range.
    """
    n = g.n
    if n < 2:
        raise ValueError("training needs at least 2 nodes")
    batch_size = cfg.batch_size or min(n, 1024)
    if batch_size > n:
        raise ValueError(f"batch_size {batch_size} exceeds node count {n}")

    p_complete, p_prior = precompute(g, cfg, cache_dir)
    Pc, Pp = p_complete.matrix, p_prior.matrix

    specs = _build_specs(g, cfg)
    params = init_network(specs, 4 * cfg.seed + _INIT_STREAM)
    optimizer = _make_optimizer(cfg)
    kind = BregmanKind(cfg.bregman)

    augmenting = not cfg.no_augment and cfg.p_minus > 0 and g.num_edges > 0
    hoods = hop_neighborhoods(g) if augmenting else None
    aug_cfg = AugmentationConfig(cfg.p_minus, 4 * cfg.seed + _AUGMENT_STREAM) if augmenting else None
    needs_aggregation = not cfg.no_fca

    prior_adj = adjacency(g)
    X = g.features

    def aggregation_for(edges):
        if not needs_aggregation:
            return None
        adj = adjacency_from_edges(n, edges)
        return aggregation_matrix(adj, cfg.fca_variant, cfg.self_loops)

    N_prior = aggregation_for(g.edges)
    history = []
    last_finite = -1
    step = 0
    for epoch in range(cfg.epochs):
        if augmenting and not cfg.augment_per_batch:
            N_epoch = aggregation_for(augment(g, hoods, aug_cfg, epoch).result)
        else:
            N_epoch = N_prior
        perm = np.random.default_rng([4 * cfg.seed + _SHUFFLE_STREAM, epoch]).permutation(n)
        sums = np.zeros(3)
        chunks = _batches(perm, batch_size)
        for batch in chunks:
            if augmenting and cfg.augment_per_batch:
                N_epoch = aggregation_for(augment(g, hoods, aug_cfg, step).result)
            step += 1
            tape = GradientTape()
            Z = forward(X, N_epoch, params, tape)
            if not np.isfinite(Z).all():
                raise TrainingDivergedError(epoch, last_finite)
            terms, dZb = fused_loss(Pc, Pp, Z, cfg.nu_latent, cfg.alpha, kind, batch)
            if not np.isfinite(terms.total):
                raise TrainingDivergedError(epoch, last_finite)
            dZ = np.zeros_like(Z)
            dZ[batch] = dZb
            dW, dB = backward(tape, dZ)
            optimizer.step(params, dW, dB)
            sums += (terms.feature_term, terms.structure_term, terms.total)
        mean = sums / len(chunks)
        history.append(LossTerms(mean[0], mean[1], cfg.alpha, mean[2]))
        last_finite = epoch
        if (epoch + 1) % 50 == 0 or epoch == cfg.epochs - 1:
            log.info("epoch %d/%d: loss %.6g", epoch + 1, cfg.epochs, mean[2])

    Z_final = forward(X, N_prior, params)
    return TrainResult(Z_final, params, tuple(history), cfg)


def embed(g: AttributedGraph, params: NetworkParams) -> np.ndarray:
    """Forward pass with the priori adjacency; no augmentation, no tape."""
    in_dim = params.specs[0].in_dim
    if g.features.shape[1] != in_dim:
        raise ValueError(
            f"features have {g.features.shape[1]} dims but network expects {in_dim}"
        )
    needs_aggregation = any(s.kind == "fca" for s in params.specs)
    A = None
    if needs_aggregation:
        fca = next(s for s in params.specs if s.kind == "fca")
        A = aggregation_matrix(adjacency(g), fca.fca_variant, fca.self_loops)
    return forward(g.features, A, params)


def write_embeddings(path, Z: np.ndarray, node_ids=None):
    """Tab-separated embedding export: node id then 9-significant-digit values."""
    Z = np.asarray(Z)
    if node_ids is None:
        node_ids = range(Z.shape[0])
    lines = []
    for node_id, row in zip(node_ids, Z):
        lines.append("\t".join([str(node_id)] + [format(v, ".9g") for v in row]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_embeddings(path):
    """Inverse of :func:`write_embeddings`; returns ``(ids, Z)``."""
    ids, rows = [], []
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    return ids, np.asarray(rows, dtype=np.float64)


def write_loss_history(path, history):
    """One line per epoch: epoch, feature term, structure term, total."""
    lines = [
        "\t".join(
            [str(e)]
            + [format(v, ".9g") for v in (t.feature_term, t.structure_term, t.total)]
        )
        for e, t in enumerate(history)
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")
