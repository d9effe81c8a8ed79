"""Downstream evaluation: k-means clustering and link prediction.

Clustering runs Lloyd's algorithm with k-means++ seeding on the embedding
and scores the assignment against ground-truth labels with ACC (after
Hungarian cluster-to-label matching), NMI (arithmetic normalization), and
macro F1 over the matched classes.  Link prediction holds out edge sets,
retrains on the remaining graph, scores held-out pairs from the embedding,
and reports AUC and average precision.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import rankdata

from .container import atomic_write_text
from .graph import AttributedGraph
from .similarity import t_kernel
from .training import TrainConfig, train

__all__ = [
    "ClusteringReport",
    "LinkPredSplit",
    "LinkPredReport",
    "kmeans",
    "clustering_metrics",
    "cluster_eval",
    "linkpred_split",
    "edge_score",
    "edge_scores",
    "auc_ap",
    "linkpred_eval",
    "write_split",
    "write_report",
]

KMEANS_MAX_ITER = 300
VAL_FRACTION = 0.05
TEST_FRACTION = 0.10


@dataclass(frozen=True)
class ClusteringReport:
    acc: float
    nmi: float
    f1: float
    seed: int
    assignment: np.ndarray


@dataclass(frozen=True)
class LinkPredSplit:
    """Disjoint edge holdout plus matched negative (non-edge) samples."""

    train_edges: frozenset
    val_edges: frozenset
    test_edges: frozenset
    val_negatives: frozenset
    test_negatives: frozenset
    seed: int


@dataclass(frozen=True)
class LinkPredReport:
    auc: float
    ap: float
    seed: int


def _sq_dists_to(Z, centers):
    # (n, k) squared Euclidean distances
    cross = Z @ centers.T
    return np.maximum(
        (Z * Z).sum(axis=1)[:, None] - 2.0 * cross + (centers * centers).sum(axis=1), 0.0
    )


def _plus_plus_init(Z, k, rng):
    n = Z.shape[0]
    centers = np.empty((k, Z.shape[1]))
    centers[0] = Z[rng.integers(n)]
    closest = _sq_dists_to(Z, centers[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[c] = Z[rng.integers(n)]
        else:
            centers[c] = Z[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, _sq_dists_to(Z, centers[c : c + 1]).ravel())
    return centers


def _lloyd(Z, k, rng):
    centers = _plus_plus_init(Z, k, rng)
    assign = np.full(Z.shape[0], -1)
    for _ in range(KMEANS_MAX_ITER):
        d2 = _sq_dists_to(Z, centers)
        new_assign = d2.argmin(axis=1)
        point_d2 = d2[np.arange(Z.shape[0]), new_assign]
        for c in range(k):
            members = new_assign == c
            if members.any():
                centers[c] = Z[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its center
                far = point_d2.argmax()
                centers[c] = Z[far]
                new_assign[far] = c
                point_d2[far] = 0.0
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    inertia = float(_sq_dists_to(Z, centers)[np.arange(Z.shape[0]), assign].sum())
    return assign, inertia


def kmeans(Z, k: int, seed: int = 0, restarts: int = 10) -> np.ndarray:
    """Best-of-``restarts`` Lloyd clustering, deterministic given the seed."""
    Z = np.asarray(Z, dtype=np.float64)
    if not 1 <= k <= Z.shape[0]:
        raise ValueError(f"k must be in [1, {Z.shape[0]}], got {k}")
    best_assign, best_inertia = None, np.inf
    for r in range(restarts):
        assign, inertia = _lloyd(Z, k, np.random.default_rng([seed, r]))
        if inertia < best_inertia:
            best_assign, best_inertia = assign, inertia
    return best_assign


def _contingency(pred, truth):
    clusters = np.unique(pred)
    classes = np.unique(truth)
    table = np.zeros((clusters.size, classes.size), dtype=np.int64)
    c_idx = {c: i for i, c in enumerate(clusters)}
    l_idx = {c: i for i, c in enumerate(classes)}
    for p, t in zip(pred, truth):
        table[c_idx[p], l_idx[t]] += 1
    return table, clusters, classes


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def _nmi(table):
    n = table.sum()
    h_pred = _entropy(table.sum(axis=1))
    h_true = _entropy(table.sum(axis=0))
    if h_pred == 0.0 and h_true == 0.0:
        return 1.0
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)).astype(np.float64)
    nz = table > 0
    mi = float((table[nz] / n * np.log(n * table[nz] / outer[nz])).sum())
    denom = 0.5 * (h_pred + h_true)
    return mi / denom if denom > 0 else 0.0


def _f1_per_class(pred_labels, truth, classes, variant):
    if variant == "micro":
        tp = (pred_labels == truth).sum()
        return float(tp / truth.size)
    scores = []
    for c in classes:
        tp = np.sum((pred_labels == c) & (truth == c))
        fp = np.sum((pred_labels == c) & (truth != c))
        fn = np.sum((pred_labels != c) & (truth == c))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(scores))


def clustering_metrics(pred, truth, seed: int = 0, f1_variant: str = "macro") -> ClusteringReport:
    """Score a cluster assignment against labels; ACC/F1 use Hungarian matching."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("pred and truth must be equal-length vectors")
    if pred.size < 2:
        raise ValueError("need at least 2 points to score a clustering")
    if f1_variant not in ("macro", "micro"):
        raise ValueError(f"unknown f1 variant {f1_variant!r}")
    table, clusters, classes = _contingency(pred, truth)
    rows, cols = linear_sum_assignment(-table)
    acc = float(table[rows, cols].sum() / pred.size)
    # unmatched clusters (more clusters than classes) map to no label
    mapping = dict(zip(clusters[rows], classes[cols]))
    pred_labels = np.array([mapping.get(p, -1) for p in pred])
    f1 = _f1_per_class(pred_labels, truth, classes, f1_variant)
    return ClusteringReport(acc, _nmi(table), f1, seed, pred)


def cluster_eval(Z, labels, seeds, restarts: int = 10, f1_variant: str = "macro"):
    """k-means per seed on fixed embeddings; returns per-seed reports."""
    labels = np.asarray(labels)
    k = np.unique(labels).size
    return [
        clustering_metrics(kmeans(Z, k, seed, restarts), labels, seed, f1_variant)
        for seed in seeds
    ]


def linkpred_split(g: AttributedGraph, seed: int = 0) -> LinkPredSplit:
    """Hold out 5% of edges for validation and 10% for testing.

    Negatives are non-edges sampled uniformly without replacement, one per
    held-out positive, split disjointly between validation and test.
    """
    m = g.num_edges
    if m < 20:
        raise ValueError(f"need at least 20 edges to split, got {m}")
    n_val = int(m * VAL_FRACTION)
    n_test = int(m * TEST_FRACTION)
    total_pairs = g.n * (g.n - 1) // 2
    if total_pairs - m < n_val + n_test:
        raise ValueError("not enough non-edges to sample negatives")

    rng = np.random.default_rng(seed)
    edges = g.edge_array()
    order = rng.permutation(m)
    val = edges[order[:n_val]]
    test = edges[order[n_val : n_val + n_test]]
    rest = edges[order[n_val + n_test :]]

    negatives = set()
    while len(negatives) < n_val + n_test:
        i, j = int(rng.integers(g.n)), int(rng.integers(g.n))
        if i == j:
            continue
        pair = (i, j) if i < j else (j, i)
        if pair in g.edges or pair in negatives:
            continue
        negatives.add(pair)
    negatives = sorted(negatives)
    rng.shuffle(negatives)
    val_neg = frozenset(negatives[:n_val])
    test_neg = frozenset(negatives[n_val : n_val + n_test])

    as_set = lambda arr: frozenset(map(tuple, arr))
    return LinkPredSplit(as_set(rest), as_set(val), as_set(test), val_neg, test_neg, seed)


def edge_scores(Z, pairs, scorer: str = "t_kernel", nu: float = 1.0) -> np.ndarray:
    """Score candidate edges from latent rows; higher means more likely an edge.

    "cosine" uses the angle between endpoint embeddings (zero-norm rows
    score 0); "t_kernel" applies the latent kernel to the endpoint distance.
    """
    Z = np.asarray(Z, dtype=np.float64)
    pairs = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs)
    if pairs.size == 0:
        return np.empty(0)
    a, b = Z[pairs[:, 0]], Z[pairs[:, 1]]
    if scorer == "cosine":
        norms = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(norms > 0, (a * b).sum(axis=1) / norms, 0.0)
    if scorer == "t_kernel":
        return t_kernel(np.linalg.norm(a - b, axis=1), nu)
    raise ValueError(f"unknown scorer {scorer!r}")


def edge_score(Z, i: int, j: int, scorer: str = "t_kernel", nu: float = 1.0) -> float:
    return float(edge_scores(Z, [(i, j)], scorer, nu)[0])


def auc_ap(scores_pos, scores_neg):
    """AUC (rank statistic, ties count half) and average precision."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one positive and one negative score")
    ranks = rankdata(np.concatenate([pos, neg]))
    auc = (ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0) / (pos.size * neg.size)

    # average precision: step through descending score thresholds, tied
    # scores enter together
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size, bool), np.zeros(neg.size, bool)])
    order = np.argsort(-scores, kind="stable")
    scores, labels = scores[order], labels[order]
    boundaries = np.flatnonzero(np.diff(scores)) + 1
    tp = np.cumsum(labels)[np.append(boundaries - 1, labels.size - 1)]
    count = np.append(boundaries - 1, labels.size - 1) + 1
    precision = tp / count
    recall = tp / pos.size
    recall_prev = np.concatenate([[0.0], recall[:-1]])
    ap = float(np.sum((recall - recall_prev) * precision))
    return float(auc), ap


def linkpred_eval(
    g: AttributedGraph,
    cfg: TrainConfig,
    seeds,
    scorer: str = "t_kernel",
    cache_dir=None,
    split_dir=None,
):
    """Re-train on the split graph per seed and score held-out pairs.

    Returns ``(reports, splits)``; if ``split_dir`` is given each split is
    persisted there as edge-list files.
    """
    reports, splits = [], []
    for seed in seeds:
        split = linkpred_split(g, seed)
        g_train = g.with_edges(split.train_edges)
        result = train(g_train, dataclasses.replace(cfg, seed=seed), cache_dir)
        s_pos = edge_scores(result.embeddings, split.test_edges, scorer, cfg.nu_latent)
        s_neg = edge_scores(result.embeddings, split.test_negatives, scorer, cfg.nu_latent)
        auc, ap = auc_ap(s_pos, s_neg)
        reports.append(LinkPredReport(auc, ap, seed))
        splits.append(split)
        if split_dir is not None:
            write_split(os.path.join(split_dir, f"split-seed{seed}"), split)
    return reports, splits


def _write_edge_list(path, edges):
    lines = [f"{i}\t{j}" for i, j in sorted(edges)]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def write_split(directory, split: LinkPredSplit):
    """Persist a split as five edge-list files for reproducibility."""
    os.makedirs(directory, exist_ok=True)
    _write_edge_list(os.path.join(directory, "train_edges.tsv"), split.train_edges)
    _write_edge_list(os.path.join(directory, "val_edges.tsv"), split.val_edges)
    _write_edge_list(os.path.join(directory, "test_edges.tsv"), split.test_edges)
    _write_edge_list(os.path.join(directory, "val_negatives.tsv"), split.val_negatives)
    _write_edge_list(os.path.join(directory, "test_negatives.tsv"), split.test_negatives)


def write_report(path, task: str, rows: list, extra: dict | None = None):
    """Serialize per-seed metric rows plus mean/std as a JSON document."""
    payload = {"task": task, "rows": rows}
    if rows:
        keys = [k for k in rows[0] if k != "seed"]
        payload["mean"] = {k: float(np.mean([r[k] for r in rows])) for k in keys}
        payload["std"] = {k: float(np.std([r[k] for r in rows])) for k in keys}
    if extra:
        payload.update(extra)
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
