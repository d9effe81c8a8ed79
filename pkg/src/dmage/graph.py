"""Attributed-graph data model, file ingestion and neighborhood indices.

An attributed graph is a set of ``n`` nodes carrying feature vectors, an
undirected edge set stored as ``(i, j)`` pairs with ``i < j``, and optional
integer class labels.  Everything downstream (geodesic distances, the
aggregation layer, augmentation) works off this representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix

__all__ = [
    "DistanceMetric",
    "AttributedGraph",
    "AdjacencyMatrix",
    "NeighborhoodIndex",
    "GraphFormatError",
    "load_graph",
    "adjacency",
    "adjacency_from_edges",
    "hop_neighborhoods",
    "knn_graph",
    "normalize_edges",
]


class DistanceMetric(str, Enum):
    """Supported per-pair feature distances."""

    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    COSINE = "cosine"


class GraphFormatError(ValueError):
    """Raised when a graph input file is malformed or inconsistent."""


def normalize_edges(pairs) -> frozenset:
    """Canonicalize an iterable of node pairs into an undirected edge set.

    Pairs are sorted so each edge is stored once as ``(min, max)``; duplicates
    (including reversed duplicates) collapse.  Self-loops are rejected.
    """
    edges = set()
    for i, j in pairs:
        i, j = int(i), int(j)
        if i == j:
            raise GraphFormatError(f"self-loop ({i}, {j}) is not allowed")
        edges.add((i, j) if i < j else (j, i))
    return frozenset(edges)


@dataclass(frozen=True)
class AttributedGraph:
    """Undirected graph with node features and optional class labels.

    Parameters
    ----------
    n: number of nodes; node ids are dense integers ``0 .. n-1``.
    edges: frozenset of ``(i, j)`` pairs with ``i < j``.
    features: float array of shape ``(n, d)``.
    labels: optional int array of length ``n`` with contiguous class ids
        starting at 0.
    """

    n: int
    edges: frozenset
    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        if self.features.ndim != 2 or self.features.shape[0] != self.n:
            raise GraphFormatError(
                f"features must be (n, d) with n={self.n}, got {self.features.shape}"
            )
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise GraphFormatError(f"edge ({i}, {j}) out of range for n={self.n}")
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            object.__setattr__(self, "labels", labels)
            if labels.shape != (self.n,):
                raise GraphFormatError(
                    f"labels must have length n={self.n}, got {labels.shape}"
                )
            classes = np.unique(labels)
            if classes[0] != 0 or classes[-1] != len(classes) - 1:
                raise GraphFormatError(
                    "class ids must be contiguous integers starting at 0, "
                    f"got {classes.tolist()}"
                )

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_classes(self) -> int:
        if self.labels is None:
            raise ValueError("graph has no labels")
        return int(self.labels.max()) + 1

    def edge_array(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` int array in sorted order (deterministic)."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(sorted(self.edges), dtype=np.int64)

    def with_edges(self, edges) -> "AttributedGraph":
        """Copy of this graph with a different edge set (features/labels shared)."""
        return AttributedGraph(self.n, normalize_edges(edges), self.features, self.labels)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Binary symmetric adjacency, stored as sorted per-row neighbor lists."""

    n: int
    neighbors: tuple

    def to_csr(self) -> csr_matrix:
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for i, nb in enumerate(self.neighbors):
            indptr[i + 1] = indptr[i] + len(nb)
        indices = np.concatenate(self.neighbors) if indptr[-1] else np.zeros(0, dtype=np.int64)
        data = np.ones(indptr[-1], dtype=np.float64)
        return csr_matrix((data, indices, indptr), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for i, nb in enumerate(self.neighbors):
            a[i, nb] = 1.0
        return a

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)


@dataclass(frozen=True)
class NeighborhoodIndex:
    """Per-node 1-hop and exactly-2-hop neighborhoods (sorted, disjoint)."""

    hop1: tuple
    hop2: tuple

    def hop2_pairs(self) -> np.ndarray:
        """All unordered ``(i, j)`` pairs at graph distance exactly 2, sorted."""
        pairs = [(i, int(j)) for i, nb in enumerate(self.hop2) for j in nb if i < j]
        if not pairs:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(sorted(pairs), dtype=np.int64)


def _parse_edge_file(path: Path):
    edges = set()
    max_id = -1
    ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise GraphFormatError(
                    f"{path}:{lineno}: expected two node ids, got {line.strip()!r}"
                )
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise GraphFormatError(
                    f"{path}:{lineno}: non-integer node id in {line.strip()!r}"
                ) from exc
            if i == j:
                raise GraphFormatError(f"{path}:{lineno}: self-loop {i}-{j}")
            if i < 0 or j < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative node id")
            edges.add((i, j) if i < j else (j, i))
            ids.update((i, j))
            max_id = max(max_id, i, j)
    return edges, ids, max_id


def _parse_dense_features(path: Path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                row = [float(p) for p in parts]
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: non-numeric feature value") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise GraphFormatError(
                    f"{path}:{lineno}: expected {width} values, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise GraphFormatError(f"{path}: empty feature file")
    return np.array(rows, dtype=np.float64)


def _parse_triplet_features(path: Path) -> np.ndarray:
    # Sparse variant: each line "i j value"; shape inferred from max indices.
    triplets = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise GraphFormatError(f"{path}:{lineno}: expected 'i j value'")
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: malformed triplet") from exc
            if i < 0 or j < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative index")
            triplets.append((i, j, v))
    if not triplets:
        raise GraphFormatError(f"{path}: empty feature file")
    n = max(t[0] for t in triplets) + 1
    d = max(t[1] for t in triplets) + 1
    x = np.zeros((n, d), dtype=np.float64)
    for i, j, v in triplets:
        x[i, j] = v
    return x


def _parse_label_file(path: Path) -> np.ndarray:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                labels.append(int(s))
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: non-integer label {s!r}") from exc
    return np.array(labels, dtype=np.int64)


def load_graph(edge_path, feature_path, label_path=None, id_map_path=None) -> AttributedGraph:
    """Load an attributed graph from plain text files.

    The edge file holds one edge per line as two whitespace-separated node
    ids; duplicate and reversed lines collapse to one undirected edge and
    self-loops are rejected.  The feature file is a dense whitespace-separated
    matrix, one node per line in node-id order; files ending in ``.coo`` are
    instead parsed as sparse ``i j value`` triplets.  The optional label file
    holds one integer class id per line.

    Node ids need not be dense: arbitrary ids are remapped (in ascending
    order) to ``0 .. n-1``, and the mapping is written to ``id_map_path``
    when given.  Feature and label rows are indexed by the remapped id.
    """
    edge_path, feature_path = Path(edge_path), Path(feature_path)
    edges, ids, max_id = _parse_edge_file(edge_path)

    dense_ids = bool(ids) and max_id == len(ids) - 1
    if dense_ids or not ids:
        n_nodes = max_id + 1
        id_map = None
    else:
        ordered = sorted(ids)
        id_map = {orig: k for k, orig in enumerate(ordered)}
        edges = {(id_map[i], id_map[j]) for i, j in edges}
        edges = {(i, j) if i < j else (j, i) for i, j in edges}
        n_nodes = len(ordered)
        if id_map_path is not None:
            with open(id_map_path, "w", encoding="utf-8") as fh:
                for orig, dense in sorted(id_map.items()):
                    fh.write(f"{orig}\t{dense}\n")

    if feature_path.suffix == ".coo":
        features = _parse_triplet_features(feature_path)
    else:
        features = _parse_dense_features(feature_path)
    if features.shape[0] != n_nodes:
        raise GraphFormatError(
            f"{feature_path}: {features.shape[0]} feature rows but edge file "
            f"implies {n_nodes} nodes (max node id + 1)"
        )

    labels = None
    if label_path is not None:
        labels = _parse_label_file(Path(label_path))
        if len(labels) != n_nodes:
            raise GraphFormatError(
                f"{label_path}: {len(labels)} labels for {n_nodes} nodes"
            )
        if labels.min(initial=0) < 0:
            raise GraphFormatError(f"{label_path}: negative label")

    return AttributedGraph(n_nodes, frozenset(edges), features, labels)


def adjacency(g: AttributedGraph) -> AdjacencyMatrix:
    """Symmetric 0/1 adjacency with zero diagonal."""
    return adjacency_from_edges(g.n, g.edges)


def adjacency_from_edges(n: int, edges) -> AdjacencyMatrix:
    nbrs = [[] for _ in range(n)]
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    return AdjacencyMatrix(
        n, tuple(np.array(sorted(nb), dtype=np.int64) for nb in nbrs)
    )


def hop_neighborhoods(g: AttributedGraph) -> NeighborhoodIndex:
    """1-hop neighbors and exactly-2-hop neighbors of every node.

    A node j is in ``hop2[i]`` iff it is reachable from i in two edges but is
    neither i itself nor a direct neighbor of i.
    """
    adj = adjacency(g)
    hop1 = adj.neighbors
    hop1_sets = [set(nb.tolist()) for nb in hop1]
    hop2 = []
    for i in range(g.n):
        two = set()
        for k in hop1_sets[i]:
            two.update(hop1_sets[k])
        two.discard(i)
        two -= hop1_sets[i]
        hop2.append(np.array(sorted(two), dtype=np.int64))
    return NeighborhoodIndex(hop1, tuple(hop2))


def knn_graph(features, k: int, metric=DistanceMetric.EUCLIDEAN) -> AttributedGraph:
    """Union-symmetrized k-nearest-neighbor graph over feature rows.

    An edge (i, j) exists iff j is among the k nearest neighbors of i or
    vice versa.  Distance ties break toward the smaller node index, so the
    result is deterministic even for degenerate (all-identical) inputs.
    """
    from .distances import pairwise_distance  # local import to avoid a cycle

    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must be in [1, n), got k={k}, n={n}")
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")

    dist = pairwise_distance(features, metric)
    np.fill_diagonal(dist, np.inf)
    # stable sort: equal distances keep ascending index order
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    edges = set()
    for i in range(n):
        for j in order[i]:
            j = int(j)
            edges.add((i, j) if i < j else (j, i))
    return AttributedGraph(n, frozenset(edges), features, None)
