"""Per-pair feature distances and graph geodesic distance matrices.

The geodesic distance between two nodes is the length of the shortest path
over the graph's edge set, with every edge weighted by the chosen feature
metric between its endpoints.  Pairs with no connecting path are assigned
``lambda_ * max(connected distances)`` so that they end up strictly farther
than any connected pair.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import csgraph_from_dense, dijkstra, floyd_warshall

from .graph import AttributedGraph, DistanceMetric

__all__ = [
    "GeodesicDistanceMatrix",
    "DegenerateGraphWarning",
    "pairwise_distance",
    "geodesic_distances",
    "complete_graph_distances",
]


class DegenerateGraphWarning(UserWarning):
    """A distance computation hit a degenerate input (e.g. edgeless graph)."""


@dataclass(frozen=True)
class GeodesicDistanceMatrix:
    """Symmetric geodesic distances with the metadata of the unconnected rule.

    ``matrix[i, j]`` is the shortest-path distance for connected pairs and
    exactly ``lambda_ * connected_max`` for unconnected ones.
    """

    matrix: np.ndarray
    lambda_: float
    connected_max: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def pairwise_distance(features, metric) -> np.ndarray:
    """Dense symmetric distance matrix between feature rows.

    Cosine distance is ``1 - cos(x, y)``; rows with zero norm are defined to
    be at distance 1 from everything and 0 from themselves.  The output is
    exactly symmetric with a zero diagonal and no negative entries.
    """
    metric = DistanceMetric(metric)
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")

    if metric is DistanceMetric.EUCLIDEAN:
        sq = np.sum(x * x, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
        np.clip(d2, 0.0, None, out=d2)
        dist = np.sqrt(d2)
    elif metric is DistanceMetric.MANHATTAN:
        from scipy.spatial.distance import cdist

        dist = cdist(x, x, metric="cityblock")
    else:  # cosine
        norms = np.linalg.norm(x, axis=1)
        zero = norms == 0.0
        safe = np.where(zero, 1.0, norms)
        unit = x / safe[:, None]
        dist = 1.0 - unit @ unit.T
        np.clip(dist, 0.0, 2.0, out=dist)
        if np.any(zero):
            dist[zero, :] = 1.0
            dist[:, zero] = 1.0

    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return dist


def _edge_weight_graph(g: AttributedGraph, metric, hop_count: bool) -> csr_matrix:
    """CSR graph whose stored entries are the metric weights of g's edges.

    Zero-weight edges (identical endpoint features) must stay stored, so the
    matrix is built from coordinate lists rather than from a dense array.
    """
    edges = g.edge_array()
    if len(edges) == 0:
        return csr_matrix((g.n, g.n))
    if hop_count:
        w = np.ones(len(edges), dtype=np.float64)
    else:
        dist = pairwise_distance(g.features, metric)
        w = dist[edges[:, 0], edges[:, 1]]
    row = np.concatenate([edges[:, 0], edges[:, 1]])
    col = np.concatenate([edges[:, 1], edges[:, 0]])
    return csr_matrix((np.concatenate([w, w]), (row, col)), shape=(g.n, g.n))


def geodesic_distances(
    g: AttributedGraph,
    metric=DistanceMetric.EUCLIDEAN,
    lambda_: float = 10.0,
    hop_count: bool = False,
) -> GeodesicDistanceMatrix:
    """All-pairs shortest-path distances over the graph's edge set.

    Each edge is weighted by the metric distance between its endpoint
    features (or by 1 when ``hop_count`` is set).  Unconnected pairs get
    ``lambda_ * max(connected distances)``.  Runs Dijkstra from every source.
    """
    if not lambda_ > 1.0:
        raise ValueError(f"lambda_ must be > 1, got {lambda_}")
    graph = _edge_weight_graph(g, metric, hop_count)
    dist = dijkstra(graph, directed=False)

    off_diag = ~np.eye(g.n, dtype=bool)
    finite = np.isfinite(dist) & off_diag
    connected_max = float(dist[finite].max()) if finite.any() else 0.0
    if g.n > 1 and not finite.any():
        warnings.warn(
            "graph has no connected pairs; all geodesic distances are 0",
            DegenerateGraphWarning,
        )
    dist[~np.isfinite(dist)] = lambda_ * connected_max
    np.fill_diagonal(dist, 0.0)
    return GeodesicDistanceMatrix(dist, float(lambda_), connected_max)


def complete_graph_distances(features, metric=DistanceMetric.EUCLIDEAN) -> np.ndarray:
    """Geodesic distances on the complete graph over the feature rows.

    For metrics satisfying the triangle inequality (euclidean, manhattan)
    no multi-hop path can undercut the direct edge, so this is just the
    pairwise distance matrix.  Cosine distance can violate the triangle
    inequality, so shortest paths are computed explicitly.
    """
    metric = DistanceMetric(metric)
    direct = pairwise_distance(features, metric)
    if metric is not DistanceMetric.COSINE or direct.shape[0] <= 2:
        return direct
    # null_value=inf keeps zero-distance pairs as genuine weight-0 edges
    graph = csgraph_from_dense(direct, null_value=np.inf)
    dist = floyd_warshall(graph, directed=False)
    dist = np.minimum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)
    return dist
