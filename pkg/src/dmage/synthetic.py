"""Synthetic attributed graphs with known ground truth for tests and demos."""

from __future__ import annotations

import numpy as np

from .graph import AttributedGraph

__all__ = ["two_block_sbm"]


def two_block_sbm(
    n: int = 60,
    p_intra: float = 0.3,
    p_inter: float = 0.02,
    separation: float = 2.0,
    feature_dim: int = 2,
    sigma: float = 1.0,
    seed: int = 0,
) -> AttributedGraph:
    """Two-block stochastic block model with Gaussian node features.

    Nodes split into two equal blocks (labels 0 and 1).  Each within-block
    pair is connected with probability ``p_intra``, each cross-block pair
    with ``p_inter``.  Features are isotropic Gaussians (std ``sigma``)
    centered at -+``separation`` along the first axis.

    Parameters
    ----------
    n: total node count (first ceil(n/2) nodes form block 0)
    seed: drives both edge sampling and feature noise

    Returns
    -------
    AttributedGraph with integer block labels.
    """
    if n < 4:
        raise ValueError("need at least 4 nodes for two blocks")
    rng = np.random.default_rng(seed)
    half = (n + 1) // 2
    labels = np.zeros(n, dtype=np.int64)
    labels[half:] = 1

    centers = np.zeros((2, feature_dim))
    centers[0, 0] = -separation
    centers[1, 0] = separation
    features = centers[labels] + sigma * rng.standard_normal((n, feature_dim))

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_intra, p_inter)
    keep = rng.random(iu.size) < prob
    edges = frozenset(zip(iu[keep].tolist(), ju[keep].tolist()))
    return AttributedGraph(n, edges, features, labels)
