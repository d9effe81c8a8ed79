"""Per-epoch structural augmentation: drop hop-1 edges, add hop-2 edges.

Each existing edge is dropped independently with a small probability; the
same number of hop-2 pairs (nodes at graph distance exactly 2 in the
original graph) is then added, sampled uniformly without replacement.  The
result is a perturbed edge set used for one training epoch only — evaluation
always runs on the unaugmented graph.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import AttributedGraph, NeighborhoodIndex

__all__ = ["AugmentationConfig", "AugmentedEdges", "AugmentationWarning", "augment"]


class AugmentationWarning(UserWarning):
    """Not enough hop-2 candidates to balance the dropped edges."""


@dataclass(frozen=True)
class AugmentationConfig:
    p_minus: float
    rng_seed: int
    equalize: bool = True

    def __post_init__(self):
        if not 0.0 <= self.p_minus <= 1.0:
            raise ValueError(f"p_minus must be in [0, 1], got {self.p_minus}")


@dataclass(frozen=True)
class AugmentedEdges:
    """Edges removed, edges added, and the resulting perturbed edge set."""

    removed: frozenset
    added: frozenset
    result: frozenset


def augment(
    g: AttributedGraph,
    hoods: NeighborhoodIndex,
    cfg: AugmentationConfig,
    epoch: int,
) -> AugmentedEdges:
    """One epoch's edge perturbation, deterministic in (rng_seed, epoch).

    Hop-2 candidates come from ``hoods`` (computed on the original graph);
    by construction they are disjoint from the existing edges.  When fewer
    candidates exist than edges were dropped, all candidates are added and an
    :class:`AugmentationWarning` notes the imbalance.
    """
    rng = np.random.default_rng([cfg.rng_seed, epoch])
    edges = g.edge_array()
    m = edges.shape[0]

    if m == 0 or cfg.p_minus == 0.0:
        removed = frozenset()
    else:
        draws = rng.random(m)
        removed = frozenset(map(tuple, edges[draws < cfg.p_minus]))

    candidates = hoods.hop2_pairs()
    n_cand = candidates.shape[0]
    want = len(removed)
    if want == 0:
        added = frozenset()
    elif n_cand < want:
        warnings.warn(
            f"only {n_cand} hop-2 candidates for {want} dropped edges; adding all",
            AugmentationWarning,
        )
        added = frozenset(map(tuple, candidates))
    elif cfg.equalize:
        pick = rng.choice(n_cand, size=want, replace=False)
        added = frozenset(map(tuple, candidates[pick]))
    else:
        # independent per-candidate coin with matched expected count
        p_plus = min(want / n_cand, 1.0)
        draws = rng.random(n_cand)
        added = frozenset(map(tuple, candidates[draws < p_plus]))

    result = frozenset((g.edges - removed) | added)
    return AugmentedEdges(removed, added, result)
