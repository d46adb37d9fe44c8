"""Deterministic prototype initialization.

Tags owning a single prototype start at the mean of their labeled rows. Tags
owning several prototypes run greedy Ward agglomeration over their labeled
rows and take the centroids of the resulting clusters. Unlabeled rows do not
take part.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import TagMap, as_matrix


class InsufficientSupportError(ValueError):
    def __init__(self, tag: str, have: int, need: int):
        self.tag, self.have, self.need = tag, have, need
        super().__init__(
            f"tag {tag!r} has {have} labeled rows but owns {need} prototypes"
        )


@dataclass(frozen=True)
class Merge:
    cluster_a: int
    cluster_b: int
    ward_cost: float
    new_size: int


@dataclass
class Dendrogram:
    """Merge history. Leaves are ``0..leaf_count-1``; merge ``t`` creates id ``leaf_count + t``."""

    leaf_count: int
    merges: list[Merge] = field(default_factory=list)


def ward_cost(size_a: int, mean_a, size_b: int, mean_b) -> float:
    diff = np.asarray(mean_a) - np.asarray(mean_b)
    return size_a * size_b / (size_a + size_b) * float(diff @ diff)


def ward_dendrogram(P, target: int = 1) -> tuple[Dendrogram, list[list[int]]]:
    """Agglomerate rows of ``P`` down to ``target`` clusters.

    Every step recomputes all pairwise Ward costs; the cheapest pair merges,
    ties going to the lexicographically smallest (min member of a, min member
    of b). Returns the dendrogram and the surviving member lists, ordered by
    their smallest member.
    """
    P = as_matrix(P, "P")
    m = P.shape[0]
    if not 1 <= target <= m:
        raise ValueError(f"target must lie in [1, {m}], got {target}")
    # (id, members) kept sorted by smallest member
    clusters = [(i, [i]) for i in range(m)]
    means = {i: P[i].copy() for i in range(m)}
    tree = Dendrogram(m)
    while len(clusters) > target:
        best = None
        for a in range(len(clusters)):
            ida, mem_a = clusters[a]
            for b in range(a + 1, len(clusters)):
                idb, mem_b = clusters[b]
                cost = ward_cost(len(mem_a), means[ida], len(mem_b), means[idb])
                if best is None or cost < best[0]:
                    best = (cost, a, b)
        cost, a, b = best
        (ida, mem_a), (idb, mem_b) = clusters[a], clusters[b]
        new_id = m + len(tree.merges)
        members = sorted(mem_a + mem_b)
        means[new_id] = P[members].mean(axis=0)
        tree.merges.append(Merge(ida, idb, cost, len(members)))
        clusters[a] = (new_id, members)
        del clusters[b]
    return tree, [mem for _, mem in clusters]


def ward_clusters(P, target: int) -> tuple[np.ndarray, np.ndarray]:
    """Centroids (``target x d``) and per-row cluster labels after Ward agglomeration."""
    P = as_matrix(P, "P")
    _, groups = ward_dendrogram(P, target)
    labels = np.empty(P.shape[0], dtype=np.int64)
    centroids = np.empty((len(groups), P.shape[1]))
    for c, members in enumerate(groups):
        labels[members] = c
        centroids[c] = P[members].mean(axis=0)
    return centroids, labels


def init_prototypes(
    X, labels: Sequence[int], phi: TagMap, strict: bool = True
) -> np.ndarray:
    """Initial ``k x d`` centroids from the labeled rows of ``X``.

    With ``strict=False`` a tag with fewer labeled rows than prototypes (but
    at least one) is clustered into as many groups as it has rows, and its
    remaining prototypes repeat those centroids in order. A tag with no
    labeled row is always an error.
    """
    X = as_matrix(X, "X")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (X.shape[0],):
        raise ValueError(f"expected {X.shape[0]} labels, got {labels.shape}")
    C = np.empty((phi.k, X.shape[1]))
    for t, name in enumerate(phi.tags):
        protos = phi.prototypes_of(t)
        rows = X[labels == t]
        m, need = rows.shape[0], len(protos)
        if m == 0 or (strict and m < need):
            raise InsufficientSupportError(name, m, need)
        if need == 1:
            C[protos[0]] = rows.mean(axis=0)
            continue
        centroids, _ = ward_clusters(rows, min(m, need))
        for i, j in enumerate(protos):
            C[j] = centroids[i % len(centroids)]
    return C
