"""Centroid update. The same closed form holds when distances are measured after a
linear projection, so this takes no projection argument."""
from __future__ import annotations

import numpy as np

from .core import as_matrix

EMPTY_MASS = 1e-12


def update_centroids(X, A, prev_C) -> np.ndarray:
    """Responsibility-weighted means; a cluster with mass below ``EMPTY_MASS``
    keeps its previous centroid."""
    X = as_matrix(X, "X")
    A = np.asarray(A, dtype=np.float64)
    prev_C = as_matrix(prev_C, "prev_C")
    n, d = X.shape
    if A.shape[0] != n or prev_C.shape != (A.shape[1], d):
        raise ValueError(
            f"shape mismatch: X {X.shape}, A {A.shape}, prev_C {prev_C.shape}"
        )
    mass = A.sum(axis=0)
    C = prev_C.copy()
    live = mass >= EMPTY_MASS
    C[live] = (A[:, live].T @ X) / mass[live, None]
    return C
