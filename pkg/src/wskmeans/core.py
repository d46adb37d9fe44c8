"""Shared containers and primitives: tag maps, supervision masks, distances, objective.

Matrices are plain ``numpy.ndarray`` of dtype float64 in C (row-major) order.
Supervision masks are boolean arrays of shape (n, k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

OUTSIDE = "O"
UNLABELED = -1

# entries below this are exact zeros in the entropy term
ENTROPY_FLOOR = 1e-300


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a C-contiguous 2-D float64 array, rejecting non-finite entries."""
    arr = np.ascontiguousarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class TagMap:
    """Prototype-to-tag map.

    ``tags[0]`` is always the outside tag ``"O"``; ``proto_tag[j]`` is the tag
    index owned by prototype ``j``.
    """

    tags: tuple[str, ...]
    proto_tag: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "proto_tag", tuple(int(t) for t in self.proto_tag))
        if not self.tags or self.tags[0] != OUTSIDE:
            raise ValueError(f"tag 0 must be {OUTSIDE!r}, got {self.tags[:1]}")
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("duplicate tag names")
        for t in self.proto_tag:
            if not 0 <= t < len(self.tags):
                raise ValueError(f"prototype tag index {t} out of range")
        missing = set(range(len(self.tags))) - set(self.proto_tag)
        if missing:
            names = ", ".join(self.tags[t] for t in sorted(missing))
            raise ValueError(f"tags without prototypes: {names}")

    @classmethod
    def from_counts(cls, tags: Sequence[str], counts: Sequence[int]) -> "TagMap":
        """Contiguous prototype blocks: tag ``t`` owns ``counts[t]`` consecutive indices."""
        if len(tags) != len(counts):
            raise ValueError("tags and counts differ in length")
        proto_tag = []
        for t, c in enumerate(counts):
            if c < 1:
                raise ValueError(f"tag {tags[t]!r} needs at least one prototype")
            proto_tag.extend([t] * int(c))
        return cls(tuple(tags), tuple(proto_tag))

    @classmethod
    def with_outside_prototypes(cls, tags: Sequence[str], n_outside: int) -> "TagMap":
        """``n_outside`` prototypes for O, one for every other tag."""
        return cls.from_counts(tags, [n_outside] + [1] * (len(tags) - 1))

    @property
    def k(self) -> int:
        return len(self.proto_tag)

    @property
    def o_prototypes(self) -> tuple[int, ...]:
        return self.prototypes_of(0)

    def prototypes_of(self, tag: int) -> tuple[int, ...]:
        return tuple(j for j, t in enumerate(self.proto_tag) if t == tag)

    def o_columns(self) -> np.ndarray:
        """Boolean vector of length k marking O prototypes."""
        return np.asarray(self.proto_tag) == 0

    def index(self, name: str) -> int:
        try:
            return self.tags.index(name)
        except ValueError:
            raise KeyError(name) from None


def check_mask(Z, n: int | None = None, k: int | None = None) -> np.ndarray:
    """Validate a supervision mask and return it as a boolean array."""
    Z = np.asarray(Z)
    if Z.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {Z.shape}")
    if Z.dtype != bool:
        if not np.all((Z == 0) | (Z == 1)):
            raise ValueError("mask entries must be 0 or 1")
        Z = Z.astype(bool)
    if n is not None and Z.shape[0] != n or k is not None and Z.shape[1] != k:
        raise ValueError(f"mask shape {Z.shape} does not match ({n}, {k})")
    empty = np.flatnonzero(~Z.any(axis=1))
    if empty.size:
        raise ValueError(f"mask rows with no allowed prototype: {empty[:10].tolist()}")
    return Z


def pairwise_sq_dist(Xp, Cp) -> np.ndarray:
    """Squared Euclidean distances ``D[i, j] = ||Xp[i] - Cp[j]||^2``.

    Evaluated as an explicit sum of squared differences rather than the
    norm expansion, so duplicates give exact zeros.
    """
    Xp = as_matrix(Xp, "Xp")
    Cp = as_matrix(Cp, "Cp")
    if Xp.shape[1] != Cp.shape[1]:
        raise ValueError(f"dimension mismatch: {Xp.shape[1]} vs {Cp.shape[1]}")
    diff = Xp[:, None, :] - Cp[None, :, :]
    return np.einsum("ijm,ijm->ij", diff, diff)


def clustering_objective(A, D, entropy: bool = False) -> float:
    """``<A, D>`` plus, if ``entropy``, the negative Shannon entropy ``<A, log A> - <A, 1>``.

    Sums are exactly rounded (``math.fsum``), so the value does not depend on
    summation order.
    """
    A = np.asarray(A, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if A.shape != D.shape:
        raise ValueError(f"shape mismatch: A {A.shape} vs D {D.shape}")
    if np.any(A < 0):
        raise ValueError("assignment matrix has negative entries")
    # skip zero-weight terms so +inf sentinels in D cannot produce nan
    live = A > 0
    value = math.fsum((A[live] * D[live]).ravel())
    if entropy:
        pos = A[A >= ENTROPY_FLOOR]
        value += math.fsum((pos * np.log(pos)).ravel()) - math.fsum(A.ravel())
    return value
