"""Scatter matrices and discriminative subspace selection.

The subspace step minimizes ``tr(U^T S_w U)`` subject to ``U^T S_t U = I``.
Its minimizers are the generalized eigenvectors of the pencil ``(S_w, S_t)``
for the ``p`` smallest eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import as_matrix

IDENTITY_TOL = 1e-6
RANK_TOL = 1e-10
RIDGE_START = 1e-10
RIDGE_STOP = 1e-4


class ScatterIdentityError(ValueError):
    """``S_t != S_w + S_b``: the centroids are not the optimal ones for ``A``."""


class FactorizationError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ScatterTriple:
    s_t: np.ndarray
    s_w: np.ndarray
    s_b: np.ndarray
    mean: np.ndarray
    residual: float


@dataclass(frozen=True)
class Projection:
    u: np.ndarray
    eigenvalues: np.ndarray
    ridge: float = 0.0
    residual: float = 0.0

    @property
    def p(self) -> int:
        return self.u.shape[1]


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def compute_scatter(X, A, C) -> ScatterTriple:
    X = as_matrix(X, "X")
    A = np.asarray(A, dtype=np.float64)
    C = as_matrix(C, "C")
    n, d = X.shape
    if A.shape != (n, C.shape[0]) or C.shape[1] != d:
        raise ValueError(f"shape mismatch: X {X.shape}, A {A.shape}, C {C.shape}")
    mean = X.mean(axis=0)
    Xc = X - mean
    s_t = _sym(Xc.T @ Xc)
    s_w = np.zeros((d, d))
    for j in range(C.shape[0]):
        R = X - C[j]
        s_w += (R * A[:, j, None]).T @ R
    s_w = _sym(s_w)
    Cc = C - mean
    s_b = _sym((Cc * A.sum(axis=0)[:, None]).T @ Cc)

    residual = float(np.linalg.norm(s_t - s_w - s_b))
    scale = max(1.0, float(np.linalg.norm(s_t)))
    if residual > IDENTITY_TOL * scale:
        raise ScatterIdentityError(
            f"||S_t - S_w - S_b||_F = {residual:.3e} exceeds {IDENTITY_TOL:g} x {scale:.3e}; "
            "centroids are not the weighted means of A"
        )
    return ScatterTriple(s_t, s_w, s_b, mean, residual)


def _cholesky(S: np.ndarray) -> np.ndarray | None:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(L) ** 2
    if diag.min() <= S.shape[0] * np.finfo(float).eps * diag.max():
        return None
    return L


def factor_total_scatter(s_t, ridge: float = 0.0) -> tuple[np.ndarray, float]:
    """Cholesky factor of ``s_t + ridge * I``, escalating the ridge on failure.

    Escalation multiplies by 10 from ``1e-10 * tr(s_t) / d`` up to
    ``1e-4 * tr(s_t) / d``.
    """
    s_t = as_matrix(s_t, "s_t")
    d = s_t.shape[0]
    eye = np.eye(d)
    base = float(np.trace(s_t)) / d if d else 0.0
    ridges = [ridge]
    r = RIDGE_START * base
    while base > 0 and r <= RIDGE_STOP * base * (1 + 1e-12):
        if r > ridge:
            ridges.append(r)
        r *= 10
    for r in ridges:
        L = _cholesky(_sym(s_t) + r * eye)
        if L is not None:
            return L, r
    w = np.linalg.eigvalsh(_sym(s_t))
    raise FactorizationError(
        f"total scatter not factorizable up to ridge {ridges[-1]:.3e}: "
        f"eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}], trace {np.trace(s_t):.3e}"
    )


def _reduced(S: np.ndarray, L: np.ndarray) -> np.ndarray:
    """``L^{-1} S L^{-T}``, symmetrized."""
    left = solve_triangular(L, S, lower=True)
    return _sym(solve_triangular(L, left.T, lower=True))


def _canonical_signs(U: np.ndarray) -> np.ndarray:
    rows = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[rows, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    return U * signs


def solve_projection(s_w, s_t, p: int, ridge: float = 0.0) -> Projection:
    """Generalized eigenvectors of ``(s_w, s_t)`` for the ``p`` smallest eigenvalues.

    Reduces to a standard symmetric problem through the Cholesky factor of
    ``s_t`` (plus ridge, if needed), then back-transforms so that
    ``U^T (s_t + ridge I) U = I``. Each column's largest-magnitude entry is
    made positive.
    """
    s_w = as_matrix(s_w, "s_w")
    s_t = as_matrix(s_t, "s_t")
    d = s_t.shape[0]
    if s_w.shape != (d, d) or s_t.shape != (d, d):
        raise ValueError(f"expected square {d}x{d} matrices, got {s_w.shape}, {s_t.shape}")
    if not 0 <= p <= d:
        raise ValueError(f"p must lie in [0, {d}], got {p}")
    L, used = factor_total_scatter(s_t, ridge)
    w, V = np.linalg.eigh(_reduced(s_w, L))
    w, V = w[:p], V[:, :p]
    U = _canonical_signs(solve_triangular(L.T, V, lower=False))

    st_r = s_t + used * np.eye(d)
    scale = max(float(np.linalg.norm(s_w)), np.finfo(float).tiny)
    residual = float(np.linalg.norm(s_w @ U - st_r @ U * w)) / scale
    return Projection(U, w, used, residual)


def generalized_eigenvalues(S, s_t, ridge: float = 0.0) -> np.ndarray:
    """All eigenvalues of the pencil ``(S, s_t + ridge I)``, ascending."""
    L, _ = factor_total_scatter(s_t, ridge)
    return np.linalg.eigvalsh(_reduced(as_matrix(S, "S"), L))


def discriminative_rank(s_b, s_t, ridge: float = 0.0, tol: float = RANK_TOL) -> int:
    """Number of eigenvalues of ``(s_b, s_t)`` above ``tol``."""
    return int(np.sum(generalized_eigenvalues(s_b, s_t, ridge) > tol))


def projection_dim(k: int, d: int) -> int:
    if k < 2:
        raise ValueError(f"need at least 2 prototypes for a discriminative subspace, got {k}")
    return min(d, k - 1)
