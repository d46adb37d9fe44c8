"""Alternate convex search over assignments, centroids and projection, plus
prediction, linear-model export and mention-level scoring."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import estep
from .core import UNLABELED, TagMap, as_matrix, clustering_objective, pairwise_sq_dist
from .initialization import init_prototypes
from .mstep import update_centroids
from .subspace import (
    Projection,
    compute_scatter,
    discriminative_rank,
    factor_total_scatter,
    projection_dim,
    solve_projection,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitConfig:
    variant: Literal["hard", "soft"] = "hard"
    ratio: float | None = None
    o_prototypes: int = 10
    acs_iters: int = 10
    use_subspace: bool = True
    bregman_iters: int = 100
    bregman_tol: float = 1e-9
    ridge: float = 0.0
    strict_init: bool = True

    def __post_init__(self):
        if self.variant not in ("hard", "soft"):
            raise ValueError(f"variant must be 'hard' or 'soft', got {self.variant!r}")
        if self.ratio is not None and not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must lie in [0, 1], got {self.ratio}")
        if self.o_prototypes < 1 or self.bregman_iters < 1:
            raise ValueError("o_prototypes and bregman_iters must be >= 1")
        if self.acs_iters < 0:
            raise ValueError("acs_iters must be >= 0")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    row_sum_residual: float
    ratio_residual: float


@dataclass
class Model:
    centroids: np.ndarray
    tag_map: TagMap
    projection: Projection | None = None
    trace: list[TraceRow] = field(default_factory=list)
    assignment: np.ndarray | None = None

    @property
    def u(self) -> np.ndarray:
        """Projection matrix, or the identity when no subspace was learned."""
        if self.projection is None:
            return np.eye(self.centroids.shape[1])
        return self.projection.u

    def linear_model(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights (``k x d``, applied to raw inputs) and bias reproducing ``predict``."""
        U = self.u
        W, bias = to_linear_model(self.centroids @ U)
        return W @ U.T, bias


@dataclass
class TaggedSequence:
    tokens: list[str]
    tags: list[int]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags differ in length")


def build_supervision_mask(labels: Sequence[int], phi: TagMap) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    proto_tag = np.asarray(phi.proto_tag)
    bad = (labels != UNLABELED) & ((labels < 0) | (labels >= len(phi.tags)))
    if np.any(bad):
        raise ValueError(f"invalid label indices at rows {np.flatnonzero(bad)[:10].tolist()}")
    Z = labels[:, None] == proto_tag[None, :]
    Z[labels == UNLABELED] = True
    return Z


def _e_step(D, Z, phi, budget, cfg: FitConfig):
    """Returns (A, row residual, ratio residual)."""
    if cfg.variant == "hard":
        if budget is None:
            return estep.hard_assign(D, Z), 0.0, 0.0
        A = estep.hard_assign_ratio(D, Z, phi, budget)
        return A, 0.0, abs(A[:, phi.o_columns()].sum() - budget.budget) / len(A)
    if budget is None:
        A = estep.soft_assign(D, Z)
        return A, float(np.max(np.abs(A.sum(axis=1) - 1.0))), 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", estep.BregmanConvergenceWarning)
        res = estep.soft_assign_ratio(D, Z, phi, budget, cfg.bregman_iters, cfg.bregman_tol)
    if not res.converged:
        log.warning(
            "E-step: Bregman loop stopped after %d cycles (ratio residual %.3e)",
            res.iterations, res.ratio_residual,
        )
    return res.assignment, res.row_sum_residual, res.ratio_residual


def fit(X, labels: Sequence[int], phi: TagMap, cfg: FitConfig = FitConfig()) -> Model:
    """Weakly supervised clustering: E-step, M-step, then subspace step, ``cfg.acs_iters`` times.

    Distances in the E-step are measured after projection; centroids live in
    the original space. No random numbers are drawn anywhere.
    """
    X = as_matrix(X, "X")
    n, d = X.shape
    labels = np.asarray(labels, dtype=np.int64)
    Z = build_supervision_mask(labels, phi)

    budget = None
    if cfg.ratio is not None:
        budget = estep.RatioBudget.from_ratio(n, cfg.ratio)
        cd = estep.contract_o_groups(np.zeros((n, phi.k)), Z, phi)
        forced_o, forced_other = int(cd.forced_o.sum()), int(cd.forced_other.sum())
        if not forced_o <= budget.budget <= n - forced_other:
            raise estep.InfeasibleBudgetError(budget.budget, forced_o, forced_other, n)

    C = init_prototypes(X, labels, phi, strict=cfg.strict_init)
    projection = None
    s_t = None
    p = ridge = 0
    if cfg.use_subspace:
        p = projection_dim(phi.k, d)
        projection = Projection(np.eye(d)[:, :p], np.zeros(p))
        s_t = compute_scatter(X, np.ones((n, 1)), X.mean(axis=0, keepdims=True)).s_t
        _, ridge = factor_total_scatter(s_t, cfg.ridge)

    model = Model(C, phi, projection)
    entropy = cfg.variant == "soft"
    for it in range(1, cfg.acs_iters + 1):
        U = model.u
        D = pairwise_sq_dist(X @ U, C @ U)
        A, row_res, ratio_res = _e_step(D, Z, phi, budget, cfg)
        C = update_centroids(X, A, C)
        if cfg.use_subspace:
            sc = compute_scatter(X, A, C)
            p_eff = max(1, min(p, discriminative_rank(sc.s_b, s_t, ridge)))
            projection = solve_projection(sc.s_w, s_t, p_eff, ridge)
            U = projection.u
        obj = clustering_objective(A, pairwise_sq_dist(X @ U, C @ U), entropy=entropy)
        model.trace.append(TraceRow(it, float(obj), float(row_res), float(ratio_res)))
        model.centroids, model.projection, model.assignment = C, projection, A
        log.debug("round %d: objective %.12g", it, obj)
    return model


def predict(Xq, model: Model) -> np.ndarray:
    """Tag index of the nearest prototype in the projected space (ties: lowest prototype)."""
    Xq = as_matrix(Xq, "Xq")
    U = model.u
    if Xq.shape[1] != U.shape[0]:
        raise ValueError(f"query dimension {Xq.shape[1]} != model dimension {U.shape[0]}")
    D = pairwise_sq_dist(Xq @ U, model.centroids @ U)
    return np.asarray(model.tag_map.proto_tag)[np.argmin(D, axis=1)]


def to_linear_model(C) -> tuple[np.ndarray, np.ndarray]:
    """``argmax_j (C x + b)_j`` equals ``argmin_j ||x - C_j||^2`` with ``b_j = -||C_j||^2 / 2``."""
    C = as_matrix(C, "C")
    return C.copy(), -0.5 * np.einsum("ij,ij->i", C, C)


def mentions(tags: Sequence[int], outside: int = 0) -> list[tuple[int, int, int]]:
    """Maximal runs of one non-O tag as (start, end inclusive, tag)."""
    spans = []
    start = None
    for i, t in enumerate(tags):
        if start is not None and t != tags[start]:
            spans.append((start, i - 1, tags[start]))
            start = None
        if start is None and t != outside:
            start = i
    if start is not None:
        spans.append((start, len(tags) - 1, tags[start]))
    return spans


def mention_f1(
    gold: Sequence[TaggedSequence], pred: Sequence[TaggedSequence]
) -> tuple[float, float, float]:
    """Exact-match mention precision, recall and F1 under the IO scheme."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sequences vs {len(pred)} predicted")
    g_set, p_set = set(), set()
    for s, (g, p) in enumerate(zip(gold, pred)):
        if len(g.tags) != len(p.tags):
            raise ValueError(f"sequence {s}: {len(g.tags)} gold tags vs {len(p.tags)} predicted")
        g_set.update((s, *m) for m in mentions(g.tags))
        p_set.update((s, *m) for m in mentions(p.tags))
    if not g_set and not p_set:
        return 1.0, 1.0, 1.0
    hits = len(g_set & p_set)
    precision = hits / len(p_set) if p_set else 0.0
    recall = hits / len(g_set) if g_set else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def token_accuracy(gold: Sequence[int], pred: Sequence[int]) -> float:
    gold, pred = np.asarray(gold), np.asarray(pred)
    if gold.shape != pred.shape:
        raise ValueError("shape mismatch")
    return float(np.mean(gold == pred)) if gold.size else 1.0


def as_sequences(tags: Sequence[int], lengths: Sequence[int]) -> list[TaggedSequence]:
    """Split a flat tag list into sequences of the given lengths (tokens are positions)."""
    if sum(lengths) != len(tags):
        raise ValueError(f"lengths sum to {sum(lengths)}, have {len(tags)} tags")
    out, pos = [], 0
    for n in lengths:
        chunk = [int(t) for t in tags[pos:pos + n]]
        out.append(TaggedSequence([str(i) for i in range(pos, pos + n)], chunk))
        pos += n
    return out
