"""Independent reference computations. Nothing here calls the code under test."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import brentq


def brute_force_ratio_optimum(D, Z, o_cols, budget):
    """Minimum of <A, D> over all masked one-hot A with exactly ``budget`` O rows.

    Enumerates every masked assignment (product over rows of allowed columns),
    screens by a vectorised cost, and resolves near-minimal candidates with
    an exactly rounded sum. Returns (cost, assignment) or None if infeasible.
    """
    n, k = D.shape
    allowed = [np.flatnonzero(Z[i]) for i in range(n)]
    combos = np.array(list(itertools.product(*allowed)), dtype=np.int64).reshape(-1, n)
    rows = np.arange(n)
    cost = np.zeros(len(combos))
    n_o = np.zeros(len(combos), dtype=np.int64)
    for i in range(n):
        cost += D[i, combos[:, i]]
        n_o += o_cols[combos[:, i]]
    ok = n_o == budget
    if not ok.any():
        return None
    best = cost[ok].min()
    near = np.flatnonzero(ok & (cost <= best + 1e-9 * max(1.0, abs(best))))
    exact = [(math.fsum(D[rows, combos[c]]), c) for c in near]
    value, c = min(exact)
    return value, combos[c]


def one_hot_cost(A, D):
    cols = np.argmax(A, axis=1)
    return math.fsum(D[np.arange(len(D)), cols])


def exact_soft_ratio(D, Z, o_cols, budget):
    """KL projection of exp(-D) onto mask, row-simplex and O-mass constraints.

    The solution has the form A_ij ~ q_ij * s^[j in O] per row; the scalar s
    is found by root bracketing on log s.
    """
    q = np.where(Z, np.exp(-(D - np.where(Z, D, np.inf).min(1, keepdims=True))), 0.0)
    qo = q[:, o_cols].sum(1)
    qx = q[:, ~o_cols].sum(1)

    def rows(logs):
        s = math.exp(logs)
        po = np.where(qo > 0, s * qo / (s * qo + qx), 0.0)
        return po

    f = lambda t: rows(t).sum() - budget  # noqa: E731
    lo, hi = -50.0, 50.0
    while f(lo) > 0:
        lo *= 2
    while f(hi) < 0:
        hi *= 2
    t = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    s = math.exp(t)
    scaled = q.copy()
    scaled[:, o_cols] *= s
    return scaled / scaled.sum(1, keepdims=True)


def kl(A, q):
    """Generalized KL divergence sum A log(A/q) - A + q, with 0 log 0 = 0."""
    A = np.asarray(A)
    pos = A > 0
    return float(np.sum(A[pos] * np.log(A[pos] / q[pos])) - A.sum() + q.sum())


def sse(P):
    """Within-cluster sum of squares around the mean."""
    P = np.asarray(P)
    return float(((P - P.mean(0)) ** 2).sum())


def ward_increase(P, a, b):
    """Ward merge cost as the increase in total within-cluster sum of squares."""
    return sse(P[a + b]) - sse(P[a]) - sse(P[b])


def random_spd(rng, d, n=None):
    n = n or 3 * d
    G = rng.normal(size=(n, d))
    return G.T @ G


def s_orthonormal(rng, S, d, p):
    """Random d x p V with V^T S V = I.

    Cholesky orthonormalization is applied twice; one pass leaves errors of
    order cond(S) * eps, which is enough to fake a lower trace.
    """
    V = rng.normal(size=(d, p))
    for _ in range(2):
        R = np.linalg.cholesky(V.T @ S @ V)
        V = np.linalg.solve(R, V.T).T
    return V


def brute_force_ratio_table(D, Z, o_cols):
    """{budget: minimal exactly-summed cost} over all masked one-hot assignments."""
    n, _ = D.shape
    allowed = [np.flatnonzero(Z[i]) for i in range(n)]
    combos = np.array(list(itertools.product(*allowed)), dtype=np.int64).reshape(-1, n)
    rows = np.arange(n)
    cost = D[rows, combos].sum(axis=1)
    n_o = o_cols[combos].sum(axis=1)
    table = {}
    for b in np.unique(n_o):
        sel = n_o == b
        best = cost[sel].min()
        near = np.flatnonzero(sel & (cost <= best + 1e-9 * max(1.0, abs(best))))
        table[int(b)] = min(math.fsum(D[rows, combos[c]]) for c in near)
    return table


def exact_ward_choice(P, groups):
    """Pair of groups with the smallest SSE increase, in exact rational arithmetic.

    ``groups`` are member lists ordered by smallest member; ties go to the
    lexicographically smallest (first member of a, first member of b).
    Returns (index_a, index_b, cost as Fraction).
    """
    from fractions import Fraction

    Pf = [[Fraction(float(v)) for v in row] for row in P]

    def sse_exact(members):
        dims = len(Pf[0])
        mean = [sum(Pf[i][m] for i in members) / len(members) for m in range(dims)]
        return sum((Pf[i][m] - mean[m]) ** 2 for i in members for m in range(dims))

    base = {tuple(g): sse_exact(g) for g in groups}
    best = None
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            cost = sse_exact(groups[a] + groups[b]) - base[tuple(groups[a])] - base[tuple(groups[b])]
            key = (cost, groups[a][0], groups[b][0])
            if best is None or key < best[0]:
                best = (key, a, b)
    (cost, _, _), a, b = best
    return a, b, cost
