"""E-step solvers: masked hard/soft assignment, with and without the O-ratio constraint.

The ratio constraint fixes the total assignment mass on O prototypes to an
integer ``budget``. The hard solver contracts the O and non-O prototype groups
to one column each and selects the ``budget`` rows with the smallest penalized
distance ``d_o - d_others``. The soft solver alternates KL (Bregman)
projections onto {rows sum to one} and {O-block mass equals budget}.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import TagMap, check_mask

NONE = -1
KERNEL_FLOOR = 1e-300


class InfeasibleBudgetError(ValueError):
    """The ratio budget cannot be met given the rows forced by the mask."""

    def __init__(self, budget: int, forced_o: int, forced_other: int, n: int):
        self.budget = budget
        self.forced_o = forced_o
        self.forced_other = forced_other
        self.n = n
        super().__init__(
            f"ratio budget {budget} infeasible: {forced_o} rows can only be O and "
            f"{forced_other} rows can never be O (need {forced_o} <= budget <= {n - forced_other})"
        )


class BregmanConvergenceWarning(RuntimeWarning):
    pass


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class RatioBudget:
    r_o: float
    budget: int

    @classmethod
    def from_ratio(cls, n: int, r_o: float) -> "RatioBudget":
        if not 0.0 <= r_o <= 1.0:
            raise ValueError(f"ratio must lie in [0, 1], got {r_o}")
        return cls(float(r_o), round_half_away(n * r_o))


@dataclass(frozen=True)
class ContractedDistances:
    d_o: np.ndarray
    d_others: np.ndarray
    argmin_o: np.ndarray
    argmin_others: np.ndarray

    @property
    def forced_o(self) -> np.ndarray:
        """Rows with no allowed non-O prototype."""
        return self.argmin_others == NONE

    @property
    def forced_other(self) -> np.ndarray:
        """Rows with no allowed O prototype."""
        return self.argmin_o == NONE

    def penalized(self) -> np.ndarray:
        """``d_o - d_others``, with -inf for forced-O rows and +inf for forced-other rows."""
        out = np.empty_like(self.d_o)
        free = ~(self.forced_o | self.forced_other)
        out[free] = self.d_o[free] - self.d_others[free]
        out[self.forced_o] = -np.inf
        out[self.forced_other] = np.inf
        return out


def _budget_count(budget) -> int:
    b = budget.budget if isinstance(budget, RatioBudget) else budget
    if int(b) != b:
        raise ValueError(f"hard assignment needs an integral budget, got {b}")
    return int(b)


def _budget_mass(budget) -> float:
    """Target O mass; the soft projections accept any real value."""
    return float(budget.budget if isinstance(budget, RatioBudget) else budget)


def _masked_argmin(D: np.ndarray, Z: np.ndarray):
    masked = np.where(Z, D, np.inf)
    # np.argmin returns the first minimum: ties go to the lowest index
    idx = np.argmin(masked, axis=1)
    return masked[np.arange(D.shape[0]), idx], idx


def hard_assign(D, Z) -> np.ndarray:
    """One-hot assignment to the nearest allowed prototype (ties: lowest index)."""
    D = np.asarray(D, dtype=np.float64)
    Z = check_mask(Z, *D.shape)
    _, idx = _masked_argmin(D, Z)
    A = np.zeros_like(D)
    A[np.arange(D.shape[0]), idx] = 1.0
    return A


def soft_assign(D, Z) -> np.ndarray:
    """Masked softmax of ``-D`` along rows."""
    D = np.asarray(D, dtype=np.float64)
    Z = check_mask(Z, *D.shape)
    shift, _ = _masked_argmin(D, Z)
    E = np.where(Z, np.exp(-(D - shift[:, None])), 0.0)
    return E / E.sum(axis=1, keepdims=True)


def contract_o_groups(D, Z, phi: TagMap) -> ContractedDistances:
    D = np.asarray(D, dtype=np.float64)
    Z = check_mask(Z, *D.shape)
    if phi.k != D.shape[1]:
        raise ValueError(f"tag map has {phi.k} prototypes, D has {D.shape[1]} columns")
    o_cols = phi.o_columns()
    groups = []
    for cols in (np.flatnonzero(o_cols), np.flatnonzero(~o_cols)):
        if cols.size == 0:
            n = D.shape[0]
            groups.append((np.full(n, np.inf), np.full(n, NONE)))
            continue
        vals, local = _masked_argmin(D[:, cols], Z[:, cols])
        idx = np.where(np.isfinite(vals), cols[local], NONE)
        groups.append((vals, idx))
    (d_o, arg_o), (d_x, arg_x) = groups
    return ContractedDistances(d_o, d_x, arg_o, arg_x)


def hard_assign_ratio(D, Z, phi: TagMap, budget) -> np.ndarray:
    """Hard E-step under the ratio constraint: exactly ``budget`` rows go to O prototypes.

    Rows are ranked by penalized distance (ties: lowest row index) and the
    first ``budget`` take their nearest allowed O prototype; the rest take
    their nearest allowed non-O prototype.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    b = _budget_count(budget)
    cd = contract_o_groups(D, Z, phi)
    n_forced_o = int(cd.forced_o.sum())
    n_forced_other = int(cd.forced_other.sum())
    if not n_forced_o <= b <= n - n_forced_other:
        raise InfeasibleBudgetError(b, n_forced_o, n_forced_other, n)

    order = np.argsort(cd.penalized(), kind="stable")
    to_o = np.zeros(n, dtype=bool)
    to_o[order[:b]] = True

    cols = np.where(to_o, cd.argmin_o, cd.argmin_others)
    A = np.zeros_like(D)
    A[np.arange(n), cols] = 1.0
    return A


def bregman_project_simplex(A, Z) -> np.ndarray:
    """KL projection onto {A <= Z mask, rows sum to 1}: masked row renormalization."""
    A = np.asarray(A, dtype=np.float64)
    Z = check_mask(Z, *A.shape)
    M = np.where(Z, A, 0.0)
    mass = M.sum(axis=1, keepdims=True)
    if np.any(mass <= 0):
        bad = np.flatnonzero(mass[:, 0] <= 0)
        raise ValueError(f"rows with zero allowed mass: {bad[:10].tolist()}")
    return M / mass


def bregman_project_ratio(A, Z, phi: TagMap, budget) -> np.ndarray:
    """KL projection onto {A <= Z mask, O-block mass = budget}.

    Scales the whole O block by one factor; non-O entries are only masked.
    """
    A = np.asarray(A, dtype=np.float64)
    Z = check_mask(Z, *A.shape)
    b = _budget_mass(budget)
    o_cols = phi.o_columns()
    M = np.where(Z, A, 0.0)
    o_mass = M[:, o_cols].sum()
    if o_mass <= 0:
        if b == 0:
            return M
        raise ValueError(f"O block has zero mass, cannot scale it to budget {b}")
    M[:, o_cols] *= b / o_mass
    return M


@dataclass(frozen=True)
class BregmanResult:
    assignment: np.ndarray
    iterations: int
    row_sum_residual: float
    ratio_residual: float
    converged: bool


def _residuals(A: np.ndarray, o_cols: np.ndarray, b: float) -> tuple[float, float]:
    n = A.shape[0]
    row = float(np.max(np.abs(A.sum(axis=1) - 1.0))) if n else 0.0
    ratio = abs(float(A[:, o_cols].sum()) - b) / n if n else 0.0
    return row, ratio


def iterative_bregman_projection(
    A0, Z, phi: TagMap, budget, max_iters: int = 100, tol: float = 1e-9
) -> BregmanResult:
    """Alternate the two KL projections starting from a positive matrix ``A0``.

    One cycle is a simplex projection, a residual check, then a ratio
    projection. The loop stops right after a simplex projection, so returned
    rows always sum to one.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    Z = check_mask(Z, *np.shape(A0))
    b = _budget_mass(budget)
    o_cols = phi.o_columns()
    A = np.asarray(A0, dtype=np.float64)
    it = 0
    while True:
        it += 1
        A = bregman_project_simplex(A, Z)
        row_res, ratio_res = _residuals(A, o_cols, b)
        converged = row_res <= tol and ratio_res <= tol
        if converged or it >= max_iters:
            break
        A = bregman_project_ratio(A, Z, phi, b)
    if not converged:
        warnings.warn(
            f"Bregman projections did not converge in {max_iters} cycles "
            f"(row residual {row_res:.3e}, ratio residual {ratio_res:.3e})",
            BregmanConvergenceWarning,
            stacklevel=2,
        )
    return BregmanResult(A, it, row_res, ratio_res, converged)


def soft_kernel(D, Z) -> np.ndarray:
    """Row-shifted ``exp(-D)`` on allowed entries, floored so none is exactly zero."""
    D = np.asarray(D, dtype=np.float64)
    Z = check_mask(Z, *D.shape)
    shift, _ = _masked_argmin(D, Z)
    E = np.maximum(np.exp(-(D - shift[:, None])), KERNEL_FLOOR)
    return np.where(Z, E, 0.0)


def soft_assign_ratio(
    D, Z, phi: TagMap, budget, max_iters: int = 100, tol: float = 1e-9
) -> BregmanResult:
    """Soft E-step under the ratio constraint.

    Approximates the KL projection of ``exp(-D)`` onto the intersection of
    the mask, row-simplex and O-ratio constraints. Row shifts of the kernel
    do not change the solution because row sums are pinned to one.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    b = _budget_mass(budget)
    cd = contract_o_groups(D, Z, phi)
    n_forced_o = int(cd.forced_o.sum())
    n_forced_other = int(cd.forced_other.sum())
    if not n_forced_o <= b <= n - n_forced_other:
        raise InfeasibleBudgetError(b, n_forced_o, n_forced_other, n)
    return iterative_bregman_projection(soft_kernel(D, Z), Z, phi, b, max_iters, tol)
