"""How many projection cycles the soft ratio E-step needs, and why.

Near the fixed point each cycle shrinks the O-mass error by roughly
``sum(p_i^2) / sum(p_i)``, where ``p_i`` is row i's O probability at the
solution. When most O mass sits in rows that are almost surely O, that
factor approaches one and convergence stalls.

    python scripts/bregman_convergence.py --instances 100 --max-iters 100
"""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import instances  # noqa: E402
from wskmeans.estep import BregmanConvergenceWarning, soft_assign_ratio  # noqa: E402


@dataclass
class StudyConfig:
    instances: int = 100
    max_iters: int = 100
    tol: float = 1e-9
    long_iters: int = 100_000


def study(cfg: StudyConfig):
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BregmanConvergenceWarning)
        for seed in range(cfg.instances):
            D, Z, phi, b = instances.soft_ratio_instance(seed)
            short = soft_assign_ratio(D, Z, phi, b, cfg.max_iters, cfg.tol)
            full = soft_assign_ratio(D, Z, phi, b, cfg.long_iters, cfg.tol)
            p = full.assignment[:, phi.o_columns()].sum(1)
            factor = float((p**2).sum() / p.sum()) if p.sum() > 0 else 0.0
            rows.append((seed, D.shape[0], phi.k, b, short.converged, full.iterations,
                         short.ratio_residual, factor))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--max-iters", type=int, default=100)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()
    cfg = StudyConfig(args.instances, args.max_iters, args.tol)
    rows = study(cfg)

    ok = [r for r in rows if r[4]]
    print(f"{len(ok)}/{len(rows)} instances converge within {cfg.max_iters} cycles (tol {cfg.tol:g})")
    factor = np.array([r[7] for r in rows])
    needed = np.array([r[5] for r in rows])
    for lo, hi in [(0, 0.5), (0.5, 0.8), (0.8, 0.9), (0.9, 0.95), (0.95, 1.0)]:
        sel = (factor >= lo) & (factor < hi)
        if sel.any():
            print(f"contraction factor in [{lo:.2f}, {hi:.2f}): {sel.sum():3d} instances, "
                  f"median cycles needed {int(np.median(needed[sel]))}, max {needed[sel].max()}")
    print("\nslowest instances (seed, n, k, budget, cycles needed, residual after short run, factor):")
    for r in sorted(rows, key=lambda r: -r[5])[:5]:
        print(f"  {r[0]:3d} n={r[1]:2d} k={r[2]:2d} b={r[3]:2d} cycles={r[5]:6d} "
              f"residual={r[6]:.1e} factor={r[7]:.4f}")


if __name__ == "__main__":
    main()
