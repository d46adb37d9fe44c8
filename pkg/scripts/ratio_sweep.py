"""Token accuracy and mention F1 as the assumed O ratio moves away from the true one.

    python scripts/ratio_sweep.py --seeds 0 1 2 3 4 --ratios 0.5 0.6 0.7 0.8 0.9
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

import numpy as np

from wskmeans.pipeline import FitConfig, as_sequences, fit, mention_f1, predict, token_accuracy
from wskmeans.synth import SynthConfig, gen_synth

TAGS = ["O", "I-PER", "I-LOC", "I-ORG", "I-MISC"]


@dataclass
class SweepConfig:
    seeds: list[int] = field(default_factory=lambda: list(range(5)))
    ratios: list[float | None] = field(default_factory=lambda: [None, 0.5, 0.6, 0.7, 0.8, 0.9])
    dim: int = 8
    separation: float = 6.0
    o_fraction: float = 0.7
    label_fraction: float = 0.02
    o_prototypes: int = 10
    use_subspace: bool = True


def corpus(cfg: SweepConfig, seed: int):
    means = {t: [0.0] * cfg.dim for t in TAGS}
    for i, t in enumerate(TAGS[1:]):
        means[t][i % cfg.dim] = cfg.separation
    return gen_synth(SynthConfig(means, seed=seed, o_fraction=cfg.o_fraction,
                                 label_fraction=cfg.label_fraction))


def sweep(cfg: SweepConfig) -> dict:
    table = {r: [] for r in cfg.ratios}
    for seed in cfg.seeds:
        data = corpus(cfg, seed)
        phi = data.tag_map(cfg.o_prototypes)
        for r in cfg.ratios:
            fc = FitConfig(ratio=r, o_prototypes=cfg.o_prototypes,
                           use_subspace=cfg.use_subspace, strict_init=False)
            pred = predict(data.X, fit(data.X, data.labels, phi, fc))
            _, _, f1 = mention_f1(as_sequences(data.gold, data.lengths),
                                  as_sequences(pred, data.lengths))
            table[r].append((token_accuracy(data.gold, pred), f1))
    return table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+")
    ap.add_argument("--ratios", type=float, nargs="+")
    ap.add_argument("--no-subspace", action="store_true")
    args = ap.parse_args()
    cfg = SweepConfig(use_subspace=not args.no_subspace)
    if args.seeds:
        cfg.seeds = args.seeds
    if args.ratios:
        cfg.ratios = [None] + args.ratios

    print(f"true O fraction {cfg.o_fraction}, {len(cfg.seeds)} seeds")
    print(f"{'r_O':>6} {'acc mean':>9} {'acc min':>8} {'F1 mean':>8} {'F1 min':>7}")
    for r, rows in sweep(cfg).items():
        acc, f1 = np.array(rows).T
        label = "none" if r is None else f"{r:.2f}"
        print(f"{label:>6} {acc.mean():9.4f} {acc.min():8.4f} {f1.mean():8.4f} {f1.min():7.4f}")


if __name__ == "__main__":
    main()
