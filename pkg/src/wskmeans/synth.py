"""Seeded synthetic corpora standing in for encoder embeddings.

Randomness comes from SplitMix64 (Steele, Lea and Flood 2014), a 64-bit
counter-based generator implemented here on Python integers so that a seed
gives the same stream on every platform:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)                      (all arithmetic mod 2**64)

Uniform doubles take the top 53 bits: ``(z >> 11) * 2**-53``. Bounded
integers use rejection sampling on the low bits. Standard normals use the
Marsaglia polar method, which only needs ``log`` and ``sqrt``.

Generation order, all from one stream:

1. Row counts: ``n = n_per_tag * len(tags)``; O gets ``round(o_fraction * n)``
   rows (half away from zero), the rest are split evenly over the other tags,
   lower tag indices taking the remainder.
2. Gold tags are laid out in tag order and shuffled (Fisher-Yates, last
   index first).
3. Features, row by row and coordinate by coordinate:
   ``tag_means[tag] + noise_std * normal()``.
4. ``round(label_fraction * n)`` rows keep their label. When that count
   covers every tag, one row per tag (in tag order, uniform among its rows)
   is taken first; the rest come from a partial Fisher-Yates shuffle of the
   remaining rows. Other rows are unlabeled.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import OUTSIDE, UNLABELED, TagMap
from .estep import round_half_away

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64
        self._spare: float | None = None

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        self._spare = v * f
        return u * f


@dataclass
class SynthConfig:
    tag_means: dict[str, list[float]]
    seed: int = 0
    n_per_tag: int = 100
    noise_std: float = 1.0
    o_fraction: float = 0.7
    label_fraction: float = 0.02
    sentence_length: int = 20
    dim: int | None = None

    def __post_init__(self):
        tags = list(self.tag_means)
        if not tags or tags[0] != OUTSIDE:
            raise ValueError(f"tag_means must list {OUTSIDE!r} first")
        dims = {len(v) for v in self.tag_means.values()}
        if len(dims) != 1:
            raise ValueError(f"tag means have differing dimensions {sorted(dims)}")
        dim = dims.pop()
        if self.dim is not None and self.dim != dim:
            raise ValueError(f"dim {self.dim} does not match tag means of dimension {dim}")
        self.dim = dim
        if not (0 <= self.o_fraction <= 1 and 0 <= self.label_fraction <= 1):
            raise ValueError("fractions must lie in [0, 1]")
        if not self.noise_std > 0:
            raise ValueError("noise_std must be positive")
        if self.n_per_tag < 1 or self.sentence_length < 0:
            raise ValueError("n_per_tag must be >= 1 and sentence_length >= 0")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def tags(self) -> list[str]:
        return list(self.tag_means)

    @classmethod
    def from_json(cls, path) -> "SynthConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(**raw)


@dataclass
class SynthData:
    X: np.ndarray
    labels: np.ndarray
    gold: np.ndarray
    tags: list[str]
    lengths: list[int]

    def tag_map(self, o_prototypes: int = 10) -> TagMap:
        return TagMap.with_outside_prototypes(self.tags, o_prototypes)


def _tag_counts(cfg: SynthConfig) -> list[int]:
    n = cfg.n_per_tag * len(cfg.tags)
    n_o = round_half_away(cfg.o_fraction * n)
    others = len(cfg.tags) - 1
    if others == 0:
        return [n]
    base, extra = divmod(n - n_o, others)
    return [n_o] + [base + (t < extra) for t in range(others)]


def gen_synth(cfg: SynthConfig) -> SynthData:
    rng = SplitMix64(cfg.seed)
    counts = _tag_counts(cfg)
    n = sum(counts)

    gold = [t for t, c in enumerate(counts) for _ in range(c)]
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        gold[i], gold[j] = gold[j], gold[i]

    means = [cfg.tag_means[t] for t in cfg.tags]
    X = np.empty((n, cfg.dim))
    for i in range(n):
        mu = means[gold[i]]
        for m in range(cfg.dim):
            X[i, m] = mu[m] + cfg.noise_std * rng.normal()

    n_labeled = round_half_away(cfg.label_fraction * n)
    present = [t for t, c in enumerate(counts) if c > 0]
    chosen: list[int] = []
    if n_labeled >= len(present):
        for t in present:
            rows = [i for i in range(n) if gold[i] == t]
            chosen.append(rows[rng.below(len(rows))])
    taken = set(chosen)
    pool = [i for i in range(n) if i not in taken]
    for r in range(n_labeled - len(chosen)):
        j = r + rng.below(len(pool) - r)
        pool[r], pool[j] = pool[j], pool[r]
        chosen.append(pool[r])

    gold_arr = np.asarray(gold, dtype=np.int64)
    labels = np.full(n, UNLABELED, dtype=np.int64)
    labels[chosen] = gold_arr[chosen]

    L = cfg.sentence_length or n
    lengths = [min(L, n - s) for s in range(0, n, L)]
    return SynthData(X, labels, gold_arr, cfg.tags, lengths)
