"""Merge decision rules: fixed threshold, randomized hazard rule, delayed rule."""
from __future__ import annotations

import math
import random
from collections import defaultdict
from typing import Iterable, Optional


class ConflictCounter:
    """Symmetric conflict counts between original agents.

    The count between two meta-agents is the sum over their member pairs, so
    merged agents inherit their members' history against third parties.
    """

    def __init__(self):
        self._counts: dict[tuple[int, int], int] = defaultdict(int)

    def add(self, a: int, b: int, n: int = 1) -> None:
        if a == b:
            raise ValueError("an agent cannot conflict with itself")
        if n < 0:
            raise ValueError("counts only grow")
        self._counts[(a, b) if a < b else (b, a)] += n

    def get(self, a: int, b: int) -> int:
        return self._counts.get((a, b) if a < b else (b, a), 0)

    def between(self, meta_a: Iterable[int], meta_b: Iterable[int]) -> int:
        meta_b = tuple(meta_b)
        return sum(self.get(i, j) for i in meta_a for j in meta_b)

    def items(self):
        return sorted(self._counts.items())


def should_merge_fixed(k: int, B: float) -> bool:
    return k >= B


def p_merge_randomized(k: int, B: int) -> float:
    """Hazard probability of merging at the k-th conflict, given no merge yet.

    p(k) = 1 / (B * (((B + 1) / B) ** (B - k + 1) - 1)) for 1 <= k <= B, and
    1 past the threshold.
    """
    if math.isinf(B):
        raise ValueError("randomized rule needs a finite threshold")
    if k < 1:
        raise ValueError("k counts conflicts from 1")
    if k >= B:
        return 1.0
    return 1.0 / (B * (((B + 1) / B) ** (B - k + 1) - 1))


def should_merge_delayed(k: int, B: float, head_cost: int, next_cost: Optional[int]) -> bool:
    """Merge only once the threshold is met and the popped node is strictly
    cheaper than the node now heading the list (an empty list counts as
    strictly more expensive)."""
    if k < B:
        return False
    return next_cost is None or head_cost < next_cost


class PolicyState:
    """Conflict history plus, for the randomized rule, per-pair random streams.

    Each meta-agent pair draws from its own stream seeded by (seed, pair), so
    a pair's decisions do not depend on how pops of other pairs interleave.
    """

    def __init__(self, B: float, seed: int = 0):
        self.B = B
        self.seed = seed
        self.counter = ConflictCounter()
        self._streams: dict[tuple, random.Random] = {}

    def stream(self, meta_a: tuple[int, ...], meta_b: tuple[int, ...]) -> random.Random:
        pair = tuple(sorted((tuple(sorted(meta_a)), tuple(sorted(meta_b)))))
        rng = self._streams.get(pair)
        if rng is None:
            rng = random.Random(f"{self.seed}:{pair[0]}:{pair[1]}")
            self._streams[pair] = rng
        return rng

    def should_merge_randomized(self, meta_a: tuple[int, ...], meta_b: tuple[int, ...]) -> bool:
        k = self.counter.between(meta_a, meta_b)
        if k >= self.B:
            return True
        return self.stream(meta_a, meta_b).random() < p_merge_randomized(k, self.B)
