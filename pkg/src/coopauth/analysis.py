"""Verifier-placement probability and verifier-count distributions.

Side model for `prob_both_sides`: each of the N verifiers is independently in
front of or behind the sender with probability 1/2, so both sides are covered
with probability 1 - 2 * 2**-N (zero for N <= 1).
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .obu import ElectionStrategy, is_verifier

PUBLISHED_BOTH_SIDES_N15 = 0.99998


@dataclass(frozen=True)
class ProbResult:
    n: int
    closed_form: float
    monte_carlo: float
    mc_trials: int
    mc_stderr: float

    @property
    def agrees(self) -> bool:
        """Closed form within 4 standard errors of the estimate."""
        return abs(self.closed_form - self.monte_carlo) <= 4 * self.mc_stderr


def both_sides_closed_form(n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return 0.0 if n <= 1 else 1.0 - 2.0 * 0.5**n


def prob_both_sides(n: int, trials: int, seed: int = 0) -> ProbResult:
    if trials <= 0:
        raise ValueError("trials must be positive")
    closed = both_sides_closed_form(n)
    front = np.random.default_rng(seed).binomial(n, 0.5, size=trials)
    hits = int(np.count_nonzero((front > 0) & (front < n)))
    est = hits / trials
    # Laplace-smoothed proportion keeps the error bar non-zero when every
    # trial agrees (est of exactly 0 or 1)
    smooth = (hits + 1) / (trials + 2)
    return ProbResult(n, closed, est, trials, math.sqrt(smooth * (1 - smooth) / trials))


def prob_table(n_max: int, trials: int, seed: int = 0) -> list[ProbResult]:
    return [prob_both_sides(n, trials, seed + n) for n in range(1, n_max + 1)]


# ---------------------------------------------------------------------------
# Verifier counts under complete mutual knowledge
# ---------------------------------------------------------------------------
#
# k is the size of each receiver's mutual-neighbor set. With complete mutual
# knowledge the sender is heard by k + 1 receivers, each of which sees the
# other k as mutual neighbors.


def count_verifiers(sender: int, receivers: list[int], p: int, strategy: ElectionStrategy) -> int:
    total = 0
    for i, me in enumerate(receivers):
        mutual = receivers[:i] + receivers[i + 1 :]
        total += is_verifier(me, sender, mutual, p, strategy)
    return total


def exact_verifier_count(k: int, p: int, strategy: ElectionStrategy) -> int:
    """Verifier count by enumerating every distance rank a receiver can hold.

    With distinct ids only the ordering of sender distances matters, and
    relabelling receivers does not change the total, so one receiver per rank
    position covers every case.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    sender = 1 << 40
    receivers = [sender + d for d in range(1, k + 2)]
    return count_verifiers(sender, receivers, p, strategy)


@dataclass(frozen=True)
class VerifierCountResult:
    k: int
    p: int
    strategy: ElectionStrategy
    histogram: dict[int, int]
    trials: int
    exact: int | None

    def frequencies(self) -> dict[int, float]:
        return {c: n / self.trials for c, n in self.histogram.items()}


def verifier_count_distribution(
    k: int, p: int, strategy: ElectionStrategy, trials: int, seed: int = 0
) -> VerifierCountResult:
    """Monte Carlo over random 64-bit pseudonyms, plus the exact count for k <= 12."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = random.Random(seed)
    hist: Counter[int] = Counter()
    for _ in range(trials):
        ids: set[int] = set()
        while len(ids) < k + 2:
            ids.add(rng.getrandbits(64))
        sender, *receivers = rng.sample(sorted(ids), k + 2)
        hist[count_verifiers(sender, receivers, p, strategy)] += 1
    exact = exact_verifier_count(k, p, strategy) if k <= 12 else None
    return VerifierCountResult(k, p, strategy, dict(sorted(hist.items())), trials, exact)
