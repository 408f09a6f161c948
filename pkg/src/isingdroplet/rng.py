"""Counter-based per-site randomness for the graphical construction.

Every draw is a hash of ``(master_seed, i, j, n, lane)``: lane 0 gives the
n-th exponential clock increment of site ``(i, j)`` and lane 1 the uniform
behind its n-th tie mark. Nothing depends on the order in which sites are
visited, so several runs sharing a :class:`ClockField` are exactly coupled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterator

from . import _backend

MASK64 = (1 << 64) - 1


def tie_probability(h: float) -> float:
    """P(+1) = e^h / (2 cosh h) for a 2-2 tie; 1 at h = inf."""
    if math.isinf(h):
        return 1.0 if h > 0 else 0.0
    return 1.0 / (1.0 + math.exp(-2.0 * h))


@dataclass(frozen=True)
class ClockField:
    master_seed: int

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & MASK64)

    def uniform(self, i: int, j: int, n: int, lane: int) -> float:
        return _backend.uniform(self.master_seed, int(i), int(j), int(n), int(lane))

    def increment(self, i: int, j: int, n: int) -> float:
        """Waiting time before ring ``n`` (n >= 1) at site (i, j); Exp(1)."""
        return -math.log(self.uniform(i, j, n, 0))

    def mark_uniform(self, i: int, j: int, n: int) -> float:
        return self.uniform(i, j, n, 1)

    def tie_mark(self, i: int, j: int, n: int, h: float) -> int:
        return 1 if self.mark_uniform(i, j, n) < tie_probability(h) else -1

    def ring_times(self, i: int, j: int, count: int) -> list[float]:
        times, t = [], 0.0
        for n in range(1, count + 1):
            t += self.increment(i, j, n)
            times.append(t)
        return times

    def stream(self, i: int, j: int, h: float) -> Iterator[tuple[float, int]]:
        """Infinite sequence of (ring-time increment, tie mark) at a site."""
        n = 1
        while True:
            yield self.increment(i, j, n), self.tie_mark(i, j, n, h)
            n += 1


@dataclass
class LazyClocks:
    """Per-key ring bookkeeping shared by the event-driven particle simulators.

    ``key`` maps to a site (i, j) of the clock field. Rings of a key that is
    not watched are skipped by :meth:`catch_up`, which is exact whenever
    those rings could not have changed the state.
    """

    clocks: ClockField
    _ring: dict = field(default_factory=dict)
    _tau: dict = field(default_factory=dict)

    def _init(self, key: tuple[int, int]) -> None:
        if key not in self._ring:
            self._ring[key] = 1
            self._tau[key] = self.clocks.increment(key[0], key[1], 1)

    def catch_up(self, key: tuple[int, int], now: float) -> float:
        """Advance ``key`` to its first ring strictly after ``now``."""
        self._init(key)
        while self._tau[key] <= now:
            self._ring[key] += 1
            self._tau[key] += self.clocks.increment(key[0], key[1], self._ring[key])
        return self._tau[key]

    def next_ring(self, key: tuple[int, int]) -> tuple[float, int]:
        self._init(key)
        return self._tau[key], self._ring[key]

    def consume(self, key: Hashable) -> float:
        """Mark the current ring of ``key`` as used; return the following ring time."""
        self._ring[key] += 1
        self._tau[key] += self.clocks.increment(key[0], key[1], self._ring[key])
        return self._tau[key]
