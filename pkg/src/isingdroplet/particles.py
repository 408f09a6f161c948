"""Monotone interfaces as particle systems.

Frame convention: site (i, j) sits at frame point ``x = i - j``,
``y = -(i + j + 1)``. An increasing configuration (plus set closed upward)
is encoded by a height function with ``eta(x) = x (mod 2)``; a site is minus
iff ``y > eta(x)``. A corner site flips when the site at
``(x, eta(x) + 1)`` (local minimum, turns +) or ``(x, eta(x) - 1)`` (local
maximum, turns -) rings, and the same flip moves one exclusion particle.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .lattice import DEFAULT_MARGIN, FieldParameter, SpinConfiguration
from .rng import ClockField, LazyClocks


# --- value types ------------------------------------------------------------

@dataclass
class HeightFunction:
    """Integer path on [start, start + len(values) - 1] with unit steps."""

    start: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.ndim != 1 or len(self.values) < 1:
            raise ValueError("height values must be a nonempty 1-D array")
        if np.any(np.abs(np.diff(self.values)) != 1):
            raise ValueError("height function steps must be +1 or -1")

    @property
    def end(self) -> int:
        return self.start + len(self.values) - 1

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.start, self.end + 1)

    def __call__(self, x: int) -> int:
        return int(self.values[x - self.start])

    def __eq__(self, other) -> bool:
        return (isinstance(other, HeightFunction) and self.start == other.start
                and np.array_equal(self.values, other.values))

    @classmethod
    def from_function(cls, func, start: int, end: int) -> "HeightFunction":
        xs = np.arange(start, end + 1)
        return cls(start, np.array([func(int(x)) for x in xs]))

    @property
    def lattice_parity(self) -> bool:
        """True when eta(x) = x (mod 2), i.e. the path lives on lattice vertices."""
        return bool(np.all((self.values - self.xs) % 2 == 0))


@dataclass
class OccupationField:
    """xi(x) in {0, 1} on [start, start + len(values) - 1].

    ``anchor`` is the height at ``start`` of the path this field came from;
    ``boundary`` is ``"closed"`` (end bonds blocked) or ``"pad"`` (all 1 to
    the left, all 0 to the right).
    """

    start: int
    values: np.ndarray
    anchor: int = 0
    boundary: str = "closed"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int8)
        if not np.all((self.values == 0) | (self.values == 1)):
            raise ValueError("occupations must be 0 or 1")
        if self.boundary not in ("closed", "pad"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def particle_count(self) -> int:
        return int(self.values.sum())

    @property
    def positions(self) -> np.ndarray:
        return self.start + np.flatnonzero(self.values)

    def __eq__(self, other) -> bool:
        return (isinstance(other, OccupationField) and self.start == other.start
                and self.anchor == other.anchor and np.array_equal(self.values, other.values))


@dataclass
class ZeroRangeState:
    """Signed pile sizes; positive piles are species A, negative are B."""

    start: int
    signed: np.ndarray

    def __post_init__(self):
        self.signed = np.asarray(self.signed, dtype=np.int64)

    @property
    def counts(self) -> np.ndarray:
        return np.abs(self.signed)

    @property
    def species(self) -> list[str | None]:
        return ["A" if v > 0 else ("B" if v < 0 else None) for v in self.signed.tolist()]

    @property
    def signed_mass(self) -> int:
        return int(self.signed.sum())

    @property
    def total_particles(self) -> int:
        return int(self.counts.sum())


# --- bijections -------------------------------------------------------------

def sep_occupation_from_height(eta: HeightFunction, boundary: str = "closed") -> OccupationField:
    """xi(x) = (eta(x) - eta(x + 1) + 1) / 2 on [a, b - 1]."""
    xi = (eta.values[:-1] - eta.values[1:] + 1) // 2
    return OccupationField(eta.start, xi, int(eta.values[0]), boundary)


def height_from_occupation(occ: OccupationField) -> HeightFunction:
    steps = 1 - 2 * occ.values.astype(np.int64)
    return HeightFunction(occ.start, np.r_[occ.anchor, occ.anchor + np.cumsum(steps)])


def site_of(x: int, y: int) -> tuple[int, int]:
    """Lattice site with frame coordinates (x, y); x + y must be odd."""
    if (x + y) % 2 == 0:
        raise ValueError("frame point is not a site centre")
    return (x - y - 1) // 2, (-x - y - 1) // 2


def height_from_config(config: SpinConfiguration, start: int | None = None,
                       end: int | None = None) -> HeightFunction:
    """Height function of an increasing configuration over the whole window.

    Column x (the anti-diagonal i - j = x) has its lowest stored site plus and
    all plus sites contiguous, so eta(x) = y_lowest(x) - 1 + 2 * #plus(x).
    """
    n = config.spins.shape[0]
    M = n - 1 - config.offset
    ix, iy = np.indices((n, n))
    plus = (config.spins > 0).ravel()
    counts = np.bincount((ix - iy).ravel() + n - 1, weights=plus, minlength=2 * n - 1)
    xs = np.arange(-(n - 1), n)
    y_lowest = -(2 * M - np.abs(xs) + 1)
    eta = (y_lowest - 1 + 2 * counts).astype(np.int64)
    lo = -(n - 1) if start is None else start
    hi = (n - 1) if end is None else end
    return HeightFunction(lo, eta[lo + n - 1: hi + n])


def _extended_height(eta: HeightFunction, x: np.ndarray) -> np.ndarray:
    """Continue eta outside its domain by V-shaped walls of slope 1."""
    v = eta.values
    out = np.empty(x.shape, dtype=np.int64)
    left, right = x < eta.start, x > eta.end
    mid = ~(left | right)
    out[mid] = v[x[mid] - eta.start]
    out[left] = v[0] + (eta.start - x[left])
    out[right] = v[-1] + (x[right] - eta.end)
    return out


def config_from_height(eta: HeightFunction, half_width: int | None = None,
                       margin: int = DEFAULT_MARGIN, freeze_outside: bool = True) -> SpinConfiguration:
    """Increasing configuration whose interface over [a, b] is eta.

    Columns outside the open interval (a, b) are frozen so the ends of the
    path stay fixed, matching the closed-segment exclusion process.
    """
    if not eta.lattice_parity:
        raise ValueError("eta(x) must have the parity of x")
    if half_width is None:
        reach = max(abs(eta.start), abs(eta.end)) + int(np.abs(eta.values).max())
        half_width = reach // 2 + 4
    L = half_width
    n = 2 * (L + margin)
    r = np.arange(n) - (L + margin)
    I, J = np.meshgrid(r, r, indexing="ij")
    X, Y = I - J, -(I + J + 1)
    spins = np.where(Y > _extended_height(eta, X), -1, 1).astype(np.int8)
    frozen = ((X <= eta.start) | (X >= eta.end)) if freeze_outside else None
    return SpinConfiguration(L, spins, "frozen-mask", frozen, margin)


# --- exclusion dynamics -----------------------------------------------------

@dataclass
class ParticleTrajectory:
    sampled_times: list[float]
    snapshots: list
    event_count: int
    jumps_right: int = 0
    jumps_left: int = 0
    annihilations: int = 0
    final_time: float = 0.0


def _corner_kind(eta: dict, x: int) -> int:
    """+1 local min, -1 local max, 0 otherwise (needs eta at x-1, x, x+1)."""
    l, c, r = eta[x - 1], eta[x], eta[x + 1]
    if l == r == c + 1:
        return 1
    if l == r == c - 1:
        return -1
    return 0


class _PadHeight(dict):
    """Height values continued by the step-profile pads on demand."""

    def __init__(self, start: int, end: int, values):
        super().__init__(zip(range(start, end + 1), (int(v) for v in values)))
        self.lo, self.hi = start, end

    def __missing__(self, x: int) -> int:
        if x < self.lo:
            return self[self.lo] + (self.lo - x)
        return self[self.hi] + (x - self.hi)

    def grow(self, x: int) -> None:
        while x - 1 < self.lo:
            self[self.lo - 1] = self[self.lo] + 1
            self.lo -= 1
        while x + 1 > self.hi:
            self[self.hi + 1] = self[self.hi] + 1
            self.hi += 1


def simulate_exclusion(occ: OccupationField, params: FieldParameter, clocks: ClockField,
                       horizon: float, sample_times=()) -> ParticleTrajectory:
    """Simple exclusion driven by the corner-site clocks of the interface.

    A particle followed by a hole at bond (x - 1, x) is a local minimum of
    eta at x; the clock of site (x, eta(x) + 1) rings, and the particle jumps
    right when the tie mark is +1 (probability p). A hole followed by a
    particle is a local maximum; the clock of (x, eta(x) - 1) rings and the
    particle jumps left when the mark is -1. With these clocks the evolution
    coincides with the spin dynamics of the corresponding configuration.
    """
    p = params.p_plus
    st = sorted(float(s) for s in sample_times)
    if st and st[-1] > horizon:
        raise ValueError("horizon must be >= max(sample_times)")
    path = height_from_occupation(occ)
    pad = occ.boundary == "pad"
    eta = _PadHeight(path.start, path.end, path.values)
    lazy = LazyClocks(clocks)
    heap: list = []
    watched: dict[int, tuple[int, int]] = {}

    def active(x: int) -> bool:
        return pad or path.start < x < path.end

    def key_of(x: int, kind: int) -> tuple[int, int]:
        return site_of(x, eta[x] + kind)

    def watch(x: int, now: float) -> None:
        if not active(x):
            return
        kind = _corner_kind(eta, x)
        if kind == 0 or (kind < 0 and p >= 1.0):
            watched.pop(x, None)
            return
        key = key_of(x, kind)
        if watched.get(x) == key:
            return
        watched[x] = key
        tau = lazy.catch_up(key, now)
        heapq.heappush(heap, (tau, key, x))

    for x in range(path.start + (0 if pad else 1), path.end + (1 if pad else 0)):
        watch(x, 0.0)

    snaps, times = [], []
    si, events, right, left, t = 0, 0, 0, 0, 0.0

    def snapshot() -> OccupationField:
        lo, hi = (eta.lo, eta.hi) if pad else (path.start, path.end)
        hf = HeightFunction(lo, [eta[x] for x in range(lo, hi + 1)])
        return sep_occupation_from_height(hf, occ.boundary)

    while heap:
        tau, key, x = heap[0]
        if tau > horizon:
            break
        heapq.heappop(heap)
        if watched.get(x) != key or lazy.next_ring(key)[0] != tau:
            continue
        t = tau
        while si < len(st) and st[si] < t:
            snaps.append(snapshot())
            times.append(st[si])
            si += 1
        n = lazy.next_ring(key)[1]
        u = clocks.mark_uniform(key[0], key[1], n)
        lazy.consume(key)
        kind = _corner_kind(eta, x)
        moved = (kind > 0 and u < p) or (kind < 0 and not u < p)
        if moved:
            eta[x] += 2 * kind
            events += 1
            if kind > 0:
                right += 1
            else:
                left += 1
            if pad:
                eta.grow(x)
        del watched[x]
        for y in (x - 1, x, x + 1):
            watch(y, t)

    while si < len(st) and st[si] <= horizon:
        snaps.append(snapshot())
        times.append(st[si])
        si += 1
    traj = ParticleTrajectory(times, snaps, events, right, left, final_time=horizon)
    traj.final = snapshot()
    return traj


def interface_drift(eta: HeightFunction, h: float = 0.0) -> np.ndarray:
    """Expected rate of change of eta at interior points under the corner dynamics.

    Local minima rise by 2 at rate p, local maxima fall by 2 at rate q; at
    h = 0 this equals half the discrete Laplacian of eta.
    """
    f = FieldParameter(h)
    v = eta.values
    lap = v[:-2] + v[2:] - 2 * v[1:-1]
    return np.where(lap > 0, 2.0 * f.p_plus, np.where(lap < 0, -2.0 * f.p_minus, 0.0))


# --- zero-range picture ------------------------------------------------------

def zrp_from_height(eta, start: int = 0) -> ZeroRangeState:
    """Piles from a piecewise-constant interface.

    ``eta`` holds the interface value on consecutive cells; the pile between
    cells k and k + 1 is eta[k + 1] - eta[k] (dual grid, so pile k sits
    between cells k and k + 1).
    """
    if isinstance(eta, HeightFunction):
        start, eta = eta.start, eta.values
    v = np.asarray(eta, dtype=np.int64)
    return ZeroRangeState(start, np.diff(v))


def height_from_zrp(z: ZeroRangeState, anchor: int = 0) -> np.ndarray:
    return np.r_[anchor, anchor + np.cumsum(z.signed)]


PILE_RATES = ("unit", "inverse")


def simulate_zero_range(z: ZeroRangeState, clocks: ClockField, horizon: float,
                        sample_times=(), pile_rate: str = "unit",
                        check_mass: bool = True) -> ParticleTrajectory:
    """Zero-range process with A/B annihilation on a closed segment.

    ``pile_rate="unit"``: each occupied site sends one particle left at rate
    1/2 and right at rate 1/2, whatever the pile size. ``"inverse"``: the
    whole site fires at total rate 1/k for a pile of k. Jumps off the ends of
    the segment are suppressed. A particle landing on a pile of the opposite
    species annihilates with one of its particles.
    """
    if pile_rate not in PILE_RATES:
        raise ValueError(f"pile_rate must be one of {PILE_RATES}")
    st = sorted(float(s) for s in sample_times)
    n = z.signed.copy()
    size = len(n)
    mass0 = int(n.sum())
    lazy = LazyClocks(clocks)
    heap: list = []
    sched = np.zeros(size, dtype=bool)

    def schedule(k: int, now: float) -> None:
        if n[k] != 0 and not sched[k]:
            sched[k] = True
            heapq.heappush(heap, (lazy.catch_up((z.start + k, 0), now), k))

    for k in range(size):
        schedule(k, 0.0)
    snaps, times = [], []
    si, events, right, left, annih, t = 0, 0, 0, 0, 0, 0.0
    while heap and heap[0][0] <= horizon:
        tau, k = heapq.heappop(heap)
        key = (z.start + k, 0)
        t = tau
        while si < len(st) and st[si] < t:
            snaps.append(ZeroRangeState(z.start, n.copy()))
            times.append(st[si])
            si += 1
        if n[k] == 0:
            sched[k] = False
            continue
        ring = lazy.next_ring(key)[1]
        u = clocks.mark_uniform(key[0], key[1], ring)
        lazy.consume(key)
        heapq.heappush(heap, (lazy.next_ring(key)[0], k))
        pile = abs(int(n[k]))
        if pile_rate == "inverse":
            if u >= 1.0 / pile:
                continue
            u *= pile
        step = -1 if u < 0.5 else 1
        dest = k + step
        if not 0 <= dest < size:
            continue
        s = 1 if n[k] > 0 else -1
        if n[dest] * s < 0:
            annih += 1
        n[k] -= s
        n[dest] += s
        events += 1
        if step > 0:
            right += 1
        else:
            left += 1
        schedule(dest, t)
        if check_mass and int(n.sum()) != mass0:
            raise AssertionError("signed mass changed")
    while si < len(st) and st[si] <= horizon:
        snaps.append(ZeroRangeState(z.start, n.copy()))
        times.append(st[si])
        si += 1
    traj = ParticleTrajectory(times, snaps, events, right, left, annih, horizon)
    traj.final = ZeroRangeState(z.start, n.copy())
    return traj
