import heapq
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from isingdroplet.dynamics import (
    ExtinctionCensored, WindowOverflow, coupled_run, extinction_time, run_graphical, run_kmc,
    update_rule,
)
from isingdroplet.geometry import PlanarShape, disk_shape
from isingdroplet.lattice import (
    FieldParameter, droplet_of, init_from_shape, is_increasing_set, quadrant_configuration,
    square_shape,
)
from isingdroplet.rng import ClockField

INF = math.inf


def naive_graphical(config, clocks, params, horizon):
    """Execute every ring of every free site; no laziness."""
    spins = config.spins.copy()
    off = config.offset
    free = np.argwhere(config.frozen == 0)
    heap = []
    for a, b in free:
        i, j = a - off, b - off
        heapq.heappush(heap, (clocks.increment(i, j, 1), 1, int(a), int(b)))
    events = 0
    while heap and heap[0][0] <= horizon:
        t, n, a, b = heapq.heappop(heap)
        i, j = a - off, b - off
        nb = [spins[a - 1, b], spins[a + 1, b], spins[a, b - 1], spins[a, b + 1]]
        tie = clocks.tie_mark(i, j, n, params.h)
        new = update_rule(nb, params, tie, clocks.mark_uniform(i, j, n))
        if new != spins[a, b]:
            spins[a, b] = new
            events += 1
        heapq.heappush(heap, (t + clocks.increment(i, j, n + 1), n + 1, a, b))
    return spins, events


def test_update_rule_examples():
    p0, pinf = FieldParameter(0), FieldParameter(INF)
    assert update_rule([1, 1, 1, -1], p0, -1, 0.9) == 1
    assert update_rule([-1, -1, -1, 1], pinf, 1, 0.0) == -1
    assert update_rule([1, 1, -1, -1], p0, -1, 0.0) == -1
    assert update_rule([1, 1, -1, -1], p0, 1, 0.0) == 1
    assert update_rule([1, 1, -1, -1], pinf, -1, 0.0) == 1
    # finite temperature: heat-bath probability of +
    p = FieldParameter(0.2, beta=0.5)
    prob = 1 / (1 + math.exp(-2 * (0.5 * 2 + 0.2)))
    assert update_rule([1, 1, 1, -1], p, 0, prob - 1e-9) == 1
    assert update_rule([1, 1, 1, -1], p, 0, prob + 1e-9) == -1
    with pytest.raises(ValueError):
        update_rule([1, 1, 1], p0, 1, 0.5)


@pytest.mark.parametrize("h", [0.0, 0.6, INF])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_lazy_graphical_matches_every_ring_oracle(h, seed):
    c = init_from_shape(disk_shape(0.8), 3, "mixed-corner" if h < INF else "all-plus")
    clocks, params = ClockField(seed), FieldParameter(h)
    spins, events = naive_graphical(c, clocks, params, 6.0)
    traj = run_graphical(c, clocks, params, 6.0, [6.0])
    assert np.array_equal(traj.final.spins, spins)
    assert traj.event_count == events


def test_finite_temperature_matches_oracle():
    c = init_from_shape(square_shape(0.5), 3)
    clocks, params = ClockField(8), FieldParameter(0.3, beta=0.8)
    spins, events = naive_graphical(c, clocks, params, 3.0)
    traj = run_graphical(c, clocks, params, 3.0, [3.0])
    assert np.array_equal(traj.final.spins, spins) and traj.event_count == events


@pytest.mark.parametrize("engine", ["kmc", "graphical"])
def test_all_plus_is_absorbing(engine):
    c = init_from_shape(PlanarShape(), 5)
    for h in (0.0, INF):
        if engine == "kmc":
            tr = run_kmc(c, FieldParameter(h), 10.0, 1, [10.0])
        else:
            tr = run_graphical(c, ClockField(1), FieldParameter(h), 10.0, [10.0])
        assert tr.event_count == 0 and tr.extinction_time == 0.0
        assert tr.final == c


def test_single_minus_lifetime_is_exponential():
    c = init_from_shape(PlanarShape(), 2)
    c.spins[c.offset, c.offset] = -1
    samples = [extinction_time(c, FieldParameter(INF), s) for s in range(3000)]
    assert np.mean(samples) == pytest.approx(1.0, abs=0.06)
    assert stats.kstest(samples, "expon").pvalue > 1e-3


def test_determinism():
    c = init_from_shape(disk_shape(0.9), 10)
    for h in (0.0, 1.0):
        a = run_kmc(c, FieldParameter(h), 30.0, 5, [10.0, 30.0])
        b = run_kmc(c, FieldParameter(h), 30.0, 5, [10.0, 30.0])
        assert a.event_count == b.event_count
        assert all(x == y for x, y in zip(a.snapshots, b.snapshots))
        g1 = run_graphical(c, ClockField(5), FieldParameter(h), 30.0, [10.0, 30.0])
        g2 = run_graphical(c, ClockField(5), FieldParameter(h), 30.0, [10.0, 30.0])
        assert g1.event_count == g2.event_count and g1.final == g2.final


@given(st.integers(0, 2**32), st.floats(0.2, 1.0))
def test_infinite_field_only_shrinks(seed, r):
    L = 8
    c = init_from_shape(disk_shape(r), L)
    tr = run_kmc(c, FieldParameter(INF), 40.0, seed, [1.0, 5.0, 20.0, 40.0])
    counts = [s.minus_count() for s in tr.snapshots]
    assert all(a >= b for a, b in zip([c.minus_count()] + counts, counts))
    assert tr.flips_to_minus == 0
    assert tr.event_count <= c.minus_count() <= (2 * L + 1) ** 2
    for s in tr.snapshots:
        assert droplet_of(s).minus_sites.shape[0] == s.minus_count()


@pytest.mark.parametrize("h", [0.0, 1.0])
def test_mixed_corner_keeps_increasing(h):
    c = init_from_shape(square_shape(), 6, "mixed-corner")
    assert is_increasing_set(c)
    tr = run_graphical(c, ClockField(3), FieldParameter(h), 60.0, np.linspace(1, 60, 30))
    assert tr.event_count > 0
    assert all(is_increasing_set(s) for s in tr.snapshots)


def test_coupled_identical_configs():
    c = init_from_shape(disk_shape(0.7), 8)
    a, b = coupled_run([c, c.copy()], ClockField(11), FieldParameter(0.0), 20.0, [5.0, 20.0])
    assert a.event_count == b.event_count
    assert all(x == y for x, y in zip(a.snapshots, b.snapshots))


@pytest.mark.parametrize("h", [0.0, 0.5, INF])
@given(seed=st.integers(0, 2**32))
def test_nested_droplets_stay_nested(h, seed):
    L = 8
    small = init_from_shape(disk_shape(0.5, center=(0.1, -0.2)), L)
    big = init_from_shape(square_shape(0.9), L)
    assert small >= big  # more plus everywhere
    times = np.linspace(0.5, 20, 10)
    a, b = coupled_run([small, big], ClockField(seed), FieldParameter(h), 20.0, times)
    assert all(x >= y for x, y in zip(a.snapshots, b.snapshots))


def test_square_inside_quadrant_coupling():
    L = 10
    quad = quadrant_configuration(L, corner=L)
    box = quad.copy()
    box.spins[box.spins < 0] = 1
    box.spins[quad.offset - L:quad.offset + L, quad.offset - L:quad.offset + L] = -1
    box = box.with_spins(box.spins)
    assert box >= quad
    a, b = coupled_run([box, quad], ClockField(4), FieldParameter(INF), 15.0, np.linspace(1, 15, 8))
    assert all(x >= y for x, y in zip(a.snapshots, b.snapshots))


@pytest.mark.parametrize("h", [0.0, 1.0, INF])
def test_engines_agree_in_law(h):
    c = init_from_shape(square_shape(), 2, "all-plus")
    params = FieldParameter(h)
    k = [extinction_time(c, params, s, engine="kmc") for s in range(1500)]
    g = [extinction_time(c, params, 10**6 + s, engine="graphical") for s in range(1500)]
    assert stats.ks_2samp(k, g).pvalue > 1e-3


def test_censoring():
    c = init_from_shape(square_shape(), 20)
    with pytest.raises(ExtinctionCensored) as err:
        extinction_time(c, FieldParameter(0.0), 1, horizon=1.0)
    assert err.value.remaining > 0 and err.value.horizon == 1.0
    tr = run_kmc(c, FieldParameter(0.0), 1.0, 1)
    assert tr.censored


def test_argument_validation():
    c = init_from_shape(square_shape(), 3)
    with pytest.raises(ValueError):
        run_kmc(c, FieldParameter(0.0, beta=1.0), 1.0, 1)
    with pytest.raises(ValueError):
        run_kmc(c, FieldParameter(0.0), 1.0, 1, [2.0, 1.0])
    with pytest.raises(ValueError):
        run_kmc(c, FieldParameter(0.0), 1.0, 1, [5.0])
    with pytest.raises(ValueError):
        extinction_time(c, FieldParameter(0.0), 1, engine="metropolis")
    with pytest.raises(ValueError):
        coupled_run([c, init_from_shape(square_shape(), 4)], ClockField(1), FieldParameter(0), 1.0)


def test_overflow_reported_for_open_windows():
    quad = quadrant_configuration(4)
    tr = run_kmc(quad, FieldParameter(INF), 200.0, 2)
    assert tr.overflow_time is not None
    with pytest.raises(WindowOverflow):
        run_kmc(quad, FieldParameter(INF), 200.0, 2, strict=True)
    # a closed box is the whole system and never overflows
    tr = run_kmc(init_from_shape(square_shape(), 4), FieldParameter(0.0), 50.0, 2)
    assert tr.overflow_time is None
