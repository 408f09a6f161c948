"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Every floating-point operation is performed in the same order as in the
extension, so both backends produce bitwise identical trajectories.
"""

import heapq
import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TWO_M53 = 1.0 / 9007199254740992.0


def _mix64(z):
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def uniform(seed, i, j, n, lane):
    z = _mix64(seed & MASK64)
    z = _mix64(z ^ (i & MASK64))
    z = _mix64(z ^ (j & MASK64))
    z = _mix64(z ^ (((n << 1) | lane) & MASK64))
    return (float(z >> 11) + 0.5) * TWO_M53


def _classify(s, fz, k, ny, p, q):
    if fz[k]:
        return -1
    npl = (s[k - ny] > 0) + (s[k + ny] > 0) + (s[k - 1] > 0) + (s[k + 1] > 0)
    if s[k] < 0:
        if npl >= 3:
            return 0
        if npl == 2 and p > 0.0:
            return 1
        return -1
    if npl <= 1:
        return 0
    if npl == 2 and q > 0.0:
        return 2
    return -1


def _in_band(k, nx, ny, band):
    ix, iy = divmod(k, ny)
    return ix < band or iy < band or ix >= nx - band or iy >= ny - band


def kmc_run(spins, frozen, p, q, horizon, sample_times, seed, band, max_events):
    """Rejection-free zero-temperature run, mutating ``spins`` in place.

    Active sites are kept in three classes with rates 1 (strict minority),
    ``p`` (minus tie) and ``q`` (plus tie); one uniform picks the waiting time
    and a second one picks the class and the site within it.
    """
    nx, ny = spins.shape
    flat = spins.reshape(-1)
    s = flat.tolist()
    fz = frozen.reshape(-1).tolist()
    nsites = nx * ny

    cls = [-1] * nsites
    pos = [0] * nsites
    lists = [[], [], []]
    n_minus = 0
    for k in range(nsites):
        if not fz[k] and s[k] < 0:
            n_minus += 1
        c = _classify(s, fz, k, ny, p, q)
        cls[k] = c
        if c >= 0:
            pos[k] = len(lists[c])
            lists[c].append(k)

    t = 0.0
    draw = 0
    events = to_plus = to_minus = 0
    extinction = 0.0 if n_minus == 0 else -1.0
    overflow = -1.0
    snaps = []
    si = 0
    nsamp = len(sample_times)

    def snapshot():
        return np.array(s, dtype=np.int8).reshape(nx, ny)

    while True:
        counts = (len(lists[0]), len(lists[1]), len(lists[2]))
        rate = counts[0] + counts[1] * p + counts[2] * q
        if rate <= 0.0 or (max_events >= 0 and events >= max_events):
            break
        u1 = uniform(seed, -1, -1, draw, 0)
        u2 = uniform(seed, -1, -1, draw, 1)
        draw += 1
        dt = -math.log(u1) / rate
        if t + dt > horizon:
            break
        t = t + dt
        while si < nsamp and sample_times[si] < t:
            snaps.append(snapshot())
            si += 1
        x = u2 * rate
        if x < counts[0]:
            c = 0
            idx = int(x)
        elif x - counts[0] < counts[1] * p:
            c = 1
            idx = int((x - counts[0]) / p)
        else:
            c = 2
            idx = int((x - counts[0] - counts[1] * p) / q)
        if idx >= counts[c]:
            idx = counts[c] - 1
        k = lists[c][idx]

        s[k] = -s[k]
        events += 1
        if s[k] > 0:
            to_plus += 1
            n_minus -= 1
        else:
            to_minus += 1
            n_minus += 1
        if overflow < 0.0 and _in_band(k, nx, ny, band):
            overflow = t
        if n_minus == 0 and extinction < 0.0:
            extinction = t

        for kk in (k, k - ny, k + ny, k - 1, k + 1):
            c_old = cls[kk]
            c = _classify(s, fz, kk, ny, p, q)
            if c == c_old:
                continue
            if c_old >= 0:
                lst = lists[c_old]
                last = lst.pop()
                if last != kk:
                    idx = pos[kk]
                    lst[idx] = last
                    pos[last] = idx
            if c >= 0:
                pos[kk] = len(lists[c])
                lists[c].append(kk)
            cls[kk] = c

    if max_events >= 0 and events >= max_events and rate > 0.0:
        t_end = t
    else:
        t_end = horizon
    while si < nsamp and sample_times[si] <= t_end:
        snaps.append(snapshot())
        si += 1
    flat[:] = s
    return {
        "snapshots": snaps,
        "events": events,
        "to_plus": to_plus,
        "to_minus": to_minus,
        "time": t_end,
        "extinction": extinction,
        "overflow": overflow,
        "absorbed": rate <= 0.0,
    }


def _live(s, fz, k, ny, p, q, finite):
    if fz[k]:
        return False
    if finite:
        if s[k] < 0:
            return True
        return q > 0.0
    npl = (s[k - ny] > 0) + (s[k + ny] > 0) + (s[k - 1] > 0) + (s[k + 1] > 0)
    if s[k] < 0:
        return npl >= 3 or (npl == 2 and p > 0.0)
    return npl <= 1 or (npl == 2 and q > 0.0)


def graphical_run(spins, frozen, i0, j0, h, beta, horizon, sample_times, seed, band):
    """Graphical construction with lazily evaluated per-site clocks.

    Only sites whose next ring could change their spin sit in the event
    queue. A site that becomes live again has its clock advanced past the
    current time; the skipped rings could not have changed anything.
    """
    nx, ny = spins.shape
    flat = spins.reshape(-1)
    s = flat.tolist()
    fz = frozen.reshape(-1).tolist()
    nsites = nx * ny
    finite = not math.isinf(beta)
    if math.isinf(h):
        p, q = 1.0, 0.0
    else:
        p = 1.0 / (1.0 + math.exp(-2.0 * h))
        q = 1.0 / (1.0 + math.exp(2.0 * h))

    ring = [0] * nsites
    tau = [0.0] * nsites
    sched = [False] * nsites
    heap = []
    n_minus = 0
    for k in range(nsites):
        if not fz[k] and s[k] < 0:
            n_minus += 1
        if _live(s, fz, k, ny, p, q, finite):
            ix, iy = divmod(k, ny)
            ring[k] = 1
            tau[k] = -math.log(uniform(seed, ix + i0, iy + j0, 1, 0))
            sched[k] = True
            heap.append((tau[k], k))
    heapq.heapify(heap)

    t = 0.0
    events = rings = to_plus = to_minus = 0
    extinction = 0.0 if n_minus == 0 else -1.0
    overflow = -1.0
    snaps = []
    si = 0
    nsamp = len(sample_times)

    def snapshot():
        return np.array(s, dtype=np.int8).reshape(nx, ny)

    while heap:
        if heap[0][0] > horizon:
            break
        t, k = heapq.heappop(heap)
        while si < nsamp and sample_times[si] < t:
            snaps.append(snapshot())
            si += 1
        ix, iy = divmod(k, ny)
        rings += 1
        u = uniform(seed, ix + i0, iy + j0, ring[k], 1)
        ssum = s[k - ny] + s[k + ny] + s[k - 1] + s[k + 1]
        if finite:
            if math.isinf(h):
                new = 1
            else:
                prob = 1.0 / (1.0 + math.exp(-2.0 * (beta * ssum + h)))
                new = 1 if u < prob else -1
        elif ssum > 0:
            new = 1
        elif ssum < 0:
            new = -1
        else:
            new = 1 if u < p else -1
        ring[k] += 1
        tau[k] += -math.log(uniform(seed, ix + i0, iy + j0, ring[k], 0))

        if new != s[k]:
            s[k] = new
            events += 1
            if new > 0:
                to_plus += 1
                n_minus -= 1
            else:
                to_minus += 1
                n_minus += 1
            if overflow < 0.0 and _in_band(k, nx, ny, band):
                overflow = t
            if n_minus == 0 and extinction < 0.0:
                extinction = t
        if _live(s, fz, k, ny, p, q, finite):
            heapq.heappush(heap, (tau[k], k))
        else:
            sched[k] = False
        for kk in (k - ny, k + ny, k - 1, k + 1):
            if sched[kk] or not _live(s, fz, kk, ny, p, q, finite):
                continue
            jx, jy = divmod(kk, ny)
            if ring[kk] == 0:
                ring[kk] = 1
                tau[kk] = -math.log(uniform(seed, jx + i0, jy + j0, 1, 0))
            while tau[kk] <= t:
                ring[kk] += 1
                tau[kk] += -math.log(uniform(seed, jx + i0, jy + j0, ring[kk], 0))
            sched[kk] = True
            heapq.heappush(heap, (tau[kk], kk))

    while si < nsamp and sample_times[si] <= horizon:
        snaps.append(snapshot())
        si += 1
    flat[:] = s
    return {
        "snapshots": snaps,
        "events": events,
        "rings": rings,
        "to_plus": to_plus,
        "to_minus": to_minus,
        "time": horizon,
        "extinction": extinction,
        "overflow": overflow,
        "absorbed": not heap,
    }
