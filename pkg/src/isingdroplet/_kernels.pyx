# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for the zero-temperature spin dynamics.

Both engines mutate ``spins`` in place and mirror ``_fallback`` operation for
operation, so the two backends return bitwise identical results.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, isinf
from libc.stdint cimport uint64_t, int64_t, int32_t, int8_t, uint8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = z + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t seed, int64_t i, int64_t j, uint64_t n, uint64_t lane) nogil:
    cdef uint64_t z = _mix64(seed)
    z = _mix64(z ^ <uint64_t>i)
    z = _mix64(z ^ <uint64_t>j)
    z = _mix64(z ^ ((n << 1) | lane))
    # open interval (0, 1)
    return (<double>(z >> 11) + 0.5) * TWO_M53


def uniform(uint64_t seed, int64_t i, int64_t j, uint64_t n, uint64_t lane):
    return _uniform(seed, i, j, n, lane)


cdef inline int _plus_neighbors(int8_t* s, int64_t k, int64_t ny) nogil:
    return ((s[k - ny] > 0) + (s[k + ny] > 0) + (s[k - 1] > 0) + (s[k + 1] > 0))


cdef inline int _classify(int8_t* s, uint8_t* frozen, int64_t k, int64_t ny,
                          double p, double q) nogil:
    # 0: strict minority (rate 1), 1: minus tie (rate p), 2: plus tie (rate q)
    if frozen[k]:
        return -1
    cdef int npl = _plus_neighbors(s, k, ny)
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


cdef inline bint _in_band(int64_t k, int64_t nx, int64_t ny, int64_t band) nogil:
    cdef int64_t ix = k // ny
    cdef int64_t iy = k - ix * ny
    return ix < band or iy < band or ix >= nx - band or iy >= ny - band


def kmc_run(cnp.int8_t[:, ::1] spins, cnp.uint8_t[:, ::1] frozen,
            double p, double q, double horizon, double[::1] sample_times,
            uint64_t seed, int64_t band, int64_t max_events):
    """Rejection-free run at zero temperature; see ``_fallback.kmc_run``."""
    cdef int64_t nx = spins.shape[0]
    cdef int64_t ny = spins.shape[1]
    cdef int64_t nsites = nx * ny
    cdef int8_t* s = &spins[0, 0]
    cdef uint8_t* fz = &frozen[0, 0]

    cdef cnp.ndarray[cnp.int8_t, ndim=1] cls_arr = np.full(nsites, -1, dtype=np.int8)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] pos_arr = np.zeros(nsites, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=2] lists_arr = np.zeros((3, nsites), dtype=np.int32)
    cdef int8_t* cls = <int8_t*> cls_arr.data
    cdef int32_t* pos = <int32_t*> pos_arr.data
    cdef int32_t* lists = <int32_t*> lists_arr.data
    cdef int64_t counts[3]
    counts[0] = 0
    counts[1] = 0
    counts[2] = 0

    cdef int64_t k, kk, m, c, c_old, idx, last
    cdef int64_t n_minus = 0
    for k in range(nsites):
        if not fz[k] and s[k] < 0:
            n_minus += 1
        c = _classify(s, fz, k, ny, p, q)
        cls[k] = <int8_t>c
        if c >= 0:
            lists[c * nsites + counts[c]] = <int32_t>k
            pos[k] = <int32_t>counts[c]
            counts[c] += 1

    cdef double t = 0.0
    cdef double rate, dt, x, u1, u2
    cdef uint64_t draw = 0
    cdef int64_t events = 0
    cdef int64_t to_plus = 0
    cdef int64_t to_minus = 0
    cdef double extinction = -1.0
    cdef double overflow = -1.0
    cdef Py_ssize_t nsamp = sample_times.shape[0]
    cdef Py_ssize_t si = 0
    cdef int64_t nbrs[5]
    snaps = []
    if n_minus == 0:
        extinction = 0.0

    while True:
        rate = counts[0] + counts[1] * p + counts[2] * q
        if rate <= 0.0 or (max_events >= 0 and events >= max_events):
            break
        u1 = _uniform(seed, -1, -1, draw, 0)
        u2 = _uniform(seed, -1, -1, draw, 1)
        draw += 1
        dt = -log(u1) / rate
        if t + dt > horizon:
            break
        t = t + dt
        while si < nsamp and sample_times[si] < t:
            snaps.append(np.array(spins, copy=True))
            si += 1
        x = u2 * rate
        if x < counts[0]:
            c = 0
            idx = <int64_t>x
        elif x - counts[0] < counts[1] * p:
            c = 1
            idx = <int64_t>((x - counts[0]) / p)
        else:
            c = 2
            idx = <int64_t>((x - counts[0] - counts[1] * p) / q)
        if idx >= counts[c]:
            idx = counts[c] - 1
        k = lists[c * nsites + idx]

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

        nbrs[0] = k
        nbrs[1] = k - ny
        nbrs[2] = k + ny
        nbrs[3] = k - 1
        nbrs[4] = k + 1
        for m in range(5):
            kk = nbrs[m]
            c_old = cls[kk]
            c = _classify(s, fz, kk, ny, p, q)
            if c == c_old:
                continue
            if c_old >= 0:
                counts[c_old] -= 1
                last = lists[c_old * nsites + counts[c_old]]
                idx = pos[kk]
                lists[c_old * nsites + idx] = <int32_t>last
                pos[last] = <int32_t>idx
            if c >= 0:
                lists[c * nsites + counts[c]] = <int32_t>kk
                pos[kk] = <int32_t>counts[c]
                counts[c] += 1
            cls[kk] = <int8_t>c

    # an absorbed state is constant up to the horizon
    if max_events >= 0 and events >= max_events and rate > 0.0:
        t_end = t
    else:
        t_end = horizon
    while si < nsamp and sample_times[si] <= t_end:
        snaps.append(np.array(spins, copy=True))
        si += 1
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


# --- graphical construction -------------------------------------------------

cdef inline bint _less(double ta, int64_t ka, double tb, int64_t kb) nogil:
    return ta < tb or (ta == tb and ka < kb)


cdef void _heap_push(double* ht, int64_t* hk, int64_t* size, double t, int64_t k) nogil:
    cdef int64_t i = size[0]
    cdef int64_t parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _less(t, k, ht[parent], hk[parent]):
            ht[i] = ht[parent]
            hk[i] = hk[parent]
            i = parent
        else:
            break
    ht[i] = t
    hk[i] = k


cdef void _heap_pop(double* ht, int64_t* hk, int64_t* size) nogil:
    size[0] -= 1
    cdef int64_t n = size[0]
    if n == 0:
        return
    cdef double t = ht[n]
    cdef int64_t k = hk[n]
    cdef int64_t i = 0
    cdef int64_t child
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _less(ht[child + 1], hk[child + 1], ht[child], hk[child]):
            child += 1
        if _less(ht[child], hk[child], t, k):
            ht[i] = ht[child]
            hk[i] = hk[child]
            i = child
        else:
            break
    ht[i] = t
    hk[i] = k


cdef inline bint _live(int8_t* s, uint8_t* fz, int64_t k, int64_t ny,
                       double p, double q, bint finite) nogil:
    if fz[k]:
        return False
    if finite:
        if s[k] < 0:
            return True
        return q > 0.0
    cdef int npl = _plus_neighbors(s, k, ny)
    if s[k] < 0:
        return npl >= 3 or (npl == 2 and p > 0.0)
    return npl <= 1 or (npl == 2 and q > 0.0)


def graphical_run(cnp.int8_t[:, ::1] spins, cnp.uint8_t[:, ::1] frozen,
                  int64_t i0, int64_t j0, double h, double beta,
                  double horizon, double[::1] sample_times,
                  uint64_t seed, int64_t band):
    """Exact graphical construction with lazily evaluated site clocks."""
    cdef int64_t nx = spins.shape[0]
    cdef int64_t ny = spins.shape[1]
    cdef int64_t nsites = nx * ny
    cdef int8_t* s = &spins[0, 0]
    cdef uint8_t* fz = &frozen[0, 0]
    cdef bint finite = not isinf(beta)
    cdef double p, q
    if isinf(h):
        p = 1.0
        q = 0.0
    else:
        p = 1.0 / (1.0 + exp(-2.0 * h))
        q = 1.0 / (1.0 + exp(2.0 * h))

    cdef cnp.ndarray[cnp.uint64_t, ndim=1] ring_arr = np.zeros(nsites, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tau_arr = np.zeros(nsites, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] sched_arr = np.zeros(nsites, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ht_arr = np.zeros(nsites + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hk_arr = np.zeros(nsites + 1, dtype=np.int64)
    cdef uint64_t* ring = <uint64_t*> ring_arr.data
    cdef double* tau = <double*> tau_arr.data
    cdef uint8_t* sched = <uint8_t*> sched_arr.data
    cdef double* ht = <double*> ht_arr.data
    cdef int64_t* hk = <int64_t*> hk_arr.data
    cdef int64_t hsize = 0

    cdef int64_t k, kk, m, ix, iy, ssum
    cdef int64_t n_minus = 0
    cdef double t = 0.0
    cdef double u, prob
    cdef int8_t new
    cdef int64_t events = 0
    cdef int64_t rings = 0
    cdef int64_t to_plus = 0
    cdef int64_t to_minus = 0
    cdef double extinction = -1.0
    cdef double overflow = -1.0
    cdef Py_ssize_t nsamp = sample_times.shape[0]
    cdef Py_ssize_t si = 0
    cdef int64_t nbrs[5]
    snaps = []

    for k in range(nsites):
        if not fz[k] and s[k] < 0:
            n_minus += 1
        if _live(s, fz, k, ny, p, q, finite):
            ix = k // ny
            iy = k - ix * ny
            ring[k] = 1
            tau[k] = -log(_uniform(seed, ix + i0, iy + j0, 1, 0))
            sched[k] = 1
            _heap_push(ht, hk, &hsize, tau[k], k)
    if n_minus == 0:
        extinction = 0.0

    while hsize > 0:
        if ht[0] > horizon:
            break
        t = ht[0]
        k = hk[0]
        _heap_pop(ht, hk, &hsize)
        while si < nsamp and sample_times[si] < t:
            snaps.append(np.array(spins, copy=True))
            si += 1
        ix = k // ny
        iy = k - ix * ny
        rings += 1
        u = _uniform(seed, ix + i0, iy + j0, ring[k], 1)
        ssum = s[k - ny] + s[k + ny] + s[k - 1] + s[k + 1]
        if finite:
            if isinf(h):
                new = 1
            else:
                prob = 1.0 / (1.0 + exp(-2.0 * (beta * ssum + h)))
                new = 1 if u < prob else -1
        elif ssum > 0:
            new = 1
        elif ssum < 0:
            new = -1
        else:
            new = 1 if u < p else -1
        ring[k] += 1
        tau[k] += -log(_uniform(seed, ix + i0, iy + j0, ring[k], 0))

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
            _heap_push(ht, hk, &hsize, tau[k], k)
        else:
            sched[k] = 0
        nbrs[0] = k - ny
        nbrs[1] = k + ny
        nbrs[2] = k - 1
        nbrs[3] = k + 1
        for m in range(4):
            kk = nbrs[m]
            if sched[kk] or not _live(s, fz, kk, ny, p, q, finite):
                continue
            ix = kk // ny
            iy = kk - ix * ny
            if ring[kk] == 0:
                ring[kk] = 1
                tau[kk] = -log(_uniform(seed, ix + i0, iy + j0, 1, 0))
            while tau[kk] <= t:
                ring[kk] += 1
                tau[kk] += -log(_uniform(seed, ix + i0, iy + j0, ring[kk], 0))
            sched[kk] = 1
            _heap_push(ht, hk, &hsize, tau[kk], kk)

    t_end = horizon
    while si < nsamp and sample_times[si] <= t_end:
        snaps.append(np.array(spins, copy=True))
        si += 1
    return {
        "snapshots": snaps,
        "events": events,
        "rings": rings,
        "to_plus": to_plus,
        "to_minus": to_minus,
        "time": t_end,
        "extinction": extinction,
        "overflow": overflow,
        "absorbed": hsize == 0,
    }
