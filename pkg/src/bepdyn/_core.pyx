# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.  Same contract and argument layout as ``_pycore``."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, realloc, free
from libc.math cimport pow

cnp.import_array()

cdef enum:
    OK = 0
    CAP_EXCEEDED = 1


cdef struct Dist:
    Py_ssize_t n
    Py_ssize_t cap
    long long *v
    double *p


cdef int dist_init(Dist *d, Py_ssize_t cap) except -1:
    if cap < 1:
        cap = 1
    d.n = 0
    d.cap = cap
    d.v = <long long *> malloc(cap * sizeof(long long))
    d.p = <double *> malloc(cap * sizeof(double))
    if d.v == NULL or d.p == NULL:
        raise MemoryError()
    return 0


cdef void dist_free(Dist *d) noexcept:
    free(d.v)
    free(d.p)
    d.v = NULL
    d.p = NULL
    d.n = 0


cdef int dist_add(Dist *d, long long v, double p) except -1:
    # sorted insert-or-accumulate; accumulation order matches dict insertion order
    cdef Py_ssize_t lo = 0, hi = d.n, mid, i
    while lo < hi:
        mid = (lo + hi) >> 1
        if d.v[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    if lo < d.n and d.v[lo] == v:
        d.p[lo] += p
        return 0
    if d.n == d.cap:
        d.cap *= 2
        d.v = <long long *> realloc(d.v, d.cap * sizeof(long long))
        d.p = <double *> realloc(d.p, d.cap * sizeof(double))
        if d.v == NULL or d.p == NULL:
            raise MemoryError()
    i = d.n
    while i > lo:
        d.v[i] = d.v[i - 1]
        d.p[i] = d.p[i - 1]
        i -= 1
    d.v[lo] = v
    d.p[lo] = p
    d.n += 1
    return 0


def population_weights(const double[:] alpha, const long long[:, :] opp_counts,
                       const double[:] coef, const long long[:, :] pay,
                       int k, int tie_mode, const long long[:] rank, double cap):
    cdef Py_ssize_t n_out = opp_counts.shape[0], n_flat = opp_counts.shape[1]
    cdef Py_ssize_t m = pay.shape[0]
    cdef Py_ssize_t s, f, a, t, it, x, y
    cdef double prob, share, total
    cdef long long c, v, best
    cdef int nwin, top
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = np.zeros(m)
    cdef double[:] w = w_arr
    cdef double *q = <double *> malloc(n_out * sizeof(double))
    cdef Dist *dists = <Dist *> malloc(m * sizeof(Dist))
    cdef Dist trial, nxt, cur
    cdef Py_ssize_t *idx = <Py_ssize_t *> malloc(m * sizeof(Py_ssize_t))
    cdef int *winners = <int *> malloc(m * sizeof(int))
    if q == NULL or dists == NULL or idx == NULL or winners == NULL:
        free(q); free(dists); free(idx); free(winners)
        raise MemoryError()
    for a in range(m):
        dists[a].v = NULL
        dists[a].p = NULL
        dists[a].n = 0
    try:
        for s in range(n_out):
            prob = coef[s]
            for f in range(n_flat):
                c = opp_counts[s, f]
                if c:
                    prob *= pow(alpha[f], <double> c)
            q[s] = prob

        for a in range(m):
            dist_init(&trial, n_out)
            for s in range(n_out):
                if q[s] > 0.0:
                    dist_add(&trial, pay[a, s], q[s])
            dist_init(&cur, trial.n)
            for x in range(trial.n):
                dist_add(&cur, trial.v[x], trial.p[x])
            for it in range(k - 1):
                dist_init(&nxt, cur.n * trial.n)
                for x in range(cur.n):
                    for y in range(trial.n):
                        dist_add(&nxt, cur.v[x] + trial.v[y], cur.p[x] * trial.p[y])
                dist_free(&cur)
                cur = nxt
            dist_free(&trial)
            dists[a] = cur

        total = 1.0
        for a in range(m):
            total *= dists[a].n
        if total > cap:
            return w_arr, CAP_EXCEEDED

        for a in range(m):
            idx[a] = 0
        while True:
            prob = 1.0
            nwin = 0
            best = 0
            for a in range(m):
                prob *= dists[a].p[idx[a]]
                v = dists[a].v[idx[a]]
                if nwin == 0 or v > best:
                    best = v
                    winners[0] = <int> a
                    nwin = 1
                elif v == best:
                    winners[nwin] = <int> a
                    nwin += 1
            if nwin == 1:
                w[winners[0]] += prob
            elif tie_mode == 0:
                share = prob / nwin
                for t in range(nwin):
                    w[winners[t]] += share
            else:
                top = winners[0]
                for t in range(1, nwin):
                    if rank[winners[t]] < rank[top]:
                        top = winners[t]
                w[top] += prob
            a = m - 1
            while a >= 0:
                idx[a] += 1
                if idx[a] < dists[a].n:
                    break
                idx[a] = 0
                a -= 1
            if a < 0:
                break
        return w_arr, OK
    finally:
        for a in range(m):
            dist_free(&dists[a])
        free(q)
        free(dists)
        free(idx)
        free(winners)


cdef inline Py_ssize_t draw(long long[:] counts, Py_ssize_t off, Py_ssize_t size,
                            long long pop_n, double u) noexcept nogil:
    cdef long long target = <long long> (u * pop_n)
    cdef long long acc = 0
    cdef Py_ssize_t b
    for b in range(size):
        acc += counts[off + b]
        if target < acc:
            return b
    return size - 1


def run_events(long long[:] counts, const long long[:] offsets, const long long[:] sizes,
               const long long[:] pop_n, const long long[:, :] slot_pop,
               const long long[:, :] strides, const long long[:] pay,
               const long long[:] pay_off, int k, int tie_mode,
               const long long[:] rank, const double[:, :] uniforms):
    cdef Py_ssize_t n_pop = offsets.shape[0], n_slots = slot_pop.shape[1]
    cdef Py_ssize_t n_events = uniforms.shape[0]
    cdef Py_ssize_t e, p, off, m, a, t, s, j, b, col, old, new, maxm = 0
    cdef long long tot, best, code, base
    cdef int nwin
    cdef long long *ncode = <long long *> malloc(n_pop * sizeof(long long))
    for p in range(n_pop):
        if sizes[p] > maxm:
            maxm = sizes[p]
    cdef long long *totals = <long long *> malloc(maxm * sizeof(long long))
    cdef Py_ssize_t *winners = <Py_ssize_t *> malloc(maxm * sizeof(Py_ssize_t))
    if ncode == NULL or totals == NULL or winners == NULL:
        free(ncode); free(totals); free(winners)
        raise MemoryError()
    for p in range(n_pop):
        ncode[p] = 1
        for s in range(n_slots):
            ncode[p] *= sizes[slot_pop[p, s]]
    with nogil:
        for e in range(n_events):
            p = <Py_ssize_t> (uniforms[e, 0] * n_pop)
            if p >= n_pop:
                p = n_pop - 1
            off = offsets[p]
            m = sizes[p]
            old = draw(counts, off, m, pop_n[p], uniforms[e, 1])
            col = 3
            base = pay_off[p]
            for a in range(m):
                tot = 0
                for t in range(k):
                    code = 0
                    for s in range(n_slots):
                        j = slot_pop[p, s]
                        b = draw(counts, offsets[j], sizes[j], pop_n[j], uniforms[e, col])
                        col += 1
                        code += b * strides[p, s]
                    tot += pay[base + a * ncode[p] + code]
                totals[a] = tot
            best = totals[0]
            nwin = 1
            winners[0] = 0
            for a in range(1, m):
                if totals[a] > best:
                    best = totals[a]
                    winners[0] = a
                    nwin = 1
                elif totals[a] == best:
                    winners[nwin] = a
                    nwin += 1
            if nwin == 1:
                new = winners[0]
            elif tie_mode == 0:
                t = <Py_ssize_t> (uniforms[e, 2] * nwin)
                if t >= nwin:
                    t = nwin - 1
                new = winners[t]
            else:
                new = winners[0]
                for t in range(1, nwin):
                    if rank[off + winners[t]] < rank[off + new]:
                        new = winners[t]
            counts[off + old] -= 1
            counts[off + new] += 1
    free(ncode)
    free(totals)
    free(winners)
