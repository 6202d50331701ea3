# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.  Same contract and operation order as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.int64_t i64

cdef i64 INF = (2 ** 63 - 1) // 4


cdef Py_ssize_t _sssp(const i64[:, ::1] w, Py_ssize_t s, i64* dist, i64* order,
                      i64* ptr, i64* idx) noexcept nogil:
    """Fill dist/order/ptr/idx; return number of settled vertices.

    ``idx`` must hold n*n entries.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t i, v, t, k = 0, m = 0
    cdef i64 best, wt, nd
    cdef char* done = <char*> malloc(n)
    for i in range(n):
        dist[i] = INF
        done[i] = 0
    dist[s] = 0
    while k < n:
        best = INF
        v = -1
        for i in range(n):
            if not done[i] and dist[i] < best:
                best = dist[i]
                v = i
        if v < 0:
            break
        done[v] = 1
        order[k] = v
        k += 1
        for i in range(n):
            wt = w[v, i]
            if wt >= 0 and not done[i]:
                nd = best + wt
                if nd < dist[i]:
                    dist[i] = nd
    free(done)
    ptr[0] = 0
    for t in range(n):
        if t != s and dist[t] < INF:
            for v in range(n):
                wt = w[v, t]
                if wt >= 0 and dist[v] < INF and dist[v] + wt == dist[t]:
                    idx[m] = v
                    m += 1
        ptr[t + 1] = m
    for i in range(n):
        if dist[i] >= INF:
            dist[i] = -1
    return k


def sssp(weights, Py_ssize_t source):
    cdef const i64[:, ::1] w = np.ascontiguousarray(weights, dtype=np.int64)
    cdef Py_ssize_t n = w.shape[0]
    dist = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    ptr = np.empty(n + 1, dtype=np.int64)
    idx = np.empty(max(n * n, 1), dtype=np.int64)
    cdef i64[::1] d = dist, o = order, p = ptr, x = idx
    cdef Py_ssize_t k
    with nogil:
        k = _sssp(w, source, &d[0], &o[0], &p[0], &x[0])
    return dist, order[:k].copy(), ptr, idx[:ptr[n]].copy()


cdef struct Dag:
    Py_ssize_t n, k
    i64* dist
    i64* order
    i64* pptr
    i64* pidx
    i64* sptr
    i64* sidx


cdef int _dag_build(const i64[:, ::1] w, Py_ssize_t s, Dag* g) noexcept nogil:
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t t, e, v
    g.n = n
    g.dist = <i64*> malloc(n * sizeof(i64))
    g.order = <i64*> malloc(n * sizeof(i64))
    g.pptr = <i64*> malloc((n + 1) * sizeof(i64))
    g.pidx = <i64*> malloc(n * n * sizeof(i64) + sizeof(i64))
    g.sptr = <i64*> malloc((n + 1) * sizeof(i64))
    g.k = _sssp(w, s, g.dist, g.order, g.pptr, g.pidx)
    cdef Py_ssize_t m = g.pptr[n]
    g.sidx = <i64*> malloc(m * sizeof(i64) + sizeof(i64))
    cdef i64* fill = <i64*> malloc(n * sizeof(i64))
    for v in range(n + 1):
        g.sptr[v] = 0
    for e in range(m):
        g.sptr[g.pidx[e] + 1] += 1
    for v in range(n):
        g.sptr[v + 1] += g.sptr[v]
    for v in range(n):
        fill[v] = g.sptr[v]
    # targets ascending, so each successor list is ascending
    for t in range(n):
        for e in range(g.pptr[t], g.pptr[t + 1]):
            v = g.pidx[e]
            g.sidx[fill[v]] = t
            fill[v] += 1
    free(fill)
    return 0


cdef void _dag_free(Dag* g) noexcept nogil:
    free(g.dist)
    free(g.order)
    free(g.pptr)
    free(g.pidx)
    free(g.sptr)
    free(g.sidx)


cdef void _source_load(const i64[:, ::1] w, Py_ssize_t s, double* acc) noexcept nogil:
    cdef Dag g
    _dag_build(w, s, &g)
    cdef Py_ssize_t n = g.n
    cdef Py_ssize_t t, a, b, v, x, e, top, live
    cdef double share
    cdef char* anc = <char*> malloc(n)
    cdef double* flow = <double*> malloc(n * sizeof(double))
    cdef i64* stack = <i64*> malloc(n * sizeof(i64))
    for v in range(n):
        acc[v] = 0.0
        anc[v] = 0
        flow[v] = 0.0
    for t in range(n):
        if t == s or g.dist[t] < 0:
            continue
        for a in range(g.k):
            v = g.order[a]
            anc[v] = 0
            flow[v] = 0.0
        anc[t] = 1
        top = 0
        stack[top] = t
        top += 1
        while top > 0:
            top -= 1
            x = stack[top]
            for e in range(g.pptr[x], g.pptr[x + 1]):
                v = g.pidx[e]
                if not anc[v]:
                    anc[v] = 1
                    stack[top] = v
                    top += 1
        flow[s] = 1.0
        for a in range(g.k):
            v = g.order[a]
            if v == t or not anc[v]:
                continue
            live = 0
            for e in range(g.sptr[v], g.sptr[v + 1]):
                if anc[g.sidx[e]]:
                    live += 1
            share = flow[v] / live
            for e in range(g.sptr[v], g.sptr[v + 1]):
                x = g.sidx[e]
                if anc[x]:
                    flow[x] += share
        for a in range(g.k):
            v = g.order[a]
            if anc[v] and v != s and v != t:
                acc[v] += flow[v]
    free(anc)
    free(flow)
    free(stack)
    _dag_free(&g)


cdef void _source_dependency(const i64[:, ::1] w, Py_ssize_t s, double* delta) noexcept nogil:
    cdef Dag g
    _dag_build(w, s, &g)
    cdef Py_ssize_t n = g.n
    cdef Py_ssize_t a, v, x, e
    cdef double tot, coeff
    cdef double* sigma = <double*> malloc(n * sizeof(double))
    for v in range(n):
        sigma[v] = 0.0
        delta[v] = 0.0
    sigma[s] = 1.0
    for a in range(g.k):
        x = g.order[a]
        if x == s:
            continue
        tot = 0.0
        for e in range(g.pptr[x], g.pptr[x + 1]):
            tot += sigma[g.pidx[e]]
        sigma[x] = tot
    for a in range(g.k - 1, -1, -1):
        x = g.order[a]
        coeff = (1.0 + delta[x]) / sigma[x]
        for e in range(g.pptr[x], g.pptr[x + 1]):
            v = g.pidx[e]
            delta[v] += sigma[v] * coeff
    delta[s] = 0.0
    free(sigma)
    _dag_free(&g)


def source_load(weights, Py_ssize_t source):
    cdef const i64[:, ::1] w = np.ascontiguousarray(weights, dtype=np.int64)
    out = np.zeros(w.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        _source_load(w, source, &o[0])
    return out


def source_dependency(weights, Py_ssize_t source):
    cdef const i64[:, ::1] w = np.ascontiguousarray(weights, dtype=np.int64)
    out = np.zeros(w.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        _source_dependency(w, source, &o[0])
    return out
