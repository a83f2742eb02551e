# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Mirrors ``_kernels_py`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

ctypedef cnp.intp_t idx_t


def relation_accuracy(const double[:, ::1] dsrc, const double[:, ::1] ddst,
                      const idx_t[::1] src, const idx_t[::1] dst,
                      Py_ssize_t start, Py_ssize_t stop):
    cdef Py_ssize_t i, j, k = src.shape[0]
    cdef double best = 0.0, v
    with nogil:
        for i in range(start, stop):
            for j in range(k):
                v = fabs(ddst[dst[i], dst[j]] - dsrc[src[i], src[j]])
                if v > best:
                    best = v
    return best


def directed_hausdorff(const double[:, ::1] da, const double[:, ::1] db,
                       const idx_t[::1] a1, const idx_t[::1] b1,
                       const idx_t[::1] a2, const idx_t[::1] b2,
                       double wa, Py_ssize_t start, Py_ssize_t stop):
    cdef Py_ssize_t i, j, k2 = a2.shape[0]
    cdef double best = 0.0, mn, v
    with nogil:
        for i in range(start, stop):
            mn = INFINITY
            for j in range(k2):
                v = wa * da[a1[i], a2[j]] + db[b1[i], b2[j]]
                if v < mn:
                    mn = v
                    if mn <= best:
                        break
            if mn > best and k2 > 0:
                best = mn
    return best


ctypedef struct Cand:
    double val
    long mask


cdef int _cmp_cand(const void* a, const void* b) noexcept nogil:
    cdef const Cand* ca = <const Cand*>a
    cdef const Cand* cb = <const Cand*>b
    if ca.val < cb.val:
        return -1
    if ca.val > cb.val:
        return 1
    if ca.mask < cb.mask:
        return -1
    if ca.mask > cb.mask:
        return 1
    return 0


ctypedef struct Search:
    int n
    int m
    int nx
    const double* dx
    const double* dy
    const long* order
    const double* internal
    long full
    long nsub
    double best
    int found
    long* best_masks
    long* masks
    long* px
    long* py
    int npairs
    long nodes
    long budget
    int complete
    double* cost
    double* sub
    Cand* cands


cdef inline int _lowbit(long mask) noexcept nogil:
    cdef int i = 0
    while not (mask >> i) & 1:
        i += 1
    return i


cdef void _rec(Search* s, int depth, double partial, long covered) noexcept nogil:
    cdef int n = s.n, m = s.m, nx = s.nx
    cdef int r, y, p, R, yl, k, ncand, i
    cdef long mask, x, xr
    cdef double c, mn, bound, v, sc
    cdef double* C
    cdef double* sub
    cdef Cand* cands
    if depth == n:
        if covered == s.full and partial < s.best:
            s.best = partial
            s.found = 1
            for i in range(nx):
                s.best_masks[i] = s.masks[i]
        return
    R = n - depth
    C = s.cost + depth * n * m
    bound = partial
    for r in range(R):
        xr = s.order[depth + r]
        mn = INFINITY
        for y in range(m):
            c = 0.0
            for p in range(s.npairs):
                v = fabs(s.dy[y * m + s.py[p]] - s.dx[xr * nx + s.px[p]])
                if v > c:
                    c = v
            C[r * m + y] = c
            if c < mn:
                mn = c
        if mn > bound:
            bound = mn
    for y in range(m):
        if not (covered >> y) & 1:
            mn = INFINITY
            for r in range(R):
                if C[r * m + y] < mn:
                    mn = C[r * m + y]
            if mn > bound:
                bound = mn
    if bound >= s.best:
        return

    sub = s.sub + depth * s.nsub
    cands = s.cands + depth * s.nsub
    sub[0] = 0.0
    ncand = 0
    for mask in range(1, s.nsub):
        yl = _lowbit(mask)
        sc = sub[mask ^ (1L << yl)]
        if C[yl] > sc:
            sc = C[yl]
        sub[mask] = sc
        v = sc
        if s.internal[mask] > v:
            v = s.internal[mask]
        if partial > v:
            v = partial
        if v >= s.best:
            continue
        if R == 1 and (covered | mask) != s.full:
            continue
        cands[ncand].val = v
        cands[ncand].mask = mask
        ncand += 1
    qsort(cands, ncand, sizeof(Cand), _cmp_cand)

    x = s.order[depth]
    for i in range(ncand):
        v = cands[i].val
        mask = cands[i].mask
        if v >= s.best:
            break
        if s.nodes >= s.budget:
            s.complete = 0
            return
        s.nodes += 1
        s.masks[x] = mask
        k = 0
        for y in range(m):
            if (mask >> y) & 1:
                s.px[s.npairs + k] = x
                s.py[s.npairs + k] = y
                k += 1
        s.npairs += k
        _rec(s, depth + 1, v, covered | mask)
        s.npairs -= k
        if not s.complete:
            return


def bnb_search(dx, dy, order, double incumbent, long budget):
    from ._kernels_py import subset_diameters
    cdef const double[:, ::1] dxv = np.ascontiguousarray(dx, dtype=np.float64)
    cdef const double[:, ::1] dyv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef const long[::1] ordv = np.ascontiguousarray(order, dtype=np.int_)
    cdef const double[::1] internal = np.ascontiguousarray(subset_diameters(np.asarray(dyv)))
    cdef int n = ordv.shape[0], m = dyv.shape[0], nx = dxv.shape[0]
    cdef long nsub = 1L << m
    cdef long[::1] best_masks = np.zeros(nx, dtype=np.int_)
    cdef long[::1] masks = np.zeros(nx, dtype=np.int_)
    cdef long[::1] px = np.zeros(max(1, n * m), dtype=np.int_)
    cdef long[::1] py = np.zeros(max(1, n * m), dtype=np.int_)
    cdef double[::1] cost = np.zeros(max(1, n * n * m))
    cdef double[::1] sub = np.zeros(max(1, n * nsub))
    cdef Search s
    cdef Cand* cands = <Cand*>malloc(max(1, n * nsub) * sizeof(Cand))
    if cands == NULL:
        raise MemoryError()
    s.n = n
    s.m = m
    s.nx = nx
    s.dx = &dxv[0, 0]
    s.dy = &dyv[0, 0]
    s.order = &ordv[0]
    s.internal = &internal[0]
    s.full = nsub - 1
    s.nsub = nsub
    s.best = incumbent
    s.found = 0
    s.best_masks = &best_masks[0]
    s.masks = &masks[0]
    s.px = &px[0]
    s.py = &py[0]
    s.npairs = 0
    s.nodes = 0
    s.budget = budget
    s.complete = 1
    s.cost = &cost[0]
    s.sub = &sub[0]
    s.cands = cands
    try:
        with nogil:
            _rec(&s, 0, 0.0, 0)
    finally:
        free(cands)
    result_masks = [int(v) for v in best_masks] if s.found else None
    return s.best, result_masks, int(s.nodes), bool(s.complete)
