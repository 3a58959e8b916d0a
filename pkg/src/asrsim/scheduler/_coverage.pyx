# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled max-coverage profile over 64-bit UE masks.

Same search order and incumbent rule as ``_coverage_py.coverage_profile``,
so both return identical results.
"""
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t

cdef enum:
    MAXD = 64

cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long x) nogil


cdef struct State:
    uint64_t* masks
    int n
    int max_sets
    int limit
    int best[MAXD + 1]
    int choice[MAXD + 1][MAXD]
    int chosen[MAXD]
    int* gains


cdef void record(State* st, int depth, int count) nogil:
    cdef int d, j
    for d in range(depth, st.max_sets + 1):
        if count > st.best[d]:
            st.best[d] = count
            for j in range(depth):
                st.choice[d][j] = st.chosen[j]
            for j in range(depth, MAXD):
                st.choice[d][j] = -1


cdef bint promising(State* st, int start, uint64_t covered, int count, int depth) nogil:
    # top-r marginal gains by partial insertion into a descending buffer
    cdef int r = st.max_sets - depth
    cdef int filled = 0
    cdef int i, j, g, acc, cap
    for i in range(start, st.n):
        g = popcount64(st.masks[i] & ~covered)
        if filled < r:
            j = filled
            filled += 1
        elif g > st.gains[r - 1]:
            j = r - 1
        else:
            continue
        while j > 0 and st.gains[j - 1] < g:
            st.gains[j] = st.gains[j - 1]
            j -= 1
        st.gains[j] = g
    acc = count
    for j in range(filled):
        acc += st.gains[j]
        cap = acc if acc < st.limit else st.limit
        if cap > st.best[depth + j + 1]:
            return True
    return False


cdef void dfs(State* st, int start, uint64_t covered, int count, int depth) nogil:
    cdef int i
    cdef uint64_t gain
    if count > st.best[depth]:
        record(st, depth, count)
    if depth == st.max_sets or count == st.limit:
        return
    if not promising(st, start, covered, count, depth):
        return
    for i in range(start, st.n):
        gain = st.masks[i] & ~covered
        if gain == 0:
            continue
        st.chosen[depth] = i
        dfs(st, i + 1, covered | st.masks[i], count + popcount64(gain), depth + 1)


def coverage_profile(masks, int max_sets):
    """See ``asrsim.scheduler._coverage_py.coverage_profile``; masks must fit in 64 bits."""
    cdef int n = len(masks)
    cdef int d, j, i
    cdef uint64_t union_all = 0
    cdef State* st
    if max_sets > MAXD:
        raise ValueError("max_sets > 64 is not supported by the compiled kernel")
    best = [0] * (max(max_sets, 0) + 1)
    choice = [()] * (max(max_sets, 0) + 1)
    if n == 0 or max_sets <= 0:
        return best, choice
    st = <State*> malloc(sizeof(State))
    if st == NULL:
        raise MemoryError()
    st.masks = <uint64_t*> malloc(n * sizeof(uint64_t))
    st.gains = <int*> malloc((max_sets + 1) * sizeof(int))
    if st.masks == NULL or st.gains == NULL:
        free(st.masks)
        free(st.gains)
        free(st)
        raise MemoryError()
    try:
        for i in range(n):
            st.masks[i] = <uint64_t> masks[i]
            union_all |= st.masks[i]
        st.n = n
        st.max_sets = max_sets
        st.limit = popcount64(union_all)
        for d in range(max_sets + 1):
            st.best[d] = 0
            for j in range(MAXD):
                st.choice[d][j] = -1
        with nogil:
            dfs(st, 0, 0, 0, 0)
        for d in range(max_sets + 1):
            best[d] = st.best[d]
            sel = []
            for j in range(MAXD):
                if st.choice[d][j] < 0:
                    break
                sel.append(st.choice[d][j])
            choice[d] = tuple(sel)
    finally:
        free(st.masks)
        free(st.gains)
        free(st)
    return best, choice
