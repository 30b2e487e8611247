# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled union-find kernels for bond and site percolation.

Every node carries the winding vector from itself to its parent, so a
cluster that closes a loop around the torus is detected at the union that
closes it.  Winding components are counted in boundary crossings.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, int[::1] ox, int[::1] oy,
                             Py_ssize_t a) noexcept nogil:
    # two passes: locate the root, then compress while accumulating offsets
    cdef Py_ssize_t root = a
    cdef int sx = 0, sy = 0
    while parent[root] != root:
        sx += ox[root]
        sy += oy[root]
        root = parent[root]
    cdef Py_ssize_t nxt
    cdef int tx, ty
    while parent[a] != root:
        nxt = parent[a]
        tx = ox[a]
        ty = oy[a]
        ox[a] = sx
        oy[a] = sy
        parent[a] = root
        sx -= tx
        sy -= ty
        a = nxt
    return root


cdef inline void _offset(Py_ssize_t[::1] parent, int[::1] ox, int[::1] oy,
                         Py_ssize_t a, int* px, int* py) noexcept nogil:
    # after _find(a) the path is compressed, so one hop reaches the root
    if parent[a] == a:
        px[0] = 0
        py[0] = 0
    else:
        px[0] = ox[a]
        py[0] = oy[a]


cdef inline int _union(Py_ssize_t[::1] parent, Py_ssize_t[::1] size,
                       int[::1] ox, int[::1] oy, char[::1] wrap,
                       Py_ssize_t u, Py_ssize_t v, int wx, int wy) noexcept nogil:
    """Join the clusters of u and v along an edge with winding (wx, wy).

    Returns the root of the merged cluster.  wrap[root] bit 1 = x winding,
    bit 2 = y winding.
    """
    cdef Py_ssize_t ru = _find(parent, ox, oy, u)
    cdef Py_ssize_t rv = _find(parent, ox, oy, v)
    cdef int uxo, uyo, vxo, vyo, dx, dy
    _offset(parent, ox, oy, u, &uxo, &uyo)
    _offset(parent, ox, oy, v, &vxo, &vyo)
    # winding from ru to rv through the new edge
    dx = uxo + wx - vxo
    dy = uyo + wy - vyo
    if ru == rv:
        if dx != 0:
            wrap[ru] |= 1
        if dy != 0:
            wrap[ru] |= 2
        return ru
    if size[ru] < size[rv]:
        parent[ru] = rv
        ox[ru] = -dx
        oy[ru] = -dy
        size[rv] += size[ru]
        wrap[rv] |= wrap[ru]
        return rv
    parent[rv] = ru
    ox[rv] = dx
    oy[rv] = dy
    size[ru] += size[rv]
    wrap[ru] |= wrap[rv]
    return ru


def label_bonds(Py_ssize_t n, const int[::1] eu, const int[::1] ev,
                const signed char[::1] wx, const signed char[::1] wy,
                const unsigned char[::1] open_mask):
    """Cluster the open edges.

    Returns ``(roots, wrap)`` where ``roots[i]`` is the cluster root of node
    ``i`` and ``wrap[r]`` holds the winding bits of the cluster rooted at r.
    """
    cdef Py_ssize_t m = eu.shape[0]
    parent_arr = np.arange(n, dtype=np.intp)
    size_arr = np.ones(n, dtype=np.intp)
    ox_arr = np.zeros(n, dtype=np.intc)
    oy_arr = np.zeros(n, dtype=np.intc)
    wrap_arr = np.zeros(n, dtype=np.int8)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] size = size_arr
    cdef int[::1] ox = ox_arr
    cdef int[::1] oy = oy_arr
    cdef char[::1] wrap = wrap_arr
    cdef Py_ssize_t e, i
    with nogil:
        for e in range(m):
            if open_mask[e]:
                _union(parent, size, ox, oy, wrap, eu[e], ev[e], wx[e], wy[e])
        for i in range(n):
            _find(parent, ox, oy, i)
    return parent_arr, wrap_arr


def nz_bond_sweep(Py_ssize_t n, const int[::1] eu, const int[::1] ev,
                  const signed char[::1] wx, const signed char[::1] wy,
                  const long[::1] order, Py_ssize_t ref):
    """Newman-Ziff sweep: add edges one at a time in ``order``.

    Returns ``(largest, first)`` where ``largest[k]`` is the largest cluster
    size after k edges and ``first`` holds the edge count at which, for the
    first time, (x wrap, y wrap, any wrap, both wraps, ref in a wrapping
    cluster) held; -1 when never reached.
    """
    cdef Py_ssize_t m = order.shape[0]
    parent_arr = np.arange(n, dtype=np.intp)
    size_arr = np.ones(n, dtype=np.intp)
    ox_arr = np.zeros(n, dtype=np.intc)
    oy_arr = np.zeros(n, dtype=np.intc)
    wrap_arr = np.zeros(n, dtype=np.int8)
    largest_arr = np.empty(m + 1, dtype=np.intp)
    first_arr = np.full(5, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] size = size_arr
    cdef int[::1] ox = ox_arr
    cdef int[::1] oy = oy_arr
    cdef char[::1] wrap = wrap_arr
    cdef Py_ssize_t[::1] largest = largest_arr
    cdef Py_ssize_t[::1] first = first_arr
    cdef Py_ssize_t k, e, r, big = 1 if n > 0 else 0
    cdef char w, anyw = 0
    largest[0] = big
    with nogil:
        for k in range(m):
            e = order[k]
            r = _union(parent, size, ox, oy, wrap, eu[e], ev[e], wx[e], wy[e])
            if size[r] > big:
                big = size[r]
            largest[k + 1] = big
            w = wrap[r]
            if w:
                anyw |= w
                if first[0] < 0 and (anyw & 1):
                    first[0] = k + 1
                if first[1] < 0 and (anyw & 2):
                    first[1] = k + 1
                if first[2] < 0:
                    first[2] = k + 1
                if first[3] < 0 and w == 3:
                    first[3] = k + 1
            if first[4] < 0 and ref >= 0 and anyw:
                if wrap[_find(parent, ox, oy, ref)]:
                    first[4] = k + 1
    return largest_arr, first_arr


def nz_site_sweep(Py_ssize_t n, const long[::1] indptr, const int[::1] nbr,
                  const signed char[::1] nwx, const signed char[::1] nwy,
                  const long[::1] order, Py_ssize_t ref):
    """Newman-Ziff site sweep over a CSR adjacency with per-arc windings.

    Same return convention as :func:`nz_bond_sweep`, indexed by the number
    of occupied sites.
    """
    cdef Py_ssize_t m = order.shape[0]
    parent_arr = np.arange(n, dtype=np.intp)
    size_arr = np.ones(n, dtype=np.intp)
    ox_arr = np.zeros(n, dtype=np.intc)
    oy_arr = np.zeros(n, dtype=np.intc)
    wrap_arr = np.zeros(n, dtype=np.int8)
    occ_arr = np.zeros(n, dtype=np.int8)
    largest_arr = np.empty(m + 1, dtype=np.intp)
    first_arr = np.full(5, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] size = size_arr
    cdef int[::1] ox = ox_arr
    cdef int[::1] oy = oy_arr
    cdef char[::1] wrap = wrap_arr
    cdef char[::1] occ = occ_arr
    cdef Py_ssize_t[::1] largest = largest_arr
    cdef Py_ssize_t[::1] first = first_arr
    cdef Py_ssize_t k, s, j, t, r, big = 0
    cdef char w, anyw = 0
    largest[0] = 0
    with nogil:
        for k in range(m):
            s = order[k]
            occ[s] = 1
            r = s
            if big < 1:
                big = 1
            for j in range(indptr[s], indptr[s + 1]):
                t = nbr[j]
                if occ[t]:
                    r = _union(parent, size, ox, oy, wrap, s, t, nwx[j], nwy[j])
                    if size[r] > big:
                        big = size[r]
                    w = wrap[r]
                    if w:
                        anyw |= w
                        if first[0] < 0 and (anyw & 1):
                            first[0] = k + 1
                        if first[1] < 0 and (anyw & 2):
                            first[1] = k + 1
                        if first[2] < 0:
                            first[2] = k + 1
                        if first[3] < 0 and w == 3:
                            first[3] = k + 1
            largest[k + 1] = big
            if first[4] < 0 and ref >= 0 and anyw and occ[ref]:
                if wrap[_find(parent, ox, oy, ref)]:
                    first[4] = k + 1
    return largest_arr, first_arr
