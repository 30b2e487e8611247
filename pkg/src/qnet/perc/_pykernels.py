"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures and return conventions; selected automatically when the
extension is not built (or when ``QNET_PURE_PYTHON`` is set).
"""

import numpy as np


class _WindingUnionFind:
    __slots__ = ("parent", "size", "ox", "oy", "wrap")

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n
        self.ox = [0] * n
        self.oy = [0] * n
        self.wrap = [0] * n

    def find(self, a):
        parent, ox, oy = self.parent, self.ox, self.oy
        root = a
        sx = sy = 0
        while parent[root] != root:
            sx += ox[root]
            sy += oy[root]
            root = parent[root]
        while parent[a] != root:
            nxt = parent[a]
            tx, ty = ox[a], oy[a]
            ox[a], oy[a] = sx, sy
            parent[a] = root
            sx -= tx
            sy -= ty
            a = nxt
        return root

    def union(self, u, v, wx, wy):
        ru = self.find(u)
        rv = self.find(v)
        parent, ox, oy, size, wrap = self.parent, self.ox, self.oy, self.size, self.wrap
        uxo, uyo = (0, 0) if parent[u] == u else (ox[u], oy[u])
        vxo, vyo = (0, 0) if parent[v] == v else (ox[v], oy[v])
        dx = uxo + wx - vxo
        dy = uyo + wy - vyo
        if ru == rv:
            if dx:
                wrap[ru] |= 1
            if dy:
                wrap[ru] |= 2
            return ru
        if size[ru] < size[rv]:
            parent[ru] = rv
            ox[ru], oy[ru] = -dx, -dy
            size[rv] += size[ru]
            wrap[rv] |= wrap[ru]
            return rv
        parent[rv] = ru
        ox[rv], oy[rv] = dx, dy
        size[ru] += size[rv]
        wrap[ru] |= wrap[rv]
        return ru


def label_bonds(n, eu, ev, wx, wy, open_mask):
    uf = _WindingUnionFind(n)
    for e in np.flatnonzero(open_mask).tolist():
        uf.union(int(eu[e]), int(ev[e]), int(wx[e]), int(wy[e]))
    for i in range(n):
        uf.find(i)
    return np.asarray(uf.parent, dtype=np.intp), np.asarray(uf.wrap, dtype=np.int8)


def _track(first, anyw, w, step):
    if first[0] < 0 and anyw & 1:
        first[0] = step
    if first[1] < 0 and anyw & 2:
        first[1] = step
    if first[2] < 0:
        first[2] = step
    if first[3] < 0 and w == 3:
        first[3] = step


def nz_bond_sweep(n, eu, ev, wx, wy, order, ref):
    uf = _WindingUnionFind(n)
    m = len(order)
    largest = np.empty(m + 1, dtype=np.intp)
    first = [-1] * 5
    big = 1 if n > 0 else 0
    anyw = 0
    largest[0] = big
    eu, ev, wx, wy = eu.tolist(), ev.tolist(), wx.tolist(), wy.tolist()
    for k, e in enumerate(order.tolist()):
        r = uf.union(eu[e], ev[e], wx[e], wy[e])
        if uf.size[r] > big:
            big = uf.size[r]
        largest[k + 1] = big
        w = uf.wrap[r]
        if w:
            anyw |= w
            _track(first, anyw, w, k + 1)
        if first[4] < 0 and ref >= 0 and anyw and uf.wrap[uf.find(ref)]:
            first[4] = k + 1
    return largest, np.asarray(first, dtype=np.intp)


def nz_site_sweep(n, indptr, nbr, nwx, nwy, order, ref):
    uf = _WindingUnionFind(n)
    m = len(order)
    occ = [False] * n
    largest = np.empty(m + 1, dtype=np.intp)
    first = [-1] * 5
    big = 0
    anyw = 0
    largest[0] = 0
    indptr, nbr, nwx, nwy = indptr.tolist(), nbr.tolist(), nwx.tolist(), nwy.tolist()
    for k, s in enumerate(order.tolist()):
        occ[s] = True
        big = max(big, 1)
        for j in range(indptr[s], indptr[s + 1]):
            t = nbr[j]
            if occ[t]:
                r = uf.union(s, t, nwx[j], nwy[j])
                if uf.size[r] > big:
                    big = uf.size[r]
                w = uf.wrap[r]
                if w:
                    anyw |= w
                    _track(first, anyw, w, k + 1)
        largest[k + 1] = big
        if first[4] < 0 and ref >= 0 and anyw and occ[ref] and uf.wrap[uf.find(ref)]:
            first[4] = k + 1
    return largest, np.asarray(first, dtype=np.intp)
