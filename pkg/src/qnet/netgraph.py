"""Network topologies, lattice rewrites and path search.

A :class:`Network` is an immutable multigraph on dense integer nodes.  Every
edge carries a multiplicity (number of parallel pairs), a payload link state
and, on tori, a winding vector counting how many times the edge crosses each
periodic boundary when walked from ``eu`` to ``ev``.  The winding vectors are
what the percolation kernels use to tell a cluster that wraps the torus from
one that merely touches itself.

Lattice node numbering is row-major: node ``j * L + i`` sits at column ``i``,
row ``j``.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from . import qstate
from .qstate import BitPhaseLink, PureLink, WernerLink

PATH_TOL = 1e-12


# -- core type ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Network:
    n: int
    eu: np.ndarray
    ev: np.ndarray
    mult: np.ndarray
    payloads: tuple
    winding: np.ndarray
    topology: str = "custom"
    boundary: str = "open"
    shape: tuple = ()
    positions: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.eu)
        if len(self.ev) != m or len(self.mult) != m or len(self.payloads) != m:
            raise ValueError("edge arrays have inconsistent lengths")
        if self.winding.shape[0] != m:
            raise ValueError("winding array has the wrong length")
        if m and np.any(self.eu == self.ev):
            raise ValueError("self-loops are not allowed")
        if m and np.any(self.mult < 1):
            raise ValueError("edge multiplicity must be >= 1")
        if m and (min(self.eu.min(), self.ev.min()) < 0 or max(self.eu.max(), self.ev.max()) >= self.n):
            raise ValueError("edge endpoint out of range")
        for arr in (self.eu, self.ev, self.mult, self.winding):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n, edges, mult=None, payloads=None, winding=None, **meta):
        edges = np.asarray(edges, dtype=np.int32).reshape(-1, 2)
        m = len(edges)
        mult = np.ones(m, np.int32) if mult is None else np.asarray(mult, np.int32)
        if payloads is None or not isinstance(payloads, (list, tuple)):
            payloads = (payloads,) * m
        winding = np.zeros((m, 2), np.int8) if winding is None else np.asarray(winding, np.int8).reshape(m, -1)
        return cls(int(n), edges[:, 0].copy(), edges[:, 1].copy(), mult, tuple(payloads), winding, **meta)

    @property
    def m(self) -> int:
        return len(self.eu)

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.eu.tolist(), self.ev.tolist()))

    def degree(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.eu, self.ev]), minlength=self.n)

    def degree_histogram(self) -> dict[int, int]:
        vals, counts = np.unique(self.degree(), return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    @cached_property
    def csr(self):
        """(indptr, neighbour, edge index, arc winding) with arcs in both
        directions, sorted by (node, neighbour, edge)."""
        src = np.concatenate([self.eu, self.ev]).astype(np.int64)
        dst = np.concatenate([self.ev, self.eu]).astype(np.int32)
        eid = np.concatenate([np.arange(self.m), np.arange(self.m)]).astype(np.int64)
        wind = np.concatenate([self.winding, -self.winding]).astype(np.int8)
        order = np.lexsort((eid, dst, src))
        indptr = np.zeros(self.n + 1, np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr, dst[order], eid[order], np.ascontiguousarray(wind[order])

    def neighbors(self, u: int) -> list[int]:
        indptr, nbr, _, _ = self.csr
        return nbr[indptr[u] : indptr[u + 1]].tolist()

    def incident(self, u: int) -> list[int]:
        indptr, _, eid, _ = self.csr
        return eid[indptr[u] : indptr[u + 1]].tolist()

    def other(self, e: int, u: int) -> int:
        a, b = int(self.eu[e]), int(self.ev[e])
        return b if u == a else a

    def with_payloads(self, payloads, mult=None) -> "Network":
        if not isinstance(payloads, (list, tuple)):
            payloads = (payloads,) * self.m
        return replace(self, payloads=tuple(payloads), mult=self.mult if mult is None else np.asarray(mult, np.int32))

    def to_networkx(self):
        import networkx as nx

        g = nx.MultiGraph()
        g.add_nodes_from(range(self.n))
        for e, (u, v) in enumerate(self.edges()):
            g.add_edge(u, v, key=e, mult=int(self.mult[e]))
        return g


def _lattice(n, edges, winding, payload, mult, topology, boundary, shape, positions):
    m = len(edges)
    return Network.from_edges(
        n,
        np.asarray(edges, np.int32).reshape(-1, 2),
        mult=np.full(m, mult, np.int32),
        payloads=(payload,) * m,
        winding=np.asarray(winding, np.int8).reshape(m, -1),
        topology=topology,
        boundary=boundary,
        shape=shape,
        positions=positions,
    )


def _check_boundary(boundary):
    if boundary not in ("open", "torus"):
        raise ValueError(f"boundary must be 'open' or 'torus', not {boundary!r}")


# -- lattices ----------------------------------------------------------------


def _planar(L, boundary, steps, payload, mult, topology, positions):
    """Lattice on an L x L grid of cells with one node per cell and the given
    neighbour steps."""
    if L < 2:
        raise ValueError("L must be >= 2")
    _check_boundary(boundary)
    torus = boundary == "torus"
    edges, wind = [], []
    for j in range(L):
        for i in range(L):
            for di, dj in steps:
                ti, tj = i + di, j + dj
                inside = 0 <= ti < L and 0 <= tj < L
                if not inside and not torus:
                    continue
                edges.append((j * L + i, (tj % L) * L + ti % L))
                wind.append((ti // L, tj // L))
    return _lattice(L * L, edges, wind, payload, mult, topology, boundary, (L,), positions)


def _grid_positions(L):
    j, i = np.divmod(np.arange(L * L), L)
    return np.stack([i, j], axis=1).astype(float)


def gen_square(L: int, boundary: str = "torus", payload=None, mult: int = 1) -> Network:
    return _planar(L, boundary, ((1, 0), (0, 1)), payload, mult, "square", _grid_positions(L))


def gen_triangular(L: int, boundary: str = "torus", payload=None, mult: int = 1) -> Network:
    """Triangular lattice with steps (1,0), (0,1), (-1,1).

    On the torus edge ``3k`` is the +x bond of node k, ``3k+1`` the +y bond
    and ``3k+2`` the bond from (i+1, j) to (i, j+1) anchored at k.
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    _check_boundary(boundary)
    torus = boundary == "torus"
    edges, wind = [], []
    for j in range(L):
        for i in range(L):
            for (ai, aj), (bi, bj) in (((0, 0), (1, 0)), ((0, 0), (0, 1)), ((1, 0), (0, 1))):
                pi, pj, qi, qj = i + ai, j + aj, i + bi, j + bj
                if not torus and not (pi < L and pj < L and qi < L and qj < L):
                    continue
                edges.append(((pj % L) * L + pi % L, (qj % L) * L + qi % L))
                wind.append((qi // L - pi // L, qj // L - pj // L))
    pos = _grid_positions(L)
    pos = np.stack([pos[:, 0] + 0.5 * pos[:, 1], pos[:, 1] * math.sqrt(3) / 2], axis=1)
    return _lattice(L * L, edges, wind, payload, mult, "triangular", boundary, (L,), pos)


def gen_honeycomb(L: int, boundary: str = "torus", payload=None, mult: int = 1) -> Network:
    """Honeycomb lattice with 2 L^2 nodes.

    Cell k = j*L + i holds node 2k (sublattice A) and 2k+1 (sublattice B).
    B of cell (i, j) bonds to A of cells (i, j), (i+1, j), (i, j+1), giving
    edges 3k, 3k+1, 3k+2 on the torus.
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    _check_boundary(boundary)
    torus = boundary == "torus"
    edges, wind = [], []
    for j in range(L):
        for i in range(L):
            b = 2 * (j * L + i) + 1
            for di, dj in ((0, 0), (1, 0), (0, 1)):
                ti, tj = i + di, j + dj
                if not torus and not (ti < L and tj < L):
                    continue
                edges.append((b, 2 * ((tj % L) * L + ti % L)))
                wind.append((ti // L, tj // L))
    cell = _grid_positions(L)
    a_pos = np.stack([cell[:, 0] + 0.5 * cell[:, 1], cell[:, 1] * math.sqrt(3) / 2], axis=1)
    b_pos = a_pos + np.array([0.5, math.sqrt(3) / 6])
    pos = np.empty((2 * L * L, 2))
    pos[0::2], pos[1::2] = a_pos, b_pos
    return _lattice(2 * L * L, edges, wind, payload, mult, "honeycomb", boundary, (L,), pos)


def gen_cubic(L: int, boundary: str = "torus", payload=None, mult: int = 1) -> Network:
    """Simple cubic lattice; node (z*L + y)*L + x, windings in x, y, z."""
    if L < 2:
        raise ValueError("L must be >= 2")
    _check_boundary(boundary)
    torus = boundary == "torus"
    edges, wind = [], []
    idx = lambda x, y, z: (z * L + y) * L + x  # noqa: E731
    for z in range(L):
        for y in range(L):
            for x in range(L):
                for d in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                    t = (x + d[0], y + d[1], z + d[2])
                    if not torus and max(t) >= L:
                        continue
                    edges.append((idx(x, y, z), idx(t[0] % L, t[1] % L, t[2] % L)))
                    wind.append(tuple(c // L for c in t))
    zz, rest = np.divmod(np.arange(L**3), L * L)
    yy, xx = np.divmod(rest, L)
    pos = np.stack([xx, yy, zz], axis=1).astype(float)
    return _lattice(L**3, edges, wind, payload, mult, "cubic", boundary, (L,), pos)


# (4,8^2) lattice: each square-lattice cell holds a small square N, E, S, W
FOUR_EIGHT_CORNERS = ("N", "E", "S", "W")


def gen_four_eight(L: int, boundary: str = "torus", payload=None, mult: int = 1) -> Network:
    """Truncated square lattice (squares and octagons), 4 L^2 nodes.

    Node 4k + c is corner c (N, E, S, W) of cell k.  Edge order per cell:
    N-E, E-S, S-W, W-N, then E to the W corner of the cell on the right and
    S to the N corner of the cell below.
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    _check_boundary(boundary)
    torus = boundary == "torus"
    N, E, S, W = range(4)
    edges, wind = [], []
    for j in range(L):
        for i in range(L):
            k = 4 * (j * L + i)
            for a, b in ((N, E), (E, S), (S, W), (W, N)):
                edges.append((k + a, k + b))
                wind.append((0, 0))
            if torus or i + 1 < L:
                edges.append((k + E, 4 * (j * L + (i + 1) % L) + W))
                wind.append(((i + 1) // L, 0))
            if torus or j + 1 < L:
                edges.append((k + S, 4 * (((j + 1) % L) * L + i) + N))
                wind.append((0, (j + 1) // L))
    cell = np.repeat(_grid_positions(L), 4, axis=0)
    offs = np.tile(np.array([[0.0, -0.3], [0.3, 0.0], [0.0, 0.3], [-0.3, 0.0]]), (L * L, 1))
    return _lattice(4 * L * L, edges, wind, payload, mult, "four_eight", boundary, (L,), cell + offs)


# -- complex networks --------------------------------------------------------


def _pairs_from_index(idx: np.ndarray, n: int):
    """Decode linear indices of the upper triangle (row-major, u < v)."""
    idx = idx.astype(np.int64)
    # row u starts at offset u*n - u*(u+1)/2
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2).astype(np.int64)
    start = u * n - u * (u + 1) // 2
    # repair rounding at row boundaries
    low = idx < start
    u[low] -= 1
    start = u * n - u * (u + 1) // 2
    high = idx >= start + (n - 1 - u)
    u[high] += 1
    start = u * n - u * (u + 1) // 2
    v = idx - start + u + 1
    return u, v


def gen_er(N: int, p: float, rng, payload=None, mult: int = 1) -> Network:
    """G(N, p): each pair present independently with probability p."""
    if N < 2 or not 0.0 <= p <= 1.0:
        raise ValueError("need N >= 2 and p in [0, 1]")
    total = N * (N - 1) // 2
    k = int(rng.binomial(total, p))
    idx = np.sort(rng.choice(total, size=k, replace=False)) if k < total else np.arange(total)
    u, v = _pairs_from_index(idx, N)
    return Network.from_edges(
        N, np.stack([u, v], axis=1), mult=np.full(k, mult), payloads=(payload,) * k, topology="er"
    )


def gen_ws(N: int, k: int, p_rewire: float, rng, payload=None, mult: int = 1) -> Network:
    """Ring of N nodes joined to k/2 neighbours per side, each edge rewired
    (far endpoint redrawn uniformly) with probability p_rewire."""
    if N < 2 or k % 2 or k < 2 or k >= N or not 0.0 <= p_rewire <= 1.0:
        raise ValueError("need N >= 2, even 2 <= k < N and p_rewire in [0, 1]")
    present = set()
    ring = []
    for d in range(1, k // 2 + 1):
        for u in range(N):
            v = (u + d) % N
            ring.append((u, v))
            present.add((min(u, v), max(u, v)))
    out = []
    for u, v in ring:
        if rng.random() < p_rewire:
            choices = N - 1 - sum(1 for w in range(N) if w != u and (min(u, w), max(u, w)) in present)
            if choices > 0:
                while True:
                    w = int(rng.integers(N))
                    key = (min(u, w), max(u, w))
                    if w != u and key not in present:
                        break
                present.discard((min(u, v), max(u, v)))
                present.add(key)
                v = w
        out.append((u, v))
    m = len(out)
    return Network.from_edges(N, out, mult=np.full(m, mult), payloads=(payload,) * m, topology="ws")


def gen_ba(N: int, m: int, rng, payload=None, mult: int = 1) -> Network:
    """Preferential attachment: each new node links to m distinct existing
    nodes chosen with probability proportional to degree."""
    if m < 1 or N <= m:
        raise ValueError("need m >= 1 and N > m")
    edges = []
    # seed: a star on m + 1 nodes so every early node has nonzero degree
    stubs = []
    for v in range(m):
        edges.append((m, v))
        stubs += [m, v]
    for u in range(m + 1, N):
        chosen = set()
        while len(chosen) < m:
            chosen.add(stubs[int(rng.integers(len(stubs)))])
        for v in sorted(chosen):
            edges.append((u, v))
            stubs += [u, v]
    k = len(edges)
    return Network.from_edges(N, edges, mult=np.full(k, mult), payloads=(payload,) * k, topology="ba")


# -- duals -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DualLattice:
    network: Network
    edge_map: np.ndarray  # primal edge index -> dual edge index
    faces: tuple  # dual node -> primal nodes around that face

    def __post_init__(self):
        if sorted(self.edge_map.tolist()) != list(range(self.network.m)):
            raise ValueError("edge map is not a bijection")


def _require_torus(net, kinds):
    if net.boundary != "torus" or net.topology not in kinds:
        raise ValueError(f"unsupported topology {net.topology}/{net.boundary}; need a torus of {kinds}")


def dual(net: Network) -> DualLattice:
    """Planar dual of a square, triangular or honeycomb torus."""
    _require_torus(net, ("square", "triangular", "honeycomb"))
    (L,) = net.shape
    k = np.arange(L * L)
    j, i = np.divmod(k, L)
    cell = lambda ii, jj: (jj % L) * L + ii % L  # noqa: E731
    if net.topology == "square":
        # plaquette with lower corner (i, j) becomes dual node (i, j); the +x
        # bond of (i, j) separates plaquettes (i, j-1) and (i, j), the +y
        # bond separates (i-1, j) and (i, j)
        d = gen_square(L, "torus")
        emap = np.empty(2 * L * L, np.int64)
        emap[2 * k] = 2 * cell(i, j - 1) + 1
        emap[2 * k + 1] = 2 * cell(i - 1, j)
        faces = tuple((int(c), int(cell(ci + 1, cj)), int(cell(ci, cj + 1)), int(cell(ci + 1, cj + 1)))
                      for c, ci, cj in zip(k, i, j))
        return DualLattice(d, emap, faces)
    if net.topology == "triangular":
        # up triangle (i,j),(i+1,j),(i,j+1) -> A node of cell (i,j); down
        # triangle (i+1,j),(i,j+1),(i+1,j+1) -> B node of cell (i,j)
        d = gen_honeycomb(L, "torus")
        emap = np.empty(3 * L * L, np.int64)
        emap[3 * k] = 3 * cell(i, j - 1) + 2
        emap[3 * k + 1] = 3 * cell(i - 1, j) + 1
        emap[3 * k + 2] = 3 * k
        faces = [None] * (2 * L * L)
        for c, ci, cj in zip(k.tolist(), i.tolist(), j.tolist()):
            faces[2 * c] = (c, cell(ci + 1, cj), cell(ci, cj + 1))
            faces[2 * c + 1] = (cell(ci + 1, cj), cell(ci, cj + 1), cell(ci + 1, cj + 1))
        return DualLattice(d, emap, tuple(tuple(int(x) for x in f) for f in faces))
    # honeycomb: each triangular node (i, j) is a hexagon around A(i,j)
    d = gen_triangular(L, "torus")
    forward = dual(d)
    inv = np.empty_like(forward.edge_map)
    inv[forward.edge_map] = np.arange(len(inv))
    faces = [[] for _ in range(L * L)]
    for a in range(2 * L * L):
        for t in forward.faces[a]:
            faces[t].append(a)
    return DualLattice(d, inv, tuple(tuple(sorted(f)) for f in faces))


# -- lattice rewrites ------------------------------------------------------


def _pure_payload(net: Network, e: int) -> PureLink:
    link = net.payloads[e]
    if not isinstance(link, PureLink):
        raise ValueError(f"edge {e} carries {type(link).__name__}, expected PureLink")
    return link


def _swap_link(a: PureLink, b: PureLink, basis: str, rng) -> PureLink:
    if basis == "bx":
        return qstate.swap_pure_bx(a, b)
    if basis == "bell":
        if rng is None:
            raise ValueError("Bell-basis swaps need an rng to sample the outcome")
        return qstate.sample_swap_pure_bell(a, b, rng).link
    raise ValueError(f"unknown swap basis {basis!r}")


def honeycomb_to_triangular(net: Network, basis: str = "bell", rng=None) -> Network:
    """Swap at every B node of a double-bond honeycomb.

    Each B node holds one pair from each of its three double bonds per
    neighbour pair, so three swaps join its three A neighbours into a
    triangle.  The A nodes form a triangular lattice of L^2 nodes in the
    edge order of :func:`gen_triangular`.  With ``basis="bell"`` each new
    link is the sampled outcome (average E is preserved); ``"bx"`` gives the
    outcome-independent link with C = C^2.
    """
    if net.topology != "honeycomb":
        raise ValueError(f"expected a honeycomb lattice, got {net.topology}")
    if np.any(net.mult != 2):
        raise ValueError("honeycomb_to_triangular needs double bonds on every edge")
    (L,) = net.shape
    torus = net.boundary == "torus"
    tri = gen_triangular(L, net.boundary)
    # map triangle sides to triangular-lattice edge indices
    index = {}
    for e, (u, v) in enumerate(tri.edges()):
        index[(u, v)] = index[(v, u)] = e
    payloads = [None] * tri.m
    indptr, nbr, eid, _ = net.csr
    for b in range(1, net.n, 2):
        inc = eid[indptr[b] : indptr[b + 1]].tolist()
        if len(inc) < 2:
            continue
        # A-node order around b follows edge order: own cell, +x cell, +y cell
        inc.sort()
        ends = [(e, net.other(e, b) // 2) for e in inc]
        for (e1, a1), (e2, a2) in ((ends[0], ends[1]), (ends[0], ends[2]), (ends[1], ends[2])) if len(ends) == 3 else ((ends[0], ends[1]),):
            key = (a1, a2)
            if key not in index:
                if torus:
                    raise ValueError("inconsistent honeycomb torus")
                continue
            link = _swap_link(_pure_payload(net, e1), _pure_payload(net, e2), basis, rng)
            payloads[index[key]] = link
    keep = [e for e, p in enumerate(payloads) if p is not None]
    if len(keep) == tri.m:
        return tri.with_payloads(payloads)
    return Network.from_edges(
        tri.n, np.stack([tri.eu[keep], tri.ev[keep]], 1), payloads=[payloads[e] for e in keep],
        winding=tri.winding[keep], topology="triangular", boundary=tri.boundary, shape=tri.shape,
        positions=tri.positions,
    )


# GHZ ownership on the (4,8^2) torus: corner -> owned edges (by local role).
# Every edge is owned exactly once.  "perfect": N idle in every cell, so each
# GHZ state touches exactly one idle node.  "checkerboard": N idle in even
# cells and W idle in odd cells.
_OWNERSHIP = {
    "perfect": (
        {"N": (), "E": ("NE", "Econn"), "S": ("ES", "Sconn"), "W": ("WN", "SW")},
    ) * 2,
    "checkerboard": (
        {"N": (), "E": ("NE", "Econn"), "S": ("ES", "SW"), "W": ("WN", "Wconn")},
        {"N": ("WN", "Nconn"), "E": ("NE", "ES"), "S": ("SW", "Sconn"), "W": ()},
    ),
}


def ghz_generators(net: Network, pattern: str = "perfect") -> list[tuple[int, tuple[int, int]]]:
    """(generator node, its two owned edges) on a (4,8^2) torus.

    A generator merges its two links into a three-node GHZ state; a quarter
    of the nodes stay idle.
    """
    _require_torus(net, ("four_eight",))
    (L,) = net.shape
    if pattern not in _OWNERSHIP:
        raise ValueError(f"unknown GHZ pattern {pattern!r}")
    if pattern == "checkerboard" and L % 2:
        raise ValueError("the checkerboard pattern needs an even linear size")
    even, odd = _OWNERSHIP[pattern]
    out = []
    for j in range(L):
        for i in range(L):
            c = j * L + i
            base, left, up = 6 * c, 6 * (j * L + (i - 1) % L), 6 * (((j - 1) % L) * L + i)
            local = {
                "NE": base, "ES": base + 1, "SW": base + 2, "WN": base + 3,
                "Econn": base + 4, "Sconn": base + 5, "Wconn": left + 4, "Nconn": up + 5,
            }
            table = even if (i + j) % 2 == 0 else odd
            for r, corner in enumerate(FOUR_EIGHT_CORNERS):
                if table[corner]:
                    node = 4 * c + r
                    edges = tuple(local[name] for name in table[corner])
                    for e in edges:
                        if node not in (int(net.eu[e]), int(net.ev[e])):
                            raise AssertionError("ownership table does not match lattice")
                    out.append((node, edges))
    return out


def _arc_winding(net: Network, e: int, frm: int) -> np.ndarray:
    w = net.winding[e].astype(np.int64)
    return w if int(net.eu[e]) == frm else -w


def ghz_site_lattice(net: Network, pattern: str = "perfect") -> Network:
    """Lattice whose sites are the candidate GHZ states of
    :func:`ghz_generators`; two sites are bonded when their GHZ states share
    a node of ``net``.  Site k is anchored at its generator node for
    positions and windings."""
    gens = ghz_generators(net, pattern)
    members = {}  # L-node -> list of (site, winding from generator to node)
    for s, (g, edges) in enumerate(gens):
        members.setdefault(g, []).append((s, np.zeros(2, np.int64)))
        for e in edges:
            members.setdefault(net.other(e, g), []).append((s, _arc_winding(net, e, g)))
    edges, wind = [], []
    for node in sorted(members):
        group = members[node]
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                (s1, w1), (s2, w2) = group[a], group[b]
                edges.append((s1, s2))
                wind.append(w1 - w2)
    pos = None if net.positions is None else net.positions[[g for g, _ in gens]]
    return Network.from_edges(
        len(gens), edges, winding=wind, topology="ghz_sites", boundary="torus", shape=net.shape, positions=pos
    )


def q_swap(net: Network, node: int, basis: str = "bell", rng=None) -> Network:
    """Replace the star around ``node`` by a cycle through its neighbours.

    Every incident edge must be a double bond of PureLink.  Neighbours are
    visited in increasing id and each cycle edge is made by swapping one pair
    from each of the two adjacent double bonds, so q swaps consume all 2q
    pairs and ``node`` ends up isolated.  For q = 2 the "cycle" is two
    parallel single bonds between the two neighbours.
    """
    inc = net.incident(node)
    q = len(inc)
    if q < 2:
        raise ValueError(f"q-swap needs degree >= 2, node {node} has {q}")
    for e in inc:
        if net.mult[e] != 2:
            raise ValueError(f"edge {e} at node {node} is not a double bond")
    ends = sorted((net.other(e, node), e) for e in inc)
    if len({v for v, _ in ends}) != q:
        raise ValueError(f"node {node} has parallel edges; q-swap needs a simple star")
    keep = np.ones(net.m, bool)
    keep[inc] = False
    new_edges, new_pay, new_wind = [], [], []
    for a in range(q):
        (v1, e1), (v2, e2) = ends[a], ends[(a + 1) % q]
        new_edges.append((v1, v2))
        new_pay.append(_swap_link(_pure_payload(net, e1), _pure_payload(net, e2), basis, rng))
        new_wind.append(_arc_winding(net, e2, node) - _arc_winding(net, e1, node))
    idx = np.flatnonzero(keep)
    edges = np.concatenate([np.stack([net.eu[idx], net.ev[idx]], 1), np.asarray(new_edges, np.int32).reshape(-1, 2)])
    wind = np.concatenate([net.winding[idx], np.asarray(new_wind, np.int8).reshape(-1, net.winding.shape[1])])
    return Network.from_edges(
        net.n, edges,
        mult=np.concatenate([net.mult[idx], np.ones(q, np.int32)]),
        payloads=[net.payloads[e] for e in idx] + new_pay,
        winding=wind, topology=net.topology, boundary=net.boundary, shape=net.shape, positions=net.positions,
    )


# -- paths -------------------------------------------------------------------


@dataclass(frozen=True)
class PathDescriptor:
    nodes: tuple = ()
    edges: tuple = ()

    def __post_init__(self):
        if self.nodes and len(self.edges) != len(self.nodes) - 1:
            raise ValueError("a path of k nodes has k - 1 edges")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("path repeats an edge")

    @property
    def found(self) -> bool:
        return bool(self.nodes)

    def __len__(self):
        return len(self.edges)


NO_PATH = PathDescriptor()


def _dijkstra(net: Network, src: int, weight: np.ndarray, banned_edges=frozenset()):
    indptr, nbr, eid, _ = net.csr
    dist = np.full(net.n, math.inf)
    dist[src] = 0.0
    heap = [(0.0, src)]
    done = np.zeros(net.n, bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for j in range(indptr[u], indptr[u + 1]):
            e = eid[j]
            if e in banned_edges:
                continue
            v = nbr[j]
            nd = d + weight[e]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, int(v)))
    return dist


def _edge_weights(net: Network, edge_weight) -> np.ndarray:
    if edge_weight is None:
        w = np.ones(net.m)
    elif callable(edge_weight):
        w = np.array([float(edge_weight(e, net)) for e in range(net.m)])
    else:
        w = np.asarray(edge_weight, float)
    if len(w) != net.m or np.any(w < 0) or np.any(np.isnan(w)):
        raise ValueError("edge weights must be nonnegative, one per edge")
    return w


def shortest_path(net: Network, A: int, B: int, edge_weight=None, banned_edges: Iterable[int] = ()) -> PathDescriptor:
    """Minimum-weight A-B path; among equal-weight paths the lexicographically
    smallest node sequence wins (parallel edges: smallest edge index).

    ``edge_weight`` is None (hop count), an array, or ``f(edge, net)``.
    """
    w = _edge_weights(net, edge_weight)
    banned = frozenset(int(e) for e in banned_edges)
    if A == B:
        return PathDescriptor((A,), ())
    to_b = _dijkstra(net, B, w, banned)
    if math.isinf(to_b[A]):
        return NO_PATH
    indptr, nbr, eid, _ = net.csr
    total = to_b[A]
    slack = PATH_TOL * max(1.0, total)
    nodes, edges, seen = [A], [], {A}
    u, spent = A, 0.0
    while u != B:
        best = None
        for j in range(indptr[u], indptr[u + 1]):
            e = int(eid[j])
            v = int(nbr[j])
            if e in banned or v in seen:
                continue
            if spent + w[e] + to_b[v] <= total + slack:
                if best is None or (v, e) < best:
                    best = (v, e)
        if best is None:  # only reachable with zero-weight cycles and rounding
            raise RuntimeError("path reconstruction failed")
        v, e = best
        spent += w[e]
        nodes.append(v)
        edges.append(e)
        seen.add(v)
        u = v
    return PathDescriptor(tuple(nodes), tuple(edges))


def all_simple_paths(net: Network, A: int, B: int, banned_edges: Iterable[int] = ()):
    """Every simple A-B path as a PathDescriptor (exponential; small graphs)."""
    indptr, nbr, eid, _ = net.csr
    banned = set(banned_edges)
    out = []

    def walk(u, nodes, edges, seen):
        if u == B:
            out.append(PathDescriptor(tuple(nodes), tuple(edges)))
            return
        for j in range(indptr[u], indptr[u + 1]):
            v, e = int(nbr[j]), int(eid[j])
            if v in seen or e in banned:
                continue
            seen.add(v)
            nodes.append(v)
            edges.append(e)
            walk(v, nodes, edges, seen)
            seen.discard(v)
            nodes.pop()
            edges.pop()

    walk(A, [A], [], {A})
    return out


def path_weight(path: PathDescriptor, weights) -> float:
    return float(sum(weights[e] for e in path.edges))


# -- serialisation -----------------------------------------------------------


def _payload_fields(p) -> list:
    if p is None:
        return ["none"]
    if isinstance(p, PureLink):
        return ["pure", repr(p.phi1)]
    if isinstance(p, WernerLink):
        return ["werner", repr(p.x)]
    if isinstance(p, BitPhaseLink):
        return ["bitphase", repr(p.eps_b), repr(p.eps_p)]
    raise TypeError(f"cannot serialise payload {p!r}")


def _payload_from(kind: str, params: Sequence[str]):
    vals = [float(v) for v in params]
    if kind == "none":
        return None
    if kind == "bell":
        return PureLink.bell()
    if kind == "pure":
        return PureLink(*vals)
    if kind == "werner":
        return WernerLink(*vals)
    if kind == "bitphase":
        return BitPhaseLink(*vals)
    raise ValueError(f"unknown payload kind {kind!r}")


_ARITY = {"none": 0, "bell": 0, "pure": 1, "werner": 1, "bitphase": 2}


def to_text(net: Network) -> str:
    """Line format: a header, then ``edge u v mult kind params... [wind=a,b]``
    and optional ``pos i x y`` lines.  Floats are written with repr, so the
    round trip is exact."""
    shape = ",".join(str(s) for s in net.shape)
    lines = [f"network {net.n} {net.topology} {net.boundary} {shape or '-'} {net.winding.shape[1]}"]
    for e in range(net.m):
        fields = ["edge", str(int(net.eu[e])), str(int(net.ev[e])), str(int(net.mult[e]))]
        fields += _payload_fields(net.payloads[e])
        w = net.winding[e]
        if np.any(w):
            fields.append("wind=" + ",".join(str(int(x)) for x in w))
        lines.append(" ".join(fields))
    if net.positions is not None:
        for i, row in enumerate(net.positions):
            lines.append("pos " + str(i) + " " + " ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Network:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0][0] != "network":
        raise ValueError("missing 'network' header")
    _, n, topology, boundary, shape, wdim = lines[0]
    n, wdim = int(n), int(wdim)
    edges, mult, pay, wind, pos = [], [], [], [], {}
    for fields in lines[1:]:
        if fields[0] == "edge":
            u, v, m, kind = int(fields[1]), int(fields[2]), int(fields[3]), fields[4]
            k = _ARITY.get(kind)
            if k is None:
                raise ValueError(f"unknown payload kind {kind!r}")
            params, rest = fields[5 : 5 + k], fields[5 + k :]
            w = [0] * wdim
            for tok in rest:
                if tok.startswith("wind="):
                    w = [int(x) for x in tok[5:].split(",")]
                else:
                    raise ValueError(f"unexpected token {tok!r}")
            edges.append((u, v))
            mult.append(m)
            pay.append(_payload_from(kind, params))
            wind.append(w)
        elif fields[0] == "pos":
            pos[int(fields[1])] = [float(x) for x in fields[2:]]
        else:
            raise ValueError(f"unknown record {fields[0]!r}")
    positions = None
    if pos:
        positions = np.array([pos[i] for i in range(n)])
    return Network.from_edges(
        n, np.asarray(edges, np.int32).reshape(-1, 2), mult=mult, payloads=pay,
        winding=np.asarray(wind, np.int8).reshape(-1, wdim), topology=topology, boundary=boundary,
        shape=tuple(int(s) for s in shape.split(",")) if shape != "-" else (), positions=positions,
    )


def to_json(net: Network) -> str:
    doc = {
        "n": net.n,
        "topology": net.topology,
        "boundary": net.boundary,
        "shape": list(net.shape),
        "edges": [
            {
                "u": int(net.eu[e]),
                "v": int(net.ev[e]),
                "mult": int(net.mult[e]),
                "payload": _payload_fields(net.payloads[e]),
                "wind": [int(x) for x in net.winding[e]],
            }
            for e in range(net.m)
        ],
        "positions": None if net.positions is None else net.positions.tolist(),
    }
    return json.dumps(doc)


def from_json(text: str) -> Network:
    doc = json.loads(text)
    es = doc["edges"]
    wdim = len(es[0]["wind"]) if es else 2
    return Network.from_edges(
        doc["n"],
        np.asarray([(d["u"], d["v"]) for d in es], np.int32).reshape(-1, 2),
        mult=[d["mult"] for d in es],
        payloads=[_payload_from(d["payload"][0], d["payload"][1:]) for d in es],
        winding=np.asarray([d["wind"] for d in es], np.int8).reshape(-1, wdim),
        topology=doc["topology"],
        boundary=doc["boundary"],
        shape=tuple(doc["shape"]),
        positions=None if doc["positions"] is None else np.asarray(doc["positions"], float),
    )


def same_network(a: Network, b: Network) -> bool:
    """Exact structural and payload equality."""
    return (
        a.n == b.n
        and a.topology == b.topology
        and a.boundary == b.boundary
        and tuple(a.shape) == tuple(b.shape)
        and np.array_equal(a.eu, b.eu)
        and np.array_equal(a.ev, b.ev)
        and np.array_equal(a.mult, b.mult)
        and np.array_equal(a.winding, b.winding)
        and a.payloads == b.payloads
        and ((a.positions is None and b.positions is None)
             or (a.positions is not None and b.positions is not None and np.array_equal(a.positions, b.positions)))
    )
