"""Emergence of small subgraphs in Erdos-Renyi graphs.

A pattern F with n vertices and l edges typically appears in G(N, p) once
p grows past a constant times N^(-n/l); with p = N^z the transition sits at
z = -n/l.  The search here is exact per graph: backtracking over host
vertices with degree pruning and automorphism-orbit pruning.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import _rng, netgraph

MAX_PATTERN_NODES = 6
MAX_HOST_NODES = 3000


@dataclass(frozen=True)
class SubgraphPattern:
    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""

    def __post_init__(self):
        if not 1 <= self.n <= MAX_PATTERN_NODES:
            raise ValueError(f"pattern must have 1..{MAX_PATTERN_NODES} vertices, got {self.n}")
        seen = set()
        for u, v in self.edges:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad pattern edge {(u, v)}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate pattern edge {key}")
            seen.add(key)
        if not self._connected():
            raise ValueError("pattern must be connected")

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.edges)

    @property
    def critical_z(self) -> float:
        """Exponent z with p = N^z at which the pattern emerges."""
        if not self.edges:
            return float("-inf")
        return -self.n / self.l

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def _connected(self) -> bool:
        adj = self.adjacency()
        seen, stack = {0}, [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def orbits(self) -> list[int]:
        """Automorphism orbit id of each vertex (smallest member)."""
        adj = self.adjacency()
        orbit = list(range(self.n))
        for perm in itertools.permutations(range(self.n)):
            if all(perm[v] in adj[perm[u]] for u in range(self.n) for v in adj[u]):
                for u in range(self.n):
                    orbit[u] = min(orbit[u], perm[u])
        return orbit


def _path(k, name):
    return SubgraphPattern(k, tuple((i, i + 1) for i in range(k - 1)), name)


def _cycle(k, name):
    return SubgraphPattern(k, tuple((i, (i + 1) % k) for i in range(k)), name)


PATTERNS = {
    "node": SubgraphPattern(1, (), "node"),
    "edge": _path(2, "edge"),
    "3-path": _path(3, "3-path"),
    "4-tree": _path(4, "4-tree"),
    "4-star": SubgraphPattern(4, ((0, 1), (0, 2), (0, 3)), "4-star"),
    "triangle": _cycle(3, "triangle"),
    "square-cycle": _cycle(4, "square-cycle"),
    "K4": SubgraphPattern(4, tuple(itertools.combinations(range(4), 2)), "K4"),
}


def pattern(name: str) -> SubgraphPattern:
    try:
        return PATTERNS[name]
    except KeyError:
        raise ValueError(f"unknown pattern {name!r}; known: {sorted(PATTERNS)}") from None


def _search_order(pat: SubgraphPattern) -> list[int]:
    adj = pat.adjacency()
    order = [max(range(pat.n), key=lambda u: (len(adj[u]), -u))]
    while len(order) < pat.n:
        placed = set(order)
        rest = [u for u in range(pat.n) if u not in placed]
        order.append(max(rest, key=lambda u: (len(adj[u] & placed), len(adj[u]), -u)))
    return order


def find_subgraph(adj: Sequence[set[int]], pat: SubgraphPattern) -> tuple[int, ...] | None:
    """One embedding of ``pat`` into the host graph, or None.

    ``adj[v]`` is the neighbour set of host vertex v.  The result maps pattern
    vertex i to host vertex result[i].  Embeddings are not required to be
    induced.
    """
    N = len(adj)
    if pat.n > N:
        return None
    padj = pat.adjacency()
    pdeg = [len(a) for a in padj]
    order = _search_order(pat)
    back = [[w for w in padj[u] if w in set(order[:i])] for i, u in enumerate(order)]
    orbit = pat.orbits()
    host_deg = [len(a) for a in adj]
    # banned[o]: host vertices known to be in no embedding as an orbit-o vertex
    banned: dict[int, set[int]] = {o: set() for o in set(orbit)}
    image = [-1] * pat.n
    used: set[int] = set()

    def extend(i):
        if i == pat.n:
            return True
        u = order[i]
        nb = back[i]
        cands = set(adj[image[nb[0]]])
        for w in nb[1:]:
            cands &= adj[image[w]]
        ban = banned[orbit[u]]
        for h in sorted(cands):
            if h in used or h in ban or host_deg[h] < pdeg[u]:
                continue
            image[u] = h
            used.add(h)
            if extend(i + 1):
                return True
            used.discard(h)
        image[u] = -1
        return False

    root = order[0]
    for h in range(N):
        if host_deg[h] < pdeg[root] or h in banned[orbit[root]]:
            continue
        image[root] = h
        used.add(h)
        if extend(1):
            return tuple(image)
        used.discard(h)
        banned[orbit[root]].add(h)
    return None


def host_adjacency(net: netgraph.Network) -> list[set[int]]:
    indptr, nbr, _, _ = net.csr
    return [set(nbr[indptr[v] : indptr[v + 1]].tolist()) for v in range(net.n)]


def contains(net: netgraph.Network, pat: SubgraphPattern) -> bool:
    return find_subgraph(host_adjacency(net), pat) is not None


def _emergence_trial(N, p, pat, seed, t):
    rng = _rng.trial_rng(seed, f"emerge:{pat.name}:{N}", t)
    return contains(netgraph.gen_er(N, p, rng), pat)


def subgraph_emergence(N: int, p: float, pat: SubgraphPattern | str, trials: int, seed: int = 0,
                       workers: int | None = 1) -> float:
    """Fraction of sampled G(N, p) graphs containing at least one copy of ``pat``."""
    if isinstance(pat, str):
        pat = pattern(pat)
    if N > MAX_HOST_NODES:
        raise ValueError(f"N must be <= {MAX_HOST_NODES}")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = sum(_rng.map_trials(functools.partial(_emergence_trial, N, p, pat, seed), trials, workers))
    return hits / trials


def emergence_curve(N: int, pat: SubgraphPattern | str, zs: Sequence[float], trials: int,
                    seed: int = 0, workers: int | None = 1) -> np.ndarray:
    """Appearance probability at p = N^z for each z."""
    return np.array([subgraph_emergence(N, min(1.0, float(N) ** z), pat, trials, seed, workers) for z in zs])
