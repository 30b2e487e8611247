"""Path-based entanglement distribution on arbitrary networks.

Werner links are described by their parameter x (see
:class:`qnet.qstate.WernerLink`).  Swapping along a chain multiplies the
parameters, purification follows the two-copy recurrence in
:func:`qnet.qstate.purify_werner`, and the figure of merit is the
concurrence max(0, (3x - 1)/2).

Single-purification protocol (SPP).  Along the hop-shortest path P between
A and B pick a subpath S and an alternate path A' joining the ends of S
without touching P.  Swap along S and along A', purify the two results,
then swap along the rest of P.  Purification consumes both inputs, so a
failed attempt leaves nothing between A and B (concurrence 0) by default.
``failure="keep"`` instead credits the failed branch with the better of the
two chains, as if it had survived.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import optimize

from . import _rng, netgraph
from .netgraph import NO_PATH, Network, PathDescriptor
from .qstate import (NoiseModel, PureLink, WernerLink, concurrence_werner, purify_werner,
                     swap_werner)

FAILURE_MODES = ("zero", "keep")
SEARCH_MODES = ("shortest", "best-gain")
DELTA_C_CONSTANT = 6.5e-5


def werner_concurrence(x):
    """max(0, (3x - 1)/2), elementwise for arrays."""
    return np.maximum(0.0, (3.0 * np.asarray(x, float) - 1.0) / 2.0)


# -- chains and routing ----------------------------------------------------------


def chain_swap_concurrence(links: Sequence[WernerLink]) -> float:
    if not links:
        raise ValueError("empty path")
    return concurrence_werner(WernerLink(math.prod(l.x for l in links)))


def _werner_x(net: Network) -> np.ndarray:
    xs = []
    for e, pay in enumerate(net.payloads):
        if not isinstance(pay, WernerLink):
            raise ValueError(f"edge {e} does not carry a WernerLink")
        xs.append(pay.x)
    return np.asarray(xs, float)


def best_swap_path(net: Network, A: int, B: int) -> PathDescriptor:
    """Path maximising the product of Werner parameters (hence the swapped
    concurrence): a shortest path under weights -log x."""
    x = _werner_x(net)
    if np.any(x <= 0.0):
        raise ValueError("Werner parameters must be positive for -log weights")
    path = netgraph.shortest_path(net, A, B, edge_weight=-np.log(x))
    if not path.found:
        raise ValueError(f"nodes {A} and {B} are disconnected")
    return path


def path_product(net: Network, path: PathDescriptor) -> float:
    x = _werner_x(net)
    return float(math.prod(x[e] for e in path.edges))


# -- SPP closed forms -------------------------------------------------------------


@dataclass(frozen=True)
class SppGeometry:
    """Path length L, subpath fraction a, alternate excess b and the Werner
    parameter y of the whole shortest path (the product over its L links)."""

    L: float
    a: float
    b: float
    y: float

    def __post_init__(self):
        if not self.L >= 1:
            raise ValueError("L must be >= 1")
        if not 0.0 < self.a <= 1.0:
            raise ValueError("a must lie in (0, 1]")
        if not self.b >= 0.0:
            raise ValueError("b must be >= 0")
        if not 0.0 < self.y <= 1.0:
            raise ValueError("y must lie in (0, 1]")

    @property
    def link_x(self) -> float:
        return self.y ** (1.0 / self.L)


def purification_branch(u, v):
    """(success probability, purified x) for Werner inputs u and v."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    uv = u * v
    return (1.0 + uv) / 2.0, (u + v + 4.0 * uv) / (3.0 + 3.0 * uv)


def spp_average(u, v, r, failure: str = "zero"):
    """Outcome-averaged concurrence of SPP with chain products u (subpath),
    v (alternate) and r (remainder of the shortest path)."""
    if failure not in FAILURE_MODES:
        raise ValueError(f"failure must be one of {FAILURE_MODES}")
    p, xp = purification_branch(u, v)
    avg = p * werner_concurrence(xp * r)
    if failure == "keep":
        avg = avg + (1.0 - p) * werner_concurrence(np.maximum(u, v) * r)
    return avg


def spp_gain(a, b, y, failure: str = "zero"):
    """SPP average minus the plain chain, with continuous exponents."""
    a, b, y = (np.asarray(t, float) for t in (a, b, y))
    return spp_average(y**a, y ** (a + b), y ** (1.0 - a), failure) - werner_concurrence(y)


def spp_advantage(geometry: SppGeometry, failure: str = "zero") -> bool:
    return bool(spp_gain(geometry.a, geometry.b, geometry.y, failure) > 0.0)


def advantage_region(b: float, a_grid, y_grid, failure: str = "zero") -> np.ndarray:
    """Boolean mask [y, a] of the advantage region."""
    A, Y = np.meshgrid(np.asarray(a_grid, float), np.asarray(y_grid, float))
    return spp_gain(A, b, Y, failure) > 0.0


def best_subpath_fraction(y: float, b: float = 0.0, failure: str = "zero") -> float:
    """Subpath fraction a in (0, 1] maximising the SPP gain at fixed (y, b)."""
    res = optimize.minimize_scalar(lambda a: -float(spp_gain(a, b, y, failure)), bounds=(1e-9, 1.0),
                                   method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def multi_spp_average(n: int, alpha: float, y: float, failure: str = "zero") -> float:
    """n serial purifications, each of a subpath of fraction alpha/n against
    an alternate of equal length."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    u = y ** (alpha / n)
    p, xp = purification_branch(u, u)
    rest = y ** (1.0 - alpha)
    if failure == "zero":
        return float(p**n * werner_concurrence(xp**n * rest))
    # keep: each failed stage leaves its plain subpath chain in place
    total = 0.0
    for k in range(n + 1):
        weight = math.comb(n, k) * p**k * (1.0 - p) ** (n - k)
        total += weight * float(werner_concurrence(xp**k * u ** (n - k) * rest))
    return total


def multi_spp_advantage(n: int, alpha: float, y: float, failure: str = "zero") -> bool:
    return multi_spp_average(n, alpha, y, failure) > float(werner_concurrence(y))


# -- SPP on a network --------------------------------------------------------------


@dataclass(frozen=True)
class SppPlan:
    path: PathDescriptor  # shortest A-B path
    start: int  # subpath = path.nodes[start : stop + 1]
    stop: int
    alternate: PathDescriptor
    u: float
    v: float
    r: float


@dataclass(frozen=True)
class SppResult:
    avg_concurrence: float
    baseline: float
    geometry: SppGeometry | None
    plan: SppPlan | None = None


def _alternates(net, path, x):
    """SppPlan for every subpath of ``path`` that has an alternate avoiding
    all edges of ``path``; alternates are hop-shortest with the usual
    lexicographic tie-break."""
    banned = frozenset(path.edges)
    nodes = path.nodes
    plans = []
    for i in range(len(nodes) - 1):
        for j in range(i + 1, len(nodes)):
            alt = netgraph.shortest_path(net, nodes[i], nodes[j], banned_edges=banned)
            if not alt.found:
                continue
            u = math.prod(x[e] for e in path.edges[i:j])
            v = math.prod(x[e] for e in alt.edges)
            r = math.prod(x[e] for e in path.edges[:i] + path.edges[j:])
            plans.append(SppPlan(path, i, j, alt, u, v, r))
    return plans


def _choose(plans, search, failure):
    if search == "shortest":
        return min(plans, key=lambda p: (len(p.alternate), len(p.alternate) - (p.stop - p.start), p.start, p.stop))
    return max(plans, key=lambda p: (float(spp_average(p.u, p.v, p.r, failure)), -p.start, -p.stop))


def spp(net: Network, A: int, B: int, rng=None, failure: str = "zero", search: str = "shortest",
        samples: int = 0) -> SppResult:
    """Single-purification protocol between A and B.

    Returns the outcome-averaged concurrence (exact, or a mean over
    ``samples`` draws of the purification outcome from ``rng``), the plain
    chain concurrence along the same shortest path, and the geometry of the
    chosen subpath.  ``search`` picks the subpath: ``shortest`` takes the one
    with the shortest alternate, ``best-gain`` maximises the average.
    """
    if search not in SEARCH_MODES:
        raise ValueError(f"search must be one of {SEARCH_MODES}")
    if failure not in FAILURE_MODES:
        raise ValueError(f"failure must be one of {FAILURE_MODES}")
    x = _werner_x(net)
    path = netgraph.shortest_path(net, A, B)
    if not path.found:
        return SppResult(0.0, 0.0, None)
    if A == B:
        return SppResult(1.0, 1.0, None)
    whole = math.prod(x[e] for e in path.edges)
    base = float(werner_concurrence(whole))
    plans = _alternates(net, path, x)
    if not plans:
        return SppResult(base, base, None)
    plan = _choose(plans, search, failure)
    L = len(path)
    geom = SppGeometry(L, (plan.stop - plan.start) / L,
                       (len(plan.alternate) - (plan.stop - plan.start)) / L, whole)
    if samples:
        if rng is None:
            raise ValueError("sampling needs an rng")
        avg = float(sample_spp(plan.u, plan.v, plan.r, rng, samples, failure).mean())
    else:
        avg = float(spp_average(plan.u, plan.v, plan.r, failure))
    return SppResult(avg, base, geom, plan)


def sample_spp(u: float, v: float, r: float, rng, size: int, failure: str = "zero") -> np.ndarray:
    """Concurrence of ``size`` independent SPP runs, built from the link
    algebra with the purification outcome drawn at random."""
    purified, p = purify_werner(WernerLink(u), WernerLink(v))
    rest = WernerLink(r)
    c_ok = concurrence_werner(swap_werner(purified, rest))
    c_fail = concurrence_werner(swap_werner(WernerLink(max(u, v)), rest)) if failure == "keep" else 0.0
    ok = rng.random(size) < p
    return np.where(ok, c_ok, c_fail)


def avg_network_concurrence(net: Network, protocol: str = "naive", trials: int = 0, seed: int = 0,
                            failure: str = "zero") -> float:
    """Mean over all node pairs of the concurrence the protocol delivers;
    disconnected pairs count as 0.

    ``spp`` runs the best-gain SPP wherever it beats the plain chain and the
    plain chain elsewhere.  With ``trials`` > 0 the SPP outcome is sampled
    that many times per pair instead of averaged exactly.
    """
    if protocol not in ("naive", "spp"):
        raise ValueError("protocol must be naive or spp")
    if net.n < 2:
        raise ValueError("need at least two nodes")
    x = _werner_x(net)
    comp = _components(net)
    total = 0.0
    for A, B in combinations(range(net.n), 2):
        if comp[A] != comp[B]:
            continue
        if protocol == "naive":
            path = netgraph.shortest_path(net, A, B)
            total += float(werner_concurrence(math.prod(x[e] for e in path.edges)))
            continue
        rng = _rng.trial_rng(seed, "avgcon", A * net.n + B) if trials else None
        res = spp(net, A, B, rng, failure, "best-gain", trials)
        helps = res.plan is not None and spp_average(res.plan.u, res.plan.v, res.plan.r, failure) > res.baseline
        total += res.avg_concurrence if helps else res.baseline
    return 2.0 * total / (net.n * (net.n - 1))


def _components(net):
    g = np.arange(net.n)

    def find(a):
        while g[a] != a:
            g[a] = g[g[a]]
            a = g[a]
        return a

    for u, v in zip(net.eu.tolist(), net.ev.tolist()):
        ru, rv = find(u), find(v)
        if ru != rv:
            g[max(ru, rv)] = min(ru, rv)
    return np.array([find(a) for a in range(net.n)])


# -- formulas ------------------------------------------------------------------------


def delta_c_asymptotic(N: float, x: float, A: float = DELTA_C_CONSTANT) -> float:
    """Large-N gain of SPP over plain swapping on ER graphs at Np = 1."""
    if not x < 1.0:
        raise ValueError("x must be < 1")
    return A * N**-2 * (1.0 - x) ** -4


def noisy_spp_gain(noise: NoiseModel) -> float:
    """Largest average concurrence gain of SPP under imperfect operations.

    Returns nan (with a warning) when the readout noise makes the formula
    singular, i.e. delta = 2 eta (1 - eta) reaches 1/2.
    """
    d = noise.delta
    if d >= 0.5:
        warnings.warn(f"noisy_spp_gain is singular for delta = {d} >= 1/2", RuntimeWarning, stacklevel=2)
        return float("nan")
    return 0.25 * (4.0 * (1.0 - d) ** 2 / (9.0 * (1.0 - 2.0 * d)) - (1.0 + 2.0 * d) / 3.0 - noise.alpha)


def noisy_gain_sign_change(p2: float = 1.0, eta_max: float = 0.5, grid: int = 20001) -> float | None:
    """Smallest readout error eta at which the gain changes sign from
    positive to negative, or None if it never does below ``eta_max``."""
    etas = np.linspace(0.0, eta_max, grid, endpoint=False)
    g = np.array([noisy_spp_gain(NoiseModel(0.0, float(e), p2)) for e in etas])
    for k in range(len(g) - 1):
        if g[k] > 0.0 and g[k + 1] < 0.0:
            return float(optimize.brentq(lambda e: noisy_spp_gain(NoiseModel(0.0, e, p2)),
                                         etas[k], etas[k + 1], xtol=1e-14))
    return None


def teleport_chain_fidelity(links: Sequence[PureLink]) -> float:
    """State-averaged fidelity of teleporting hop by hop along the links."""
    if not links:
        raise ValueError("empty path")
    prod = math.prod(math.sqrt(4.0 * l.phi0 * l.phi1) for l in links)
    return (3.0 + prod) / 4.0


# -- two-weight measure ----------------------------------------------------------------


@dataclass(frozen=True)
class TwoWeightEdge:
    x: float
    y: float

    def __post_init__(self):
        for name in ("x", "y"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")


def two_weight_path_fidelity(edges: Sequence[TwoWeightEdge], c: float = 0.0) -> float:
    return c + math.prod(e.x for e in edges) + math.prod(e.y for e in edges)


# optima closer than this are treated as ties
TIE_MARGIN = 1e-9


def _two_weight_best(net: Network, A: int, B: int, c: float):
    """(best path, its value, whether it beats every other path by TIE_MARGIN)."""
    scored = sorted(((two_weight_path_fidelity([net.payloads[e] for e in p.edges], c), p)
                     for p in netgraph.all_simple_paths(net, A, B)), key=lambda t: -t[0])
    if not scored:
        return NO_PATH, -math.inf, False
    unique = len(scored) == 1 or scored[0][0] - scored[1][0] > TIE_MARGIN
    return scored[0][1], scored[0][0], unique


@dataclass(frozen=True)
class SubstructureWitness:
    net: Network
    A: int
    B: int
    Z: int
    c: float
    best_ab: PathDescriptor
    best_az: PathDescriptor
    value_ab: float
    value_az: float

    def verify(self) -> bool:
        """Re-derive both optima by enumeration and check that the best A-Z
        path does not run through the best A-B path."""
        ab, _, uab = _two_weight_best(self.net, self.A, self.B, self.c)
        az, _, uaz = _two_weight_best(self.net, self.A, self.Z, self.c)
        if not (uab and uaz) or ab != self.best_ab or az != self.best_az:
            return False
        zb = [e for e in az.edges if self.Z in (int(self.net.eu[e]), int(self.net.ev[e]))]
        nbrs = self.net.neighbors(self.Z)
        return (len(nbrs) == 1 and int(nbrs[0]) == self.B and len(zb) == 1
                and az.edges[:-1] != ab.edges)


WEIGHT_GRID = (0.1, 0.5, 0.9)


def substructure_counterexample(c: float = 0.0, max_nodes: int = 6,
                                grid: Sequence[float] = WEIGHT_GRID) -> SubstructureWitness:
    """Smallest graph (a cycle through A and B plus a pendant Z on B) with
    grid weights where the best A-Z path under the two-product measure does
    not extend the best A-B path."""
    import itertools

    for n in range(4, max_nodes + 1):
        ring = n - 1  # nodes 0..ring-1 form a cycle, A = 0; Z = ring
        for B in range(1, ring // 2 + 1):
            edges = [(k, (k + 1) % ring) for k in range(ring)] + [(B, ring)]
            for ws in itertools.product(itertools.product(grid, repeat=2), repeat=len(edges)):
                pays = [TwoWeightEdge(a, b) for a, b in ws]
                net = Network.from_edges(n, edges, payloads=pays, topology="two-weight")
                ab, vab, uab = _two_weight_best(net, 0, B, c)
                az, vaz, uaz = _two_weight_best(net, 0, ring, c)
                if uab and uaz and az.edges[:-1] != ab.edges:
                    w = SubstructureWitness(net, 0, B, ring, c, ab, az, vab, vaz)
                    if w.verify():
                        return w
    raise RuntimeError("no witness found; widen the search")
