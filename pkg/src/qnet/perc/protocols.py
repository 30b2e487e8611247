"""Entanglement-percolation protocols built on the percolation engine.

CEP converts every (multi-)bond of pure links into a Bell pair with its
optimal single-shot probability and asks whether the open bonds percolate.
The quantum variants first rewrite the network with swaps (honeycomb to
triangular, q-star to q-cycle) or GHZ merges and then percolate the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .. import _rng, netgraph, qstate
from ..netgraph import Network
from ..qstate import PureLink, WernerLink
from . import engine

HONEYCOMB_PC = 1.0 - 2.0 * math.sin(math.pi / 18.0)
SQUARE_PC = 0.5
TRIANGULAR_PC = 2.0 * math.sin(math.pi / 18.0)
CUBIC_PC = 0.2488
# numerical bond threshold of the (4,8^2) lattice, used only for reporting
FOUR_EIGHT_PC = 0.676803


def exact_thresholds() -> dict[str, float]:
    """Bond-percolation thresholds (exact for the planar three, numeric for
    the simple cubic lattice)."""
    return {"honeycomb": HONEYCOMB_PC, "square": SQUARE_PC, "triangular": TRIANGULAR_PC, "cubic": CUBIC_PC}


# -- classical entanglement percolation ---------------------------------------


def bell_probability(link: PureLink, mult: int = 1) -> float:
    """Best probability of distilling one Bell pair from ``mult`` copies."""
    return qstate.bell_conversion_prob([link] * int(mult))


def cep(net: Network, trials: int = 0, seed: int = 0, ref: int = 0) -> tuple[np.ndarray, engine.PercEstimate | None]:
    """Per-edge open probabilities under CEP and, if ``trials`` > 0, a
    spanning estimate of the resulting bond percolation."""
    probs = np.empty(net.m)
    cache = {}
    for e in range(net.m):
        link, m = net.payloads[e], int(net.mult[e])
        if not isinstance(link, PureLink):
            raise ValueError(f"edge {e} does not carry a pure link")
        key = (link.phi1, m)
        if key not in cache:
            cache[key] = bell_probability(link, m)
        probs[e] = cache[key]
    est = engine.theta_and_spanning(net, probs, trials, seed, ref, stream="cep") if trials else None
    return probs, est


def double_bond_probability(E: float) -> float:
    """CEP bond probability of two parallel pure links of entanglement E."""
    return 2.0 * E - 0.5 * E * E


def double_bond_entanglement(p: float) -> float:
    """Inverse of :func:`double_bond_probability` on [0, 1]."""
    return 2.0 - math.sqrt(4.0 - 2.0 * p)


def cep_double_bond_threshold(bond_pc: float) -> float:
    """Link entanglement at which double-bond CEP reaches ``bond_pc``."""
    return double_bond_entanglement(bond_pc)


# -- quantum percolation on the honeycomb ------------------------------------


@dataclass(frozen=True)
class QepComparison:
    cep_threshold: float
    qep_threshold: float
    entanglement: float
    cep: engine.PercEstimate | None
    qep: engine.PercEstimate | None
    z_score: float = float("nan")


def bell_swap_open(link: PureLink, rng, size: int) -> np.ndarray:
    """Open indicators for ``size`` independent Bell-basis swaps of two
    copies of ``link``, each followed by single-copy Bell conversion."""
    outcomes = qstate.swap_pure_bell(link, link)
    probs = np.array([o.probability for o in outcomes])
    ents = np.array([o.link.entanglement for o in outcomes])
    which = rng.choice(len(outcomes), size=size, p=probs / probs.sum())
    return rng.random(size) < ents[which]


def _span(net, open_mask) -> bool:
    return bool(engine.clusters(net, engine.PercSample("bond", open_mask)).spans.any())


def qep_honeycomb_compare(phi: PureLink, L: int = 64, trials: int = 0, seed: int = 0) -> QepComparison:
    """Thresholds of CEP on the double-bond honeycomb and of QEP after the
    triangular rewrite, plus paired spanning estimates at ``phi``.

    QEP samples one swap outcome per triangular bond (outcomes at different
    bonds are independent) and opens the bond with the Bell-conversion
    probability of that outcome.
    """
    cep_th = cep_double_bond_threshold(HONEYCOMB_PC)
    qep_th = TRIANGULAR_PC
    if not trials:
        return QepComparison(cep_th, qep_th, phi.entanglement, None, None)
    hexnet = netgraph.gen_honeycomb(L, "torus", phi, mult=2)
    tri = netgraph.honeycomb_to_triangular(hexnet, basis="bx")
    p_cep = bell_probability(phi, 2)
    hits_c = hits_q = 0
    for t in range(trials):
        rng = _rng.trial_rng(seed, "qep-compare", t)
        hits_c += _span(hexnet, rng.random(hexnet.m) < p_cep)
        hits_q += _span(tri, bell_swap_open(phi, rng, tri.m))
    se_c = _rng.binomial_stderr(hits_c, trials)
    se_q = _rng.binomial_stderr(hits_q, trials)
    est_c = engine.PercEstimate(p_cep, float("nan"), float("nan"), hits_c / trials, float("nan"), trials, se_c, seed)
    est_q = engine.PercEstimate(phi.entanglement, float("nan"), float("nan"), hits_q / trials, float("nan"),
                                trials, se_q, seed)
    comb = math.hypot(se_c, se_q)
    z = (hits_q - hits_c) / trials / comb if comb > 0 else float("inf") * np.sign(hits_q - hits_c)
    return QepComparison(cep_th, qep_th, phi.entanglement, est_c, est_q, float(z))


# -- multipartite (GHZ) percolation -----------------------------------------------


@dataclass(frozen=True)
class MultipartiteResult:
    ghz: engine.PercEstimate
    cep: engine.PercEstimate
    z_score: float


def multipartite_ghz_percolation(phi: PureLink, L: int = 48, trials: int = 1000, seed: int = 0) -> MultipartiteResult:
    """Site percolation of GHZ states (each made with probability E) on the
    GHZ lattice of the (4,8^2) torus, against CEP bond percolation on the
    same torus at the same probability."""
    base = netgraph.gen_four_eight(L, "torus", phi)
    sites = netgraph.ghz_site_lattice(base)
    p = phi.entanglement
    ghz = engine.theta_and_spanning(sites, p, trials, seed, kind="site", stream="ghz-site")
    bond = engine.theta_and_spanning(base, p, trials, seed, kind="bond", stream="ghz-cep")
    comb = math.hypot(ghz.spanning_stderr, bond.spanning_stderr)
    z = (ghz.spanning_prob - bond.spanning_prob) / comb if comb > 0 else float("nan")
    return MultipartiteResult(ghz, bond, float(z))


def multipartite_thresholds(sizes: Sequence[int] = (16, 32, 48), trials: int = 2000, seed: int = 0
                            ) -> tuple[engine.ThresholdEstimate, engine.ThresholdEstimate]:
    """(GHZ site threshold, CEP bond threshold) from spanning-curve crossings."""
    site = [engine.sweep_ensemble(netgraph.ghz_site_lattice(netgraph.gen_four_eight(L)), trials, seed,
                                  kind="site", stream="ghz-nz", label=L) for L in sizes]
    bond = [engine.sweep_ensemble(netgraph.gen_four_eight(L), trials, seed, stream="cep48-nz", label=L)
            for L in sizes]
    return (engine.threshold_from_ensembles(site, 0.55, 0.75),
            engine.threshold_from_ensembles(bond, 0.6, 0.75))


# -- q-swap on complex networks --------------------------------------------


STRATEGIES = ("never", "always", "breadth-first")


def qswap_centres(net: Network, strategy: str = "breadth-first", degrees: Iterable[int] | None = None,
                  start: int | None = None) -> list[int]:
    """Nodes at which a q-swap is applied.

    A node is eligible when its degree lies in ``degrees`` (default: any
    degree >= 2), it has no parallel edges and none of its neighbours has
    been swapped already.  ``always`` scans nodes by id; ``breadth-first``
    scans outward from ``start`` (default: the highest-degree node, ties to
    the lowest id) and then from the lowest unvisited id of each further
    component.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    if strategy == "never":
        return []
    deg = net.degree()
    allowed = set(degrees) if degrees is not None else set(range(2, int(deg.max(initial=0)) + 1))
    indptr, nbr, _, _ = net.csr
    swapped = np.zeros(net.n, bool)
    blocked = np.zeros(net.n, bool)
    centres = []

    def consider(u):
        if blocked[u] or deg[u] not in allowed or deg[u] < 2:
            return
        ns = nbr[indptr[u] : indptr[u + 1]]
        if len(np.unique(ns)) != len(ns):
            return
        swapped[u] = True
        blocked[u] = True
        blocked[ns] = True
        centres.append(int(u))

    if strategy == "always":
        for u in range(net.n):
            consider(u)
        return centres
    from collections import deque

    seen = np.zeros(net.n, bool)
    first = int(np.lexsort((np.arange(net.n), -deg))[0]) if start is None else int(start)
    roots = [first] + [u for u in range(net.n) if u != first]
    for r in roots:
        if seen[r]:
            continue
        seen[r] = True
        queue = deque([r])
        while queue:
            u = queue.popleft()
            consider(u)
            for v in nbr[indptr[u] : indptr[u + 1]].tolist():
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
    return centres


def qswap_rewrite(net: Network, centres: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edge list after q-swapping ``centres``: (eu, ev, is_cycle_edge).

    Untouched edges keep their order; cycle edges follow, centre by centre,
    joining neighbours in increasing id order.
    """
    indptr, nbr, eid, _ = net.csr
    drop = np.zeros(net.m, bool)
    cyc = []
    for c in centres:
        ns = np.sort(nbr[indptr[c] : indptr[c + 1]])
        drop[eid[indptr[c] : indptr[c + 1]]] = True
        q = len(ns)
        for a in range(q):
            cyc.append((ns[a], ns[(a + 1) % q]))
    keep = ~drop
    cyc = np.asarray(cyc, np.int32).reshape(-1, 2)
    eu = np.concatenate([net.eu[keep], cyc[:, 0]]).astype(np.int32)
    ev = np.concatenate([net.ev[keep], cyc[:, 1]]).astype(np.int32)
    flag = np.concatenate([np.zeros(int(keep.sum()), bool), np.ones(len(cyc), bool)])
    return eu, ev, flag


def qswap_thresholds_for_edges(is_cycle: np.ndarray, rng) -> np.ndarray:
    """Per-edge activation thresholds in E: a double bond opens once
    2E - E^2/2 exceeds its uniform, a Bell-swapped cycle bond once E does
    (its outcome-averaged open probability is exactly E)."""
    u = rng.random(len(is_cycle))
    return np.where(is_cycle, u, 2.0 - np.sqrt(4.0 - 2.0 * u))


@dataclass(frozen=True)
class QswapThreshold:
    strategy: str
    threshold: float
    stderr: float
    cep_threshold: float
    cep_stderr: float
    reduction: float  # 1 - threshold / cep_threshold
    reduction_stderr: float
    swapped_fraction: float
    trials: int
    criterion: str = ""
    per_trial: dict = field(default_factory=dict)


# giant-component fraction window used for the supercritical fit
QSWAP_FIT_WINDOW = (0.03, 0.2)
QSWAP_GRID = np.linspace(0.05, 0.30, 251)
QSWAP_DEGREES = (2, 3, 4, 5)


def _giant_curve(n, eu, ev, thresholds, grid):
    """Largest-cluster fraction at each E in ``grid`` from one sweep."""
    order = np.argsort(thresholds, kind="stable").astype(np.int64)
    zeros = np.zeros(len(eu), np.int8)
    largest, _ = engine._core.nz_bond_sweep(n, np.ascontiguousarray(eu, np.int32), np.ascontiguousarray(ev, np.int32),
                                            zeros, zeros, order, -1)
    k = np.searchsorted(thresholds[order], grid, side="right")
    return largest[k] / n


def giant_onset(grid, fraction, window=QSWAP_FIT_WINDOW) -> float:
    """Threshold from a straight-line fit of the giant fraction inside
    ``window``, extrapolated to zero.

    Above threshold the giant component is self-averaging, so this is far
    less sensitive to N than estimators built on critical cluster sizes.
    """
    lo, hi = window
    m = (fraction > lo) & (fraction < hi)
    if m.sum() < 3:
        return float("nan")
    slope, icept = np.polyfit(grid[m], fraction[m], 1)
    return float(-icept / slope) if slope > 0 else float("nan")


def _jackknife(curves_a, curves_b, grid, window):
    T = len(curves_a)
    sa, sb = curves_a.sum(0), curves_b.sum(0)
    vals = []
    for t in range(T):
        ea = giant_onset(grid, (sa - curves_a[t]) / (T - 1), window)
        eb = giant_onset(grid, (sb - curves_b[t]) / (T - 1), window)
        vals.append((ea, eb, 1.0 - eb / ea))
    v = np.asarray(vals)
    return np.sqrt((T - 1) / T * ((v - v.mean(0)) ** 2).sum(0))


def q_swap_threshold(family: Callable[[np.random.Generator], Network], trials: int, seed: int = 0,
                     strategy: str = "breadth-first", degrees: Iterable[int] | None = QSWAP_DEGREES,
                     grid: np.ndarray = QSWAP_GRID, window: tuple[float, float] = QSWAP_FIT_WINDOW
                     ) -> QswapThreshold:
    """Threshold (in link entanglement E) of double-bond CEP with and without
    q-swaps.

    The giant fraction is averaged over ``trials`` sampled graphs and fitted
    by ``giant_onset``.  Both curves share each graph and the uniforms of the
    edges the rewrite leaves untouched, so the reduction is paired.  Errors
    are leave-one-trial-out jackknife estimates.

    Swapping pays off at low-degree nodes: a degree-q centre trades q double
    bonds for q single ones, so the default only swaps degrees 2 to 5.
    """
    grid = np.asarray(grid, float)
    degrees = None if degrees is None else tuple(degrees)
    base, swapped, frac = [], [], []
    for t in range(trials):
        rng = _rng.trial_rng(seed, "qswap", t)
        net = family(rng)
        u = rng.random(net.m)
        th_cep = 2.0 - np.sqrt(4.0 - 2.0 * u)
        base.append(_giant_curve(net.n, net.eu, net.ev, th_cep, grid))
        centres = qswap_centres(net, strategy, degrees)
        eu, ev, cyc = qswap_rewrite(net, centres)
        keep = np.ones(net.m, bool)
        if centres:
            indptr, _, eid, _ = net.csr
            for c in centres:
                keep[eid[indptr[c] : indptr[c + 1]]] = False
        th = np.concatenate([th_cep[keep], rng.random(int(cyc.sum()))])
        swapped.append(_giant_curve(net.n, eu, ev, th, grid))
        frac.append(len(centres) / net.n)
    base, swapped = np.asarray(base), np.asarray(swapped)
    e_cep = giant_onset(grid, base.mean(0), window)
    e_sw = giant_onset(grid, swapped.mean(0), window)
    err = _jackknife(base, swapped, grid, window) if trials > 2 else np.full(3, np.nan)
    return QswapThreshold(
        strategy=strategy,
        threshold=e_sw,
        stderr=float(err[1]),
        cep_threshold=e_cep,
        cep_stderr=float(err[0]),
        reduction=float(1.0 - e_sw / e_cep),
        reduction_stderr=float(err[2]),
        swapped_fraction=float(np.mean(frac)),
        trials=trials,
        criterion=f"giant fraction in {window} extrapolated to zero",
        per_trial={"grid": grid, "cep": base, "qswap": swapped},
    )


def er_family(N: int, mean_degree: float):
    p = mean_degree / (N - 1)
    return lambda rng: netgraph.gen_er(N, p, rng, mult=2)


# -- Werner no-go ----------------------------------------------------------------


@dataclass(frozen=True)
class NoGoReport:
    applies: bool | None  # None when inconclusive
    x: float
    bond_threshold: float | None
    separable: bool
    reason: str


def werner_no_go(net_or_topology, x: float) -> NoGoReport:
    """Percolation no-go for Werner links.

    A Werner state with parameter x is a mixture of a perfect pair (weight
    x) and noise, so any protocol does no better than bond percolation with
    open probability x.  Below the lattice threshold nothing reaches long
    distances, even when every link is entangled (x > 1/3).
    """
    topo = net_or_topology.topology if isinstance(net_or_topology, Network) else str(net_or_topology)
    if isinstance(net_or_topology, Network):
        for p in net_or_topology.payloads:
            if p is not None and not isinstance(p, WernerLink):
                raise ValueError("werner_no_go expects Werner payloads")
    x = float(x)
    separable = x <= 1.0 / 3.0
    pc = exact_thresholds().get(topo)
    if pc is None:
        return NoGoReport(None, x, None, separable, f"no known threshold for {topo!r}: inconclusive")
    if x < pc:
        return NoGoReport(True, x, pc, separable, f"x={x} below bond threshold {pc:.5g}")
    if separable:
        return NoGoReport(None, x, pc, True,
                          f"x={x} above threshold {pc:.5g}: percolation bound inconclusive, links separable")
    return NoGoReport(False, x, pc, False, f"x={x} above threshold {pc:.5g} and entangled")
