"""Bond and site percolation on :class:`~qnet.netgraph.Network` objects.

Two estimators are provided:

* direct sampling at a fixed p (:func:`theta_and_spanning`), and
* Newman-Ziff sweeps (:func:`sweep`), where one uniform per element is
  drawn, the elements are added in increasing order of their uniform, and
  the state at any p is the prefix of elements with uniform < p.  A sweep
  therefore answers every p at once with a monotone coupling.

Spanning on a torus means some cluster winds around it (in either
direction); on open lattices it means touching two opposite sides.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .. import _rng
from ..netgraph import Network
from . import _core

WRAP_X, WRAP_Y, WRAP_ANY, WRAP_BOTH, REF_WRAPS = range(5)


@dataclass(frozen=True)
class PercSample:
    kind: str  # "bond" or "site"
    open: np.ndarray  # bool per edge or per node
    seed: object = None


@dataclass(frozen=True)
class Clusters:
    labels: np.ndarray  # cluster id per node, -1 for empty sites
    sizes: np.ndarray  # nodes per cluster id
    spans: np.ndarray  # bool per cluster id

    @property
    def count(self) -> int:
        return len(self.sizes)

    def largest(self) -> int:
        return int(np.argmax(self.sizes)) if len(self.sizes) else -1


@dataclass(frozen=True)
class PercEstimate:
    p: float
    theta_hat: float
    stderr: float
    spanning_prob: float
    largest_cluster_fraction: float
    trials: int
    spanning_stderr: float = 0.0
    seed: object = None


def _as_prob_array(p, size):
    arr = np.broadcast_to(np.asarray(p, float), (size,))
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return arr


def sample_bond(net: Network, p, rng=None, uniforms=None) -> PercSample:
    """Open each edge with probability p (scalar or per edge).  Passing the
    same ``uniforms`` for several p gives the monotone coupling."""
    if uniforms is None:
        uniforms = rng.random(net.m)
    return PercSample("bond", np.asarray(uniforms) < _as_prob_array(p, net.m))


def sample_site(net: Network, p, rng=None, uniforms=None) -> PercSample:
    if uniforms is None:
        uniforms = rng.random(net.n)
    return PercSample("site", np.asarray(uniforms) < _as_prob_array(p, net.n))


def _edge_arrays(net: Network):
    w = net.winding
    wx = np.ascontiguousarray(w[:, 0], dtype=np.int8) if w.shape[1] > 0 else np.zeros(net.m, np.int8)
    wy = np.ascontiguousarray(w[:, 1], dtype=np.int8) if w.shape[1] > 1 else np.zeros(net.m, np.int8)
    return (np.ascontiguousarray(net.eu, dtype=np.int32), np.ascontiguousarray(net.ev, dtype=np.int32), wx, wy)


def _boundary_sets(net: Network):
    pos = net.positions
    if pos is None:
        return []
    sides = []
    for axis in range(min(2, pos.shape[1])):
        lo, hi = pos[:, axis].min(), pos[:, axis].max()
        if hi - lo > 1e-9:
            sides.append((np.abs(pos[:, axis] - lo) < 1e-9, np.abs(pos[:, axis] - hi) < 1e-9))
    return sides


def clusters(net: Network, sample: PercSample) -> Clusters:
    """Connected components of the open subgraph (union-find)."""
    eu, ev, wx, wy = _edge_arrays(net)
    if sample.kind == "bond":
        mask = np.ascontiguousarray(sample.open, dtype=np.uint8)
        occupied = np.ones(net.n, bool)
    elif sample.kind == "site":
        occupied = np.asarray(sample.open, bool)
        mask = np.ascontiguousarray(occupied[net.eu] & occupied[net.ev], dtype=np.uint8)
    else:
        raise ValueError(f"unknown sample kind {sample.kind!r}")
    roots, wrap = _core.label_bonds(net.n, eu, ev, wx, wy, mask)
    roots = np.where(occupied, roots, -1)
    uniq, labels = np.unique(roots[occupied], return_inverse=True)
    out = np.full(net.n, -1, np.int64)
    out[occupied] = labels
    sizes = np.bincount(labels, minlength=len(uniq))
    if net.boundary == "torus":
        spans = wrap[uniq] != 0
    else:
        spans = np.zeros(len(uniq), bool)
        for lo, hi in _boundary_sets(net):
            touch_lo = np.zeros(len(uniq), bool)
            touch_hi = np.zeros(len(uniq), bool)
            touch_lo[np.unique(out[lo & occupied])] = True
            touch_hi[np.unique(out[hi & occupied])] = True
            spans |= touch_lo & touch_hi
    return Clusters(out, sizes, spans)


def _trial_stats(net, kind, p, rng, ref, pair):
    sample = sample_bond(net, p, rng) if kind == "bond" else sample_site(net, p, rng)
    cl = clusters(net, sample)
    if cl.count == 0:
        return False, False, 0.0, False
    big = cl.largest()
    spanning = bool(cl.spans.any())
    theta = bool(cl.labels[ref] == big and cl.spans[big])
    connected = False
    if pair is not None:
        a, b = pair
        connected = bool(cl.labels[a] >= 0 and cl.labels[a] == cl.labels[b])
    return spanning, theta, cl.sizes[big] / net.n, connected


def _theta_trial(net, kind, p, seed, stream, ref, t):
    return _trial_stats(net, kind, p, _rng.trial_rng(seed, stream, t), ref, None)


def theta_and_spanning(net: Network, p: float, trials: int, seed: int = 0, ref: int = 0,
                       kind: str = "bond", stream: str = "theta", workers: int | None = 1) -> PercEstimate:
    """Direct estimate of theta (ref in the largest cluster, which spans),
    the spanning probability and the mean largest-cluster fraction.

    ``p`` may be per element; the estimate then records its mean."""
    span = theta = 0
    frac = 0.0
    fn = functools.partial(_theta_trial, net, kind, p, seed, stream, ref)
    for s, th, f, _ in _rng.map_trials(fn, trials, workers):
        span += s
        theta += th
        frac += f
    return PercEstimate(
        p=float(np.mean(p)),
        theta_hat=theta / trials,
        stderr=_rng.binomial_stderr(theta, trials),
        spanning_prob=span / trials,
        largest_cluster_fraction=frac / trials,
        trials=trials,
        spanning_stderr=_rng.binomial_stderr(span, trials),
        seed=seed,
    )


def pair_connection(net: Network, p: float, trials: int, a: int, b: int, seed: int = 0,
                    kind: str = "bond", stream: str = "pair") -> tuple[float, float, float, float]:
    """(P(a<->b), stderr, theta_a, stderr) from the same samples."""
    conn = theta = 0
    for t in range(trials):
        _, th, _, c = _trial_stats(net, kind, p, _rng.trial_rng(seed, stream, t), a, (a, b))
        conn += c
        theta += th
    return (conn / trials, _rng.binomial_stderr(conn, trials), theta / trials, _rng.binomial_stderr(theta, trials))


def antipode(net: Network, node: int) -> int:
    """Node farthest from ``node`` on a lattice torus."""
    pos = net.positions
    (L,) = net.shape
    span = pos.max(axis=0) - pos.min(axis=0)
    period = span * L / max(L - 1, 1)
    target = pos[node] + period / 2
    d = np.abs(((pos - target + period / 2) % period) - period / 2).sum(axis=1)
    return int(np.argmin(d))


# -- Newman-Ziff sweeps ------------------------------------------------------


@dataclass(frozen=True)
class Sweep:
    """One sweep: thresholds sorted ascending and the element count at which
    each wrap event first held (-1 for never)."""

    kind: str
    thresholds: np.ndarray
    first: np.ndarray
    largest: np.ndarray

    def count_below(self, p) -> np.ndarray:
        return np.searchsorted(self.thresholds, p, side="left")

    def holds(self, event: int, p) -> np.ndarray:
        f = self.first[event]
        if f < 0:
            return np.zeros(np.shape(p), bool)
        return self.count_below(p) >= f


def sweep(net: Network, rng, kind: str = "bond", ref: int = -1, thresholds=None) -> Sweep:
    """Add elements in increasing order of their threshold.

    By default thresholds are i.i.d. uniforms; pass per-element thresholds
    to sweep a parameter other than p (e.g. when element i opens once a
    link parameter exceeds thresholds[i]).
    """
    size = net.m if kind == "bond" else net.n
    if thresholds is None:
        thresholds = rng.random(size)
    thresholds = np.asarray(thresholds, float)
    order = np.argsort(thresholds, kind="stable").astype(np.int64)
    if kind == "bond":
        eu, ev, wx, wy = _edge_arrays(net)
        largest, first = _core.nz_bond_sweep(net.n, eu, ev, wx, wy, order, ref)
    elif kind == "site":
        indptr, nbr, _, wind = net.csr
        nwx = np.ascontiguousarray(wind[:, 0]) if wind.shape[1] > 0 else np.zeros(len(nbr), np.int8)
        nwy = np.ascontiguousarray(wind[:, 1]) if wind.shape[1] > 1 else np.zeros(len(nbr), np.int8)
        largest, first = _core.nz_site_sweep(net.n, indptr, np.ascontiguousarray(nbr, np.int32), nwx, nwy, order, ref)
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")
    return Sweep(kind, thresholds[order], np.asarray(first), np.asarray(largest))


@dataclass
class SweepEnsemble:
    """Aggregated microcanonical statistics of many sweeps on one network."""

    kind: str
    size: int  # number of elements swept
    n_nodes: int
    trials: int
    first: np.ndarray  # (trials, 5)
    largest_mean: np.ndarray  # (size + 1,) mean largest cluster / n_nodes
    seed: object = None
    label: str = ""

    def micro(self, event: int = WRAP_ANY) -> np.ndarray:
        """Fraction of sweeps in which ``event`` holds after k elements."""
        f = self.first[:, event]
        hist = np.bincount(f[f >= 0], minlength=self.size + 1)[: self.size + 1]
        return np.cumsum(hist) / self.trials

    def canonical(self, p, event: int = WRAP_ANY) -> np.ndarray:
        """Binomial convolution of the microcanonical curve."""
        micro = self.micro(event)
        k = np.arange(self.size + 1)
        p = np.atleast_1d(np.asarray(p, float))
        return np.array([float(np.dot(stats.binom.pmf(k, self.size, q), micro)) for q in p])

    def canonical_largest(self, p) -> np.ndarray:
        k = np.arange(self.size + 1)
        p = np.atleast_1d(np.asarray(p, float))
        return np.array([float(np.dot(stats.binom.pmf(k, self.size, q), self.largest_mean)) for q in p])

    def at(self, p: float, event: int = WRAP_ANY) -> tuple[float, float]:
        val = float(self.canonical(p, event)[0])
        return val, math.sqrt(max(val * (1 - val), 0.0) / self.trials)


def _sweep_trial(net, kind, ref, seed, stream, t):
    return sweep(net, _rng.trial_rng(seed, stream, t), kind, ref)


def sweep_ensemble(net: Network, trials: int, seed: int = 0, kind: str = "bond", ref: int = 0,
                   stream: str = "nz", label: str = "", workers: int | None = 1) -> SweepEnsemble:
    size = net.m if kind == "bond" else net.n
    first = np.empty((trials, 5), np.int64)
    acc = np.zeros(size + 1)
    fn = functools.partial(_sweep_trial, net, kind, ref, seed, stream)
    for t, sw in enumerate(_rng.map_trials(fn, trials, workers)):
        first[t] = sw.first
        acc += sw.largest
    return SweepEnsemble(kind, size, net.n, trials, first, acc / (trials * net.n), seed, label)


def crossing(curve_a: Callable[[float], float], curve_b: Callable[[float], float],
             lo: float, hi: float, grid: int = 201) -> float | None:
    """Root of curve_a - curve_b in [lo, hi] closest to the middle of the
    bracket, or None if the curves do not cross there."""
    ps = np.linspace(lo, hi, grid)
    d = np.array([curve_a(p) - curve_b(p) for p in ps])
    roots = []
    for i in range(grid - 1):
        if d[i] == 0:
            roots.append(ps[i])
        elif d[i] * d[i + 1] < 0:
            roots.append(optimize.brentq(lambda q: curve_a(q) - curve_b(q), ps[i], ps[i + 1], xtol=1e-10))
    if not roots:
        return None
    mid = 0.5 * (lo + hi)
    return float(min(roots, key=lambda r: abs(r - mid)))


@dataclass(frozen=True)
class ThresholdEstimate:
    value: float
    uncertainty: float
    crossings: dict = field(default_factory=dict)  # (label_a, label_b) -> crossing


def threshold_from_ensembles(ensembles: Sequence[SweepEnsemble], lo: float, hi: float,
                             event: int = WRAP_ANY, transform: Callable[[float], float] | None = None
                             ) -> ThresholdEstimate:
    """Crossing of the two largest systems' canonical spanning curves; the
    uncertainty is half the spread of all pairwise crossings.

    ``transform`` maps the swept parameter to the element probability, so a
    threshold can be reported directly in a link parameter.
    """
    if len(ensembles) < 2:
        raise ValueError("need at least two system sizes")
    tf = transform or (lambda q: q)
    ens = sorted(ensembles, key=lambda e: e.n_nodes)

    def curve(e):
        return lambda q: float(e.canonical(tf(q), event)[0])

    found = {}
    for i in range(len(ens)):
        for j in range(i + 1, len(ens)):
            c = crossing(curve(ens[i]), curve(ens[j]), lo, hi)
            if c is not None:
                found[(ens[i].label or ens[i].n_nodes, ens[j].label or ens[j].n_nodes)] = c
    key = (ens[-2].label or ens[-2].n_nodes, ens[-1].label or ens[-1].n_nodes)
    if key not in found:
        return ThresholdEstimate(float("nan"), float("inf"), found)
    vals = list(found.values())
    return ThresholdEstimate(found[key], 0.5 * (max(vals) - min(vals)), found)
