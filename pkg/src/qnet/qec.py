"""Error correction from a global syndrome pattern on a square torus.

Edges of an L x L torus are flipped independently with probability p.
Every vertex reports the parity of its flipped incident edges; odd vertices
form the syndrome.  A minimum-weight perfect matching under the toroidal
Manhattan metric pairs them up, each pair is joined by a deterministic
shortest lattice path, and the trial fails when the residual (errors plus
correction) winds around the torus an odd number of times in either
direction.

Lattice conventions follow :func:`qnet.netgraph.gen_square`: vertex
``k = j*L + i`` and edges ``2k`` (+x from k) and ``2k+1`` (+y from k).
"""

from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from . import _rng, netgraph
from .perc.engine import ThresholdEstimate, crossing
from .qstate import BitPhaseLink

try:  # pragma: no cover - exercised through whichever backend is present
    import pymatching
except ImportError:  # pragma: no cover
    pymatching = None

BACKENDS = ("pymatching", "networkx")
DEFAULT_BACKEND = "pymatching" if pymatching is not None else "networkx"
BRUTE_FORCE_LIMIT = 12


class InvariantError(RuntimeError):
    """A decoded trial broke an invariant that holds by construction."""


@dataclass(frozen=True)
class ErrorPattern:
    L: int
    flips: np.ndarray  # uint8 per edge
    p: float = float("nan")
    seed: int | None = None

    def edges(self) -> np.ndarray:
        return np.flatnonzero(self.flips)


@dataclass(frozen=True)
class Syndrome:
    L: int
    vertices: np.ndarray  # sorted vertex ids with odd parity

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class Matching:
    L: int
    pairs: tuple[tuple[int, int], ...]
    paths: tuple[tuple[int, ...], ...]  # edge ids per pair
    weight: int

    def correction(self) -> np.ndarray:
        out = np.zeros(2 * self.L * self.L, np.uint8)
        for path in self.paths:
            for e in path:
                out[e] ^= 1
        return out


@dataclass(frozen=True)
class TrialResult:
    success: bool
    winding_x: bool  # odd residual winding along x
    winding_y: bool
    weight: int = 0
    syndrome_size: int = 0


def _check_L(L):
    if L < 4 or L % 2:
        raise ValueError(f"L must be an even integer >= 4, got {L}")


# -- sampling and syndromes ---------------------------------------------------


def sample_errors(L: int, p: float, rng, seed: int | None = None) -> ErrorPattern:
    _check_L(L)
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    flips = (rng.random(2 * L * L) < p).astype(np.uint8)
    return ErrorPattern(L, flips, p, seed)


def vertex_parity(L: int, flips: np.ndarray) -> np.ndarray:
    f = np.asarray(flips, np.uint8).reshape(L, L, 2)  # [j, i, dir]
    par = f[:, :, 0] ^ f[:, :, 1]
    par ^= np.roll(f[:, :, 0], 1, axis=1)  # +x edge arriving from (i-1, j)
    par ^= np.roll(f[:, :, 1], 1, axis=0)  # +y edge arriving from (i, j-1)
    return par.reshape(-1)


def extract_syndromes(errors: ErrorPattern) -> Syndrome:
    return Syndrome(errors.L, np.flatnonzero(vertex_parity(errors.L, errors.flips)))


# -- matching ------------------------------------------------------------------


def torus_distance(L: int, a: int, b: int) -> int:
    ja, ia = divmod(int(a), L)
    jb, ib = divmod(int(b), L)
    dx, dy = abs(ia - ib), abs(ja - jb)
    return min(dx, L - dx) + min(dy, L - dy)


def _distance_matrix(L, verts):
    v = np.asarray(verts)
    j, i = np.divmod(v, L)
    dx = np.abs(i[:, None] - i[None, :])
    dy = np.abs(j[:, None] - j[None, :])
    return np.minimum(dx, L - dx) + np.minimum(dy, L - dy)


def _steps(a, b, L):
    """(direction, count) of the shorter way from a to b on a cycle of L;
    a half-turn goes the positive way."""
    d = (b - a) % L
    return (1, d) if d <= L - d else (-1, L - d)


def lattice_path(L: int, a: int, b: int) -> tuple[int, ...]:
    """Edges of the deterministic shortest path from a to b: along the row
    of a first, then along the column of b, each the shorter way round."""
    ja, ia = divmod(int(a), L)
    jb, ib = divmod(int(b), L)
    out = []
    sx, nx_ = _steps(ia, ib, L)
    for s in range(nx_):
        x = (ia + s) % L if sx > 0 else (ia - s - 1) % L
        out.append(2 * (ja * L + x))
    sy, ny = _steps(ja, jb, L)
    for s in range(ny):
        y = (ja + s) % L if sy > 0 else (ja - s - 1) % L
        out.append(2 * (y * L + ib) + 1)
    return tuple(out)


@functools.lru_cache(maxsize=16)
def _pymatching_graph(L):
    net = netgraph.gen_square(L, "torus")
    g = pymatching.Matching()
    for e, (u, v) in enumerate(net.edges()):
        g.add_edge(int(u), int(v), fault_ids={e}, weight=1.0)
    return g


def _pairs_pymatching(L, verts):
    det = np.zeros(L * L, np.uint8)
    det[verts] = 1
    pairs = _pymatching_graph(L).decode_to_matched_dets_array(det)
    return [(int(a), int(b)) for a, b in pairs]


def _pairs_networkx(L, verts):
    D = _distance_matrix(L, verts)
    big = int(D.max(initial=0)) + 1
    g = nx.Graph()
    k = len(verts)
    for x in range(k):
        for y in range(x + 1, k):
            g.add_edge(x, y, weight=big - int(D[x, y]))
    m = nx.max_weight_matching(g, maxcardinality=True)
    return [(int(verts[x]), int(verts[y])) for x, y in m]


def decode_mwpm(syndrome: Syndrome, backend: str | None = None) -> Matching:
    """Minimum-weight perfect matching of the syndrome vertices.

    Both backends are exact blossom implementations; pymatching works on the
    lattice graph itself, networkx on the complete syndrome graph with
    toroidal distances.
    """
    backend = backend or DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    L = syndrome.L
    verts = np.asarray(syndrome.vertices, np.int64)
    if len(verts) % 2:
        raise InvariantError(f"odd syndrome ({len(verts)} vertices) on a torus")
    if len(verts) == 0:
        return Matching(L, (), (), 0)
    if backend == "pymatching":
        if pymatching is None:
            raise ValueError("pymatching is not installed")
        raw = _pairs_pymatching(L, verts)
    else:
        raw = _pairs_networkx(L, verts)
    pairs = tuple(sorted((min(a, b), max(a, b)) for a, b in raw))
    if sorted(v for pr in pairs for v in pr) != verts.tolist():
        raise InvariantError("matching is not perfect on the syndrome")
    paths = tuple(lattice_path(L, a, b) for a, b in pairs)
    return Matching(L, pairs, paths, sum(len(p) for p in paths))


def brute_force_matching(L: int, verts: Sequence[int]) -> tuple[int, tuple[tuple[int, int], ...]]:
    """Minimum total toroidal distance over every perfect matching."""
    verts = [int(v) for v in verts]
    if len(verts) % 2:
        raise ValueError("need an even number of vertices")
    if len(verts) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} vertices")
    best = [math.inf, ()]

    def rec(rest, acc, pairs):
        if acc >= best[0]:
            return
        if not rest:
            best[0], best[1] = acc, tuple(pairs)
            return
        a = rest[0]
        for k in range(1, len(rest)):
            b = rest[k]
            rec(rest[1:k] + rest[k + 1 :], acc + torus_distance(L, a, b), pairs + [(a, b)])

    rec(verts, 0, [])
    return int(best[0]) if verts else 0, best[1]


# -- logical check -------------------------------------------------------------


def winding_parities(L: int, flips: np.ndarray) -> tuple[bool, bool]:
    """Crossing parities of a cycle with the cuts x = L-1|0 and y = L-1|0."""
    f = np.asarray(flips, np.uint8).reshape(L, L, 2)
    return bool(f[:, L - 1, 0].sum() % 2), bool(f[L - 1, :, 1].sum() % 2)


def logical_check(errors: ErrorPattern, matching: Matching) -> TrialResult:
    residual = errors.flips ^ matching.correction()
    if vertex_parity(errors.L, residual).any():
        raise InvariantError("residual has a nonempty syndrome")
    wx, wy = winding_parities(errors.L, residual)
    return TrialResult(not (wx or wy), wx, wy, matching.weight, 2 * len(matching.pairs))


def run_trial(L: int, p: float, rng, backend: str | None = None) -> TrialResult:
    err = sample_errors(L, p, rng)
    return logical_check(err, decode_mwpm(extract_syndromes(err), backend))


# -- rates and thresholds -------------------------------------------------------


@dataclass(frozen=True)
class LogicalRate:
    L: int
    p: float
    trials: int
    failures: int
    seed: int

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials

    @property
    def stderr(self) -> float:
        return _rng.binomial_stderr(self.failures, self.trials)

    def row(self) -> dict:
        return {"L": self.L, "p": self.p, "trials": self.trials, "failures": self.failures,
                "failure_rate": self.failure_rate, "stderr": self.stderr}


def _stream(L, p):
    return f"qec:{L}:{p:.10g}"


def _failures_chunk(L, p, seed, backend, lo, hi):
    fails = 0
    for t in range(lo, hi):
        fails += not run_trial(L, p, _rng.trial_rng(seed, _stream(L, p), t), backend).success
    return fails


def _chunk_task(args):
    return _failures_chunk(*args)


def logical_error_rate(L: int, p: float, trials: int, seed: int = 0, workers: int | None = 1,
                       backend: str | None = None) -> LogicalRate:
    """Failure count over ``trials`` decoded trials; independent of ``workers``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _check_L(L)
    w = _rng.default_workers() if workers is None else max(1, int(workers))
    if w == 1:
        fails = _failures_chunk(L, p, seed, backend, 0, trials)
    else:
        step = -(-trials // (4 * w))
        tasks = [(L, p, seed, backend, lo, min(trials, lo + step)) for lo in range(0, trials, step)]
        fails = sum(_rng.map_trials(functools.partial(_indexed, tasks), len(tasks), w, chunk=1))
    return LogicalRate(L, float(p), trials, int(fails), seed)


def _indexed(tasks, k):
    return _chunk_task(tasks[k])


@dataclass(frozen=True)
class QecThreshold:
    estimate: ThresholdEstimate
    curves: dict = field(default_factory=dict)  # L -> list[LogicalRate]

    @property
    def value(self):
        return self.estimate.value


def threshold_estimate(sizes: Sequence[int], ps: Iterable[float], trials: int, seed: int = 0,
                       workers: int | None = 1, backend: str | None = None) -> QecThreshold:
    """Failure-rate curves per L and the crossing of the two largest sizes
    (piecewise-linear curves), with half the spread of all pairwise crossings
    as the uncertainty."""
    sizes = sorted(int(L) for L in sizes)
    if len(sizes) < 2:
        raise ValueError("need at least two system sizes")
    ps = [float(p) for p in ps]
    curves = {L: [logical_error_rate(L, p, trials, seed, workers, backend) for p in ps] for L in sizes}
    grid = np.asarray(ps)

    def curve(L):
        ys = np.array([r.failure_rate for r in curves[L]])
        return lambda q: float(np.interp(q, grid, ys))

    found = {}
    for a in range(len(sizes)):
        for b in range(a + 1, len(sizes)):
            c = crossing(curve(sizes[a]), curve(sizes[b]), grid[0], grid[-1])
            if c is not None:
                found[(sizes[a], sizes[b])] = c
    main = found.get((sizes[-2], sizes[-1]), float("nan"))
    vals = list(found.values())
    unc = 0.5 * (max(vals) - min(vals)) if len(vals) > 1 else float("nan")
    return QecThreshold(ThresholdEstimate(main, unc, found), curves)


CSV_FIELDS = ("L", "p", "trials", "failures", "failure_rate", "stderr")


def write_rates_csv(path, rates: Iterable[LogicalRate]):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rates:
            row = r.row()
            row["p"] = repr(float(row["p"]))
            row["failure_rate"] = repr(float(row["failure_rate"]))
            row["stderr"] = repr(float(row["stderr"]))
            w.writerow(row)


def trial_debug(L: int, p: float, seed: int, trial: int, backend: str | None = None) -> dict:
    """Everything about one trial, for external visualisation."""
    err = sample_errors(L, p, _rng.trial_rng(seed, _stream(L, p), trial))
    syn = extract_syndromes(err)
    m = decode_mwpm(syn, backend)
    res = logical_check(err, m)
    return {
        "L": L, "p": p, "seed": seed, "trial": trial,
        "error_edges": err.edges().tolist(),
        "syndromes": syn.vertices.tolist(),
        "pairs": [list(pr) for pr in m.pairs],
        "correction_edges": np.flatnonzero(m.correction()).tolist(),
        "weight": m.weight,
        "success": res.success, "winding": [res.winding_x, res.winding_y],
    }


def dump_debug(path, records: Sequence[dict]):
    with open(path, "w") as fh:
        json.dump(list(records), fh, indent=1)


# -- GHZ bit-flip protocol -----------------------------------------------------


def ghz_bitflip_pipeline(net: netgraph.Network, rng, backend: str | None = None) -> TrialResult:
    """One round of giant-GHZ generation with bit-flip-only links.

    A flipped link inverts the parity checks it feeds, so every unit cell
    bordered by an odd number of flipped links lights up.  The unit cells
    are the vertices of the dual torus and each link crosses one dual edge,
    so decoding reduces to the dual-lattice problem with p = eps_b.
    """
    if net.topology != "square" or net.boundary != "torus":
        raise ValueError("need a square torus")
    links = net.payloads
    if not links or any(not isinstance(x, BitPhaseLink) for x in links):
        raise ValueError("every edge must carry a BitPhaseLink")
    if any(x.eps_p != 0.0 for x in links):
        raise ValueError("phase errors are not handled by the bit-flip protocol (need eps_p = 0)")
    (L,) = net.shape
    eps = np.array([x.eps_b for x in links])
    flipped = (rng.random(net.m) < eps).astype(np.uint8)
    # cell parity straight from the links around each plaquette
    f = flipped.reshape(L, L, 2)
    cells = f[:, :, 0] ^ np.roll(f[:, :, 0], -1, axis=0) ^ f[:, :, 1] ^ np.roll(f[:, :, 1], -1, axis=1)
    d = netgraph.dual(net)
    dual_flips = np.zeros(net.m, np.uint8)
    dual_flips[d.edge_map] = flipped
    err = ErrorPattern(L, dual_flips, float(eps.mean()))
    syn = extract_syndromes(err)
    if not np.array_equal(np.flatnonzero(cells.reshape(-1)), syn.vertices):
        raise InvariantError("cell parities disagree with the dual-lattice syndrome")
    return logical_check(err, decode_mwpm(syn, backend))
