"""Scalar recursion maps for deterministic repeater hierarchies.

Each step map sends [0, 1] to [0, 1].  ``iterate_to_fixed_point`` runs any of
them to convergence and the ``*_criticals`` helpers locate the parameter
values where the long-run behaviour changes, by bisection on an operational
predicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10**6
# a trajectory leaving [0, 1] by more than this is an internal error
DIVERGENCE_SLACK = 1e-9
# an attractor above this counts as nontrivial
NONTRIVIAL_FLOOR = 1e-3
# iteration start for criticality probes
PROBE_START = 1.0 - 1e-6

DIVERGED = float("nan")


@dataclass
class RecursionOutcome:
    trajectory: list[float] = field(default_factory=list)
    fixed_point: float = DIVERGED
    converged: bool = False
    iterations: int = 0

    @property
    def diverged(self) -> bool:
        return math.isnan(self.fixed_point)


def iterate_to_fixed_point(
    step: Callable[[float], float],
    init: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    keep_trajectory: bool = True,
) -> RecursionOutcome:
    """Iterate ``step`` from ``init`` until successive values differ by < tol.

    When ``keep_trajectory`` is False only the endpoints are stored, which
    keeps long critical-slowing runs cheap.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    cur = float(init)
    traj = [cur]
    for it in range(1, max_iter + 1):
        nxt = float(step(cur))
        if not (-DIVERGENCE_SLACK <= nxt <= 1.0 + DIVERGENCE_SLACK):
            traj.append(nxt)
            return RecursionOutcome(traj, DIVERGED, False, it)
        if keep_trajectory:
            traj.append(nxt)
        if abs(nxt - cur) < tol:
            if not keep_trajectory:
                traj.append(nxt)
            return RecursionOutcome(traj, nxt, True, it)
        cur = nxt
    if not keep_trajectory:
        traj.append(cur)
    return RecursionOutcome(traj, cur, False, max_iter)


def bisect_predicate(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Smallest t in [lo, hi] with pred(t) true, assuming pred is monotone
    (false below, true above)."""
    if pred(lo):
        return lo
    if not pred(hi):
        raise ValueError("predicate false on the whole bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- two-ternary-tree hierarchy, pure links --------------------------------


def hierarchical_pure_step(E: float, mu: float) -> float:
    """Swap two side links into the middle one, then concentrate three copies.

    ``mu`` is the fourth power of the side-link concurrence.
    """
    root = math.sqrt(max(0.0, 1.0 - mu * E * (2.0 - E)))
    return max(0.0, min(1.0, 2.0 - 0.25 * (1.0 + root) ** 3))


def _pure_has_attractor(mu: float, tol: float, max_iter: int) -> bool:
    out = iterate_to_fixed_point(
        lambda e: hierarchical_pure_step(e, mu), PROBE_START, tol, max_iter, keep_trajectory=False
    )
    return out.fixed_point > NONTRIVIAL_FLOOR


def _pure_reaches_one(mu: float, tol: float, max_iter: int) -> bool:
    out = iterate_to_fixed_point(
        lambda e: hierarchical_pure_step(e, mu), PROBE_START, tol, max_iter, keep_trajectory=False
    )
    return out.fixed_point >= 1.0 - 1e-9


def hierarchical_pure_criticals(
    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[float, float]:
    """(mu_c, mu_star): birth of a nontrivial attractor, and the onset of
    reaching a perfect link in finitely many steps."""
    # near mu_c the slope at zero is 3 mu, so convergence is geometric with
    # rate |3 mu - 1|; a fine iteration tolerance keeps the probe honest
    probe_tol = min(tol, 1e-12)
    mu_c = bisect_predicate(lambda m: _pure_has_attractor(m, probe_tol, max_iter), 0.0, 1.0, tol)
    mu_star = bisect_predicate(lambda m: _pure_reaches_one(m, probe_tol, max_iter), 0.0, 1.0, tol)
    return mu_c, mu_star


def entanglement_from_mu(mu: float) -> float:
    """E of a pure link whose concurrence satisfies C^4 = mu."""
    c2 = math.sqrt(mu)
    return c2 / (1.0 + math.sqrt(1.0 - c2))


# -- two-ternary-tree hierarchy, Werner links ------------------------------


def hierarchical_mixed_step(x: float, y: float) -> float:
    """Average Werner parameter after two swaps and one purification that
    falls back to the spare copy on failure."""
    z = x * x * y
    return z / 6.0 * (5.0 + 4.0 * z - 3.0 * z * z)


def mixed_critical_x() -> float:
    return math.sqrt(18.0 / 19.0)


def hierarchical_mixed_fixed_points(x: float):
    """(y_c, y_star) for x above the critical value, else None."""
    disc = 19.0 * x * x - 18.0
    # rounding at x = sqrt(18/19) itself must still give the double root
    if disc < -1e-12:
        return None
    r = math.sqrt(max(0.0, disc))
    den = 3.0 * x**3
    return (2.0 * x - r) / den, (2.0 * x + r) / den


def hierarchical_mixed_critical(
    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> float:
    """x_c located by bisection on the survival of y from y = 1."""

    def survives(x):
        out = iterate_to_fixed_point(
            lambda y: hierarchical_mixed_step(x, y), 1.0, min(tol, 1e-12), max_iter, keep_trajectory=False
        )
        return out.fixed_point > NONTRIVIAL_FLOOR

    return bisect_predicate(survives, 0.5, 1.0, tol)


# -- centipede along a lattice spine ---------------------------------------


def centipede_mu(phi0: float) -> float:
    return (4.0 * phi0 * (1.0 - phi0)) ** 2


def centipede_step(E: float, phi0: float) -> float:
    """Spine update: swap a leg into the spine link, then concentrate it
    with one fresh lattice link.

    The bracket is ``1 + sqrt(...)``: the concentrated link keeps the larger
    Schmidt weight of the swapped spine times ``phi0``.  A minus sign there
    would send every E to 1.  E = 0 maps to the bare link value 2 (1 - phi0).
    """
    mu = centipede_mu(phi0)
    root = math.sqrt(max(0.0, 1.0 - mu * E * (2.0 - E)))
    return max(0.0, min(1.0, 2.0 - phi0 * (1.0 + root)))


def centipede_reaches_one(link_entanglement: float, tol: float = DEFAULT_TOL,
                          max_iter: int = DEFAULT_MAX_ITER) -> bool:
    phi0 = 1.0 - link_entanglement / 2.0
    out = iterate_to_fixed_point(
        lambda e: centipede_step(e, phi0), link_entanglement, tol, max_iter, keep_trajectory=False
    )
    return out.fixed_point >= 1.0 - 1e-9


def centipede_critical(tol: float = DEFAULT_TOL) -> float:
    """Smallest link entanglement for which the spine becomes perfect."""
    return bisect_predicate(lambda e: centipede_reaches_one(e, min(tol, 1e-12)), 1e-6, 1.0, tol)
