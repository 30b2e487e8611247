"""Algebra of single entangled links.

Pure links are stored by their smaller Schmidt coefficient only, Werner links
by their mixing parameter.  Everything here is a closed-form map on those
parameters; the explicit matrices live in :mod:`qnet.oracle` and are used to
cross-check these formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import oracle

ALGEBRA_TOL = 1e-12


def _check_unit(name: str, value: float, hi: float = 1.0) -> float:
    value = float(value)
    if not (0.0 <= value <= hi) or math.isnan(value):
        raise ValueError(f"{name}={value!r} outside [0, {hi}]")
    return value


@dataclass(frozen=True)
class PureLink:
    """Two-qubit pure state sqrt(phi0)|00> + sqrt(phi1)|11>, phi1 <= 1/2."""

    phi1: float

    def __post_init__(self):
        object.__setattr__(self, "phi1", _check_unit("phi1", self.phi1, 0.5))

    @property
    def phi0(self) -> float:
        return 1.0 - self.phi1

    @property
    def entanglement(self) -> float:
        return entanglement_pure(self)

    @property
    def concurrence(self) -> float:
        return concurrence_pure(self)

    @classmethod
    def from_entanglement(cls, e: float) -> "PureLink":
        return cls(_check_unit("E", e) / 2.0)

    @classmethod
    def from_concurrence(cls, c: float) -> "PureLink":
        c = _check_unit("C", c)
        return cls(_phi1_from_concurrence(c))

    @classmethod
    def bell(cls) -> "PureLink":
        return cls(0.5)


@dataclass(frozen=True)
class WernerLink:
    """Werner state x |Phi+><Phi+| + (1 - x) id/4 with x in [0, 1]."""

    x: float

    def __post_init__(self):
        object.__setattr__(self, "x", _check_unit("x", self.x))

    @property
    def fidelity(self) -> float:
        return (3.0 * self.x + 1.0) / 4.0

    @property
    def concurrence(self) -> float:
        return concurrence_werner(self)

    @property
    def entangled(self) -> bool:
        return self.x > 1.0 / 3.0

    @classmethod
    def from_fidelity(cls, f: float) -> "WernerLink":
        return cls(min(1.0, max(0.0, (4.0 * f - 1.0) / 3.0)))


@dataclass(frozen=True)
class BitPhaseLink:
    """Phi+ whose second qubit suffered a bit flip (prob eps_b) and a phase
    flip (prob eps_p), independently."""

    eps_b: float
    eps_p: float

    def __post_init__(self):
        object.__setattr__(self, "eps_b", _check_unit("eps_b", self.eps_b, 0.5))
        object.__setattr__(self, "eps_p", _check_unit("eps_p", self.eps_p, 0.5))

    @property
    def bell_weights(self) -> tuple[float, float, float, float]:
        """Weights on (Phi+, Psi+, Phi-, Psi-): none, bit, phase, both."""
        b, p = self.eps_b, self.eps_p
        return ((1 - b) * (1 - p), b * (1 - p), p * (1 - b), b * p)

    @property
    def fidelity(self) -> float:
        return (1.0 - self.eps_b) * (1.0 - self.eps_p)


class SchmidtVector(tuple):
    """Schmidt probabilities sorted nonincreasing, summing to one."""

    def __new__(cls, coefficients: Sequence[float]):
        vals = sorted((float(c) for c in coefficients), reverse=True)
        if not vals:
            raise ValueError("empty Schmidt vector")
        if vals[-1] < 0.0:
            raise ValueError("negative Schmidt coefficient")
        if abs(sum(vals) - 1.0) > ALGEBRA_TOL * max(1, len(vals)):
            raise ValueError(f"Schmidt coefficients sum to {sum(vals)!r}, not 1")
        return super().__new__(cls, vals)

    @classmethod
    def of_links(cls, links: Sequence[PureLink]) -> "SchmidtVector":
        """Joint Schmidt vector of several pure links held in parallel."""
        vec = np.array([1.0])
        for link in links:
            vec = np.outer(vec, [link.phi0, link.phi1]).ravel()
        return cls(vec / vec.sum())

    def padded(self, d: int) -> "SchmidtVector":
        if d < len(self):
            raise ValueError("cannot pad to a smaller dimension")
        return SchmidtVector(list(self) + [0.0] * (d - len(self)))


@dataclass(frozen=True)
class NoiseModel:
    """Gate depolarisation ``gate_eps``, readout flip ``meas_eps`` and
    two-qubit gate reliability ``p2``."""

    gate_eps: float = 0.0
    meas_eps: float = 0.0
    p2: float = 1.0

    def __post_init__(self):
        for name in ("gate_eps", "meas_eps", "p2"):
            object.__setattr__(self, name, _check_unit(name, getattr(self, name)))

    @property
    def delta(self) -> float:
        eta = self.meas_eps
        return 2.0 * eta * (1.0 - eta)

    @property
    def alpha(self) -> float:
        if self.p2 == 0.0:
            return math.inf
        return 1.0 / self.p2**2 - 1.0


class SwapOutcome(NamedTuple):
    label: str
    probability: float
    link: PureLink


BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")


def _phi1_from_concurrence(c: float) -> float:
    # (1 - sqrt(1 - c^2)) / 2 written to avoid cancellation for small c
    c2 = min(1.0, c * c)
    return 0.5 * c2 / (1.0 + math.sqrt(1.0 - c2))


def _phi1_of(a: float, b: float) -> float:
    """Smaller normalised weight of the unnormalised pair (a, b)."""
    s = a + b
    return min(a, b) / s if s > 0 else 0.0


# -- entanglement measures -------------------------------------------------


def entanglement_pure(link: PureLink) -> float:
    """Optimal single-copy probability of reaching a Bell pair, 2*phi1."""
    return 2.0 * link.phi1


def concurrence_pure(link: PureLink) -> float:
    return 2.0 * math.sqrt(link.phi0 * link.phi1)


def concurrence_werner(link: WernerLink) -> float:
    return max(0.0, (3.0 * link.x - 1.0) / 2.0)


# -- swapping --------------------------------------------------------------


def swap_werner(a: WernerLink, b: WernerLink) -> WernerLink:
    """Bell-measurement swap; every outcome yields Werner(a.x * b.x)."""
    return WernerLink(a.x * b.x)


def swap_pure_bx(a: PureLink, b: PureLink) -> PureLink:
    """Swap in the rotated basis (X x id)B: all four outcomes are equally
    entangled with C = C(a) C(b)."""
    return PureLink(_phi1_from_concurrence(concurrence_pure(a) * concurrence_pure(b)))


def swap_pure_bell(a: PureLink, b: PureLink) -> list[SwapOutcome]:
    """Exact outcome distribution of a Bell-basis swap of two pure links.

    Phi+- outcomes have probability (a0 b0 + a1 b1)/2 and leave Schmidt
    weights (a0 b0, a1 b1); Psi+- outcomes have probability (a0 b1 + a1 b0)/2
    and leave (a0 b1, a1 b0).
    """
    a0, a1, b0, b1 = a.phi0, a.phi1, b.phi0, b.phi1
    same = a0 * b0 + a1 * b1
    cross = a0 * b1 + a1 * b0
    phi_link = PureLink(_phi1_of(a0 * b0, a1 * b1))
    psi_link = PureLink(_phi1_of(a0 * b1, a1 * b0))
    return [
        SwapOutcome("Phi+", same / 2.0, phi_link),
        SwapOutcome("Phi-", same / 2.0, phi_link),
        SwapOutcome("Psi+", cross / 2.0, psi_link),
        SwapOutcome("Psi-", cross / 2.0, psi_link),
    ]


def mean_entanglement(outcomes: Sequence[SwapOutcome]) -> float:
    """Outcome-weighted mean of E; equals 2 min(a.phi1, b.phi1) for a
    Bell-basis swap of pure links."""
    return sum(o.probability * o.link.entanglement for o in outcomes)


def sample_swap_pure_bell(a: PureLink, b: PureLink, rng) -> SwapOutcome:
    outcomes = swap_pure_bell(a, b)
    u = rng.random()
    acc = 0.0
    for o in outcomes:
        acc += o.probability
        if u < acc:
            return o
    return outcomes[-1]


# -- purification / concentration -----------------------------------------


def purify_werner(a: WernerLink, b: WernerLink) -> tuple[WernerLink, float]:
    """Two-copy recurrence purification.

    Returns the output link on success and the success probability.
    """
    x, y = a.x, b.x
    out = (x + y + 4.0 * x * y) / (3.0 + 3.0 * x * y)
    return WernerLink(min(1.0, out)), (1.0 + x * y) / 2.0


def purify_improves(x: float, y: float) -> bool:
    """Whether purifying Werner(x) with Werner(y), x >= y, beats x."""
    if x < y:
        x, y = y, x
    return x > 1.0 / 3.0 and y > 1.0 / 3.0 and y > 2.0 * x / (1.0 + 4.0 * x - 3.0 * x * x)


def concentrate_pure(links: Sequence[PureLink]) -> PureLink:
    """Deterministic concentration of parallel pure links into one link.

    The product state majorises (s0, 1 - s0, 0, ...) exactly when its
    largest Schmidt weight prod(phi0) is at most s0, so the best reachable
    target has s0 = max(1/2, prod(phi0)).
    """
    top = math.prod(link.phi0 for link in links)
    return PureLink(1.0 - max(0.5, top))


def purify_pure_pair(a: PureLink, b: PureLink) -> PureLink:
    return concentrate_pure((a, b))


def majorizes(alpha: Sequence[float], beta: Sequence[float]) -> bool:
    """True iff alpha is majorised by beta, i.e. alpha -> beta is possible
    deterministically by LOCC."""
    alpha, beta = SchmidtVector(alpha), SchmidtVector(beta)
    if len(alpha) != len(beta):
        raise ValueError(f"dimension mismatch: {len(alpha)} vs {len(beta)}")
    pa = np.cumsum(alpha)
    pb = np.cumsum(beta)
    return bool(np.all(pa <= pb + ALGEBRA_TOL))


def conversion_prob(alpha: Sequence[float], beta: Sequence[float]) -> float:
    """Optimal LOCC success probability for alpha -> beta (minimum over the
    ratio of tail sums)."""
    alpha, beta = SchmidtVector(alpha), SchmidtVector(beta)
    if len(alpha) != len(beta):
        raise ValueError(f"dimension mismatch: {len(alpha)} vs {len(beta)}")
    ta = np.cumsum(np.asarray(alpha)[::-1])[::-1]
    tb = np.cumsum(np.asarray(beta)[::-1])[::-1]
    best = 1.0
    for num, den in zip(ta, tb):
        if den > ALGEBRA_TOL and num < den - ALGEBRA_TOL:
            best = min(best, num / den)
    return float(min(1.0, max(0.0, best)))


def bell_conversion_prob(links: Sequence[PureLink]) -> float:
    """Probability of turning parallel copies into one Bell pair,
    min{1, 2(1 - prod phi0)}."""
    return min(1.0, 2.0 * (1.0 - math.prod(link.phi0 for link in links)))


# -- noise -----------------------------------------------------------------


def apply_noisy_gate(state, subset: Sequence[int], noise: NoiseModel, gate=None):
    """Apply ``gate`` (identity by default) on ``subset`` with depolarising
    weight ``noise.gate_eps``."""
    rho = oracle.as_density(state)
    n = oracle.n_qubits(rho)
    subset = tuple(int(q) for q in subset)
    if any(q < 0 or q >= n for q in subset) or len(set(subset)) != len(subset):
        raise ValueError(f"bad qubit subset {subset} for {n} qubits")
    ideal = rho if gate is None else oracle.apply_local(rho, gate, subset)
    eps = noise.gate_eps
    if eps == 0.0:
        return ideal
    keep = [q for q in range(n) if q not in subset]
    mixed = oracle.replace_with_mixed(rho, keep)
    return (1.0 - eps) * ideal + eps * mixed


def measurement_branches(state, qubit: int, noise: NoiseModel):
    """Both branches of a Z readout with flip probability ``noise.meas_eps``.

    Returns ``[(outcome, post_state, probability), ...]``.
    """
    rho = oracle.as_density(state)
    eta = noise.meas_eps
    s, t = math.sqrt(1.0 - eta), math.sqrt(eta)
    ops = (np.diag([s, t]), np.diag([t, s]))
    out = []
    for k, m in enumerate(ops):
        post = oracle.apply_local(rho, m, (qubit,))
        p = float(np.real(np.trace(post)))
        out.append((k, post / p if p > 0 else post, p))
    return out


def noisy_measure(state, qubit: int, noise: NoiseModel, rng):
    """Sample one readout branch; returns ``(outcome, post_state, probability)``."""
    branches = measurement_branches(state, qubit, noise)
    return branches[0] if rng.random() < branches[0][2] else branches[1]


def depolarize_to_werner(state) -> tuple[WernerLink, bool]:
    """Twirl a two-qubit state into the Werner family at equal Phi+ fidelity.

    The flag is True when the fidelity is below 1/4; such states are mapped
    to x = 0.
    """
    rho = oracle.as_density(state)
    if rho.shape != (4, 4):
        raise ValueError("depolarize_to_werner expects a two-qubit state")
    f = oracle.bell_fidelity(rho)
    return WernerLink.from_fidelity(f), f < 0.25 - 1e-12


def sample_bitphase_errors(link: BitPhaseLink, rng, size=None):
    """Independent bit-flip and phase-flip draws for one (or ``size``) links."""
    if size is None:
        return bool(rng.random() < link.eps_b), bool(rng.random() < link.eps_p)
    return rng.random(size) < link.eps_b, rng.random(size) < link.eps_p
