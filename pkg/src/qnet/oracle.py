"""Explicit state-vector and density-matrix calculations.

These routines materialise the 4-, 16- and 16x16-dimensional objects that the
closed forms in :mod:`qnet.qstate` summarise.  They are deliberately written
from the circuit description (projectors, CNOTs, partial traces) so they can
serve as an independent check.

Qubit 0 is the most significant bit of a basis index.
"""

from __future__ import annotations

import math

import numpy as np

DM_TOL = 1e-10

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])
HAD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
Y = np.array([[0.0, -1j], [1j, 0.0]])

_S = 1.0 / math.sqrt(2.0)
BELL = {
    "Phi+": np.array([_S, 0, 0, _S]),
    "Phi-": np.array([_S, 0, 0, -_S]),
    "Psi+": np.array([0, _S, _S, 0]),
    "Psi-": np.array([0, _S, -_S, 0]),
}
# Pauli on the second qubit that maps each Bell state back to Phi+
BELL_CORRECTION = {"Phi+": I2, "Phi-": Z, "Psi+": X, "Psi-": X @ Z}


def n_qubits(rho) -> int:
    d = rho.shape[0]
    n = int(round(math.log2(d)))
    if 2**n != d or rho.shape != (d, d):
        raise ValueError(f"not a qubit density matrix: shape {rho.shape}")
    return n


def as_density(state) -> np.ndarray:
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        arr = np.outer(arr, arr.conj())
    n_qubits(arr)
    return arr


def check_density(rho, tol: float = DM_TOL) -> None:
    """Raise ValueError unless rho is Hermitian, PSD and unit trace."""
    rho = np.asarray(rho)
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("density matrix not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"trace {np.trace(rho)!r} != 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -tol:
        raise ValueError("density matrix not positive semidefinite")


def kron(*ops):
    out = np.array([[1.0]])
    for op in ops:
        out = np.kron(out, op)
    return out


def _as_tensor(rho, n):
    return rho.reshape((2,) * (2 * n))


def apply_local(rho, op, qubits):
    """Return op rho op^dagger with ``op`` acting on ``qubits`` (in that order)."""
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits(rho)
    k = len(qubits)
    op = np.asarray(op, dtype=complex).reshape((2,) * (2 * k))
    t = _as_tensor(rho, n)
    # contract op on the ket indices
    t = np.tensordot(op, t, axes=(list(range(k, 2 * k)), list(qubits)))
    t = np.moveaxis(t, list(range(k)), list(qubits))
    # and op^* on the bra indices
    bra_axes = [n + q for q in qubits]
    t = np.tensordot(op.conj(), t, axes=(list(range(k, 2 * k)), bra_axes))
    t = np.moveaxis(t, list(range(k)), bra_axes)
    return t.reshape(2**n, 2**n)


def partial_trace(rho, keep):
    """Reduce rho to the qubits in ``keep`` (kept in increasing order)."""
    rho = np.asarray(rho)
    n = n_qubits(rho)
    keep = sorted(keep)
    trace_out = [q for q in range(n) if q not in keep]
    t = _as_tensor(rho, n)
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for q in trace_out:
        bra[q] = ket[q]
    out = "".join(ket[q] for q in keep) + "".join(bra[q] for q in keep)
    red = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    d = 2 ** len(keep)
    return red.reshape(d, d)


def replace_with_mixed(rho, keep):
    """id_S / 2^|S| (x) tr_S rho, with S the complement of ``keep``, laid
    out in the original qubit order."""
    n = n_qubits(rho)
    keep = sorted(keep)
    traced = [q for q in range(n) if q not in keep]
    red = partial_trace(rho, keep) if keep else np.array([[np.trace(rho)]])
    full = np.kron(red, np.eye(2 ** len(traced)) / 2 ** len(traced))
    # current order is keep + traced; permute back
    order = keep + traced
    t = full.reshape((2,) * (2 * n))
    inv = [order.index(q) for q in range(n)]
    t = np.transpose(t, inv + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


# -- standard states ---------------------------------------------------------


def pure_link_vector(phi1: float) -> np.ndarray:
    return np.array([math.sqrt(1.0 - phi1), 0.0, 0.0, math.sqrt(phi1)])


def werner_matrix(x: float) -> np.ndarray:
    phi = BELL["Phi+"]
    return x * np.outer(phi, phi) + (1.0 - x) * np.eye(4) / 4.0


def bell_diagonal(weights) -> np.ndarray:
    """Mixture of (Phi+, Psi+, Phi-, Psi-) with the given weights."""
    out = np.zeros((4, 4))
    for w, key in zip(weights, ("Phi+", "Psi+", "Phi-", "Psi-")):
        out += w * np.outer(BELL[key], BELL[key])
    return out


def bitphase_matrix(eps_b: float, eps_p: float) -> np.ndarray:
    """Phi+ with an independent X (eps_b) and Z (eps_p) on the second qubit."""
    phi = np.outer(BELL["Phi+"], BELL["Phi+"])
    out = np.zeros((4, 4))
    for px, ux in ((1 - eps_b, I2), (eps_b, X)):
        for pz, uz in ((1 - eps_p, I2), (eps_p, Z)):
            u = kron(I2, uz @ ux)
            out += px * pz * (u @ phi @ u.conj().T).real
    return out


def bell_fidelity(rho) -> float:
    phi = BELL["Phi+"]
    return float(np.real(phi @ np.asarray(rho) @ phi))


def wootters_concurrence(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    yy = np.kron(Y, Y)
    tilde = yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(rho @ tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def spin_flip_concurrence(psi) -> float:
    """Concurrence |<psi|Y x Y|psi*>| of a two-qubit pure vector."""
    v = np.asarray(psi, dtype=complex)
    return float(abs(v @ np.kron(Y, Y) @ v))


def schmidt_weights(psi) -> tuple[float, float]:
    """Normalised Schmidt probabilities (larger, smaller) of a 2-qubit vector."""
    m = np.asarray(psi, dtype=complex).reshape(2, 2)
    s = np.linalg.svd(m, compute_uv=False) ** 2
    s = s / s.sum()
    return float(s[0]), float(s[1])


def procrustean_success(phi1: float) -> float:
    """Success probability of the single-copy local filter on a pure link."""
    psi = pure_link_vector(phi1).astype(complex)
    phi0 = 1.0 - phi1
    if phi0 == 0:
        return 0.0
    m1 = np.diag([math.sqrt(phi1 / phi0), 1.0])
    out = np.kron(m1, I2) @ psi
    return float(np.vdot(out, out).real)


# -- swapping oracles ----------------------------------------------------------


def swap_pure_state_vector(phi1_a: float, phi1_b: float, basis: str = "bell"):
    """Measure qubits (b, b') of |a><b| x |b'><c| in the Bell basis (or the
    basis rotated by a Hadamard on the first measured qubit) and return
    per-outcome (label, prob, schmidt)."""
    psi = np.kron(pure_link_vector(phi1_a), pure_link_vector(phi1_b)).astype(complex)
    t = psi.reshape(2, 2, 2, 2)  # a, b, b', c
    out = []
    for label, vec in BELL.items():
        v = vec.astype(complex)
        if basis == "bx":
            v = np.kron(HAD, I2) @ v
        proj = np.einsum("jk,ijkl->il", v.conj().reshape(2, 2), t)
        p = float(np.vdot(proj, proj).real)
        w = schmidt_weights(proj.ravel()) if p > 1e-300 else (1.0, 0.0)
        out.append((label, p, w))
    return out


def swap_werner_density(x_a: float, x_b: float):
    """Bell measurement on the middle pair of Werner(x_a) x Werner(x_b).

    Returns per-outcome (label, prob, corrected 4x4 state on (a, c)).
    """
    rho = np.kron(werner_matrix(x_a), werner_matrix(x_b))
    out = []
    for label, vec in BELL.items():
        proj = kron(I2, np.outer(vec, vec.conj()), I2)
        post = proj @ rho @ proj
        p = float(np.trace(post).real)
        red = partial_trace(post / p, [0, 3])
        red = apply_local(red, BELL_CORRECTION[label], (1,))
        out.append((label, p, red))
    return out


def bbpssw_density(x_a: float, x_b: float):
    """Bilateral CNOT (pair a controls pair b), Z readout of pair b, keep
    coincident outcomes.  Returns (success probability, 4x4 output state)."""
    rho = np.kron(werner_matrix(x_a), werner_matrix(x_b))  # a1 b1 a2 b2
    cnot = np.zeros((4, 4))
    for c in range(2):
        for t in range(2):
            cnot[2 * c + (t ^ c), 2 * c + t] = 1.0
    rho = apply_local(rho, cnot, (0, 2))
    rho = apply_local(rho, cnot, (1, 3))
    kept = np.zeros((4, 4), dtype=complex)
    p = 0.0
    for bit in (0, 1):
        proj = np.diag([1.0 - bit, float(bit)])
        post = apply_local(rho, kron(proj, proj), (2, 3))
        p += float(np.trace(post).real)
        kept += partial_trace(post, [0, 1])
    return p, kept / p


def werner_x_of(rho) -> float:
    """Werner parameter with the same Phi+ fidelity (no clamping)."""
    return (4.0 * bell_fidelity(rho) - 1.0) / 3.0
