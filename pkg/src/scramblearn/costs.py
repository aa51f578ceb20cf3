"""Cost functions for compiling a target unitary with a trainable one.

* ``generic_cost``: ``<psi| U+ V H V+ U |psi>`` for a fixed Hermitian H.
* ``hst_cost``: ``1 - |Tr[U V+]|^2 / d^2``, the global overlap test.
* ``lhst_cost`` / ``lhst_local_cost``: the per-qubit-pair Bell-projector
  variant, evaluated exactly on the Choi state of ``U V+``.
* ``gen_cost``: weighted training set on a system/ancilla/reference
  partition S (x) D (x) R, with the target conjugating the measurement.

All costs are exact expectation values computed from statevectors, never
sampled; every cost is invariant under a global phase of either argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import (
    ATOL,
    Operator,
    StateVector,
    embed_operator,
    max_entangled_state,
)

__all__ = [
    "GenericCostSpec",
    "GenTrainingTerm",
    "FactorizedGenTerm",
    "generic_cost",
    "hst_cost",
    "lhst_local_cost",
    "lhst_cost",
    "gen_cost",
]


@dataclass(frozen=True)
class GenericCostSpec:
    """Fixed data (H, |psi>) of the generic cost; H must be Hermitian."""

    h: Operator
    psi: StateVector

    def __post_init__(self) -> None:
        if self.h.dim != self.psi.dim:
            raise ValueError(f"GenericCostSpec: H dim {self.h.dim} != psi dim {self.psi.dim}")
        defect = np.max(np.abs(self.h.entries - self.h.entries.conj().T))
        if defect > ATOL:
            raise ValueError(f"GenericCostSpec: H is not hermitian, |H - H+| = {defect:.3e}")


@dataclass(frozen=True)
class GenTrainingTerm:
    """One weighted training pair: |psi> on S(x)D(x)R, H on S(x)R."""

    p: float
    psi: StateVector
    h: Operator

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ValueError(f"GenTrainingTerm: weight must be >= 0, got {self.p!r}")
        defect = np.max(np.abs(self.h.entries - self.h.entries.conj().T))
        if defect > ATOL:
            raise ValueError("GenTrainingTerm: H must be hermitian")


@dataclass(frozen=True)
class FactorizedGenTerm:
    """Fully factorized training term: weight, reference eigenvalue, H on S, |psi> on S(x)D."""

    p_tilde: float
    w: float
    h_s: Operator
    psi_sd: StateVector

    def __post_init__(self) -> None:
        if self.p_tilde < 0:
            raise ValueError("FactorizedGenTerm: p_tilde must be >= 0")
        defect = np.max(np.abs(self.h_s.entries - self.h_s.entries.conj().T))
        if defect > ATOL:
            raise ValueError("FactorizedGenTerm: h_s must be hermitian")


def generic_cost(u: Operator, v: Operator, spec: GenericCostSpec) -> float:
    """``<psi| U+ V H V+ U |psi>``."""
    if u.dim != v.dim or u.dim != spec.h.dim:
        raise ValueError(f"generic_cost: dims {u.dim}, {v.dim}, {spec.h.dim} do not match")
    chi = v.entries.conj().T @ (u.entries @ spec.psi.amplitudes)
    value = np.vdot(chi, spec.h.entries @ chi)
    if abs(value.imag) > ATOL:
        raise AssertionError(f"generic_cost: imaginary residue {value.imag:.3e}")
    return float(value.real)


def hst_cost(u: Operator, v: Operator) -> float:
    """``1 - |Tr[U V+]|^2 / d^2``; zero iff U = V up to a global phase."""
    if u.dim != v.dim:
        raise ValueError(f"hst_cost: dims {u.dim} != {v.dim}")
    overlap = np.abs(np.trace(u.entries @ v.entries.conj().T))
    value = 1.0 - (overlap / u.dim) ** 2
    return float(min(max(value, 0.0), 1.0))


_BELL = max_entangled_state(1).amplitudes  # (|00> + |11>)/sqrt(2)


def _choi_pair_fidelity(w: np.ndarray, j: int, n: int) -> float:
    """``<phi+| rho_(Sj,Rj) |phi+>`` for the Choi state of ``w``.

    The Choi amplitudes of ``w`` are ``w[a, b]/sqrt(d)`` on (S, R); reducing
    to the pair (qubit j of S, qubit j of R) and projecting on the Bell pair
    equals ``|Tr_j[w]|_F^2 / (2d)``, but is evaluated here via the explicit
    4x4 reduced matrix to keep one code path for all observables.
    """
    d = 2**n
    chi = (w / np.sqrt(d)).reshape((2,) * (2 * n))
    kept = [j, n + j]
    rest = [q for q in range(2 * n) if q not in kept]
    block = chi.transpose(kept + rest).reshape(4, -1)
    rho = block @ block.conj().T
    value = np.vdot(_BELL, rho @ _BELL)
    return float(value.real)


def lhst_local_cost(u: Operator, v: Operator, j: int) -> float:
    """``1 - <phi+|rho_(Sj,Rj)|phi+>`` on the Choi state of ``U V+``."""
    if u.dim != v.dim:
        raise ValueError(f"lhst_local_cost: dims {u.dim} != {v.dim}")
    n = u.n_qubits
    if not 0 <= j < n:
        raise ValueError(f"lhst_local_cost: qubit {j} out of range for {n} qubits")
    w = u.entries @ v.entries.conj().T
    value = 1.0 - _choi_pair_fidelity(w, j, n)
    return float(min(max(value, 0.0), 1.0))


def lhst_cost(u: Operator, v: Operator) -> float:
    """Mean of the n local pair costs; sandwiched between HST/n and HST."""
    if u.dim != v.dim:
        raise ValueError(f"lhst_cost: dims {u.dim} != {v.dim}")
    n = u.n_qubits
    w = u.entries @ v.entries.conj().T
    total = sum(1.0 - _choi_pair_fidelity(w, j, n) for j in range(n))
    return float(min(max(total / n, 0.0), 1.0))


def _partition(u_sd: Operator, v: Operator, psi: StateVector) -> tuple[int, int, int]:
    """Qubit counts (n_s, n_d, n_r) implied by the three dimensions."""
    n_s = v.n_qubits
    n_sd = u_sd.n_qubits
    n_tot = psi.n_qubits
    if n_sd < n_s or n_tot < n_sd:
        raise ValueError(
            f"gen_cost: inconsistent partition: |S|={n_s}, |SD|={n_sd}, |SDR|={n_tot}"
        )
    return n_s, n_sd - n_s, n_tot - n_sd


def gen_cost(u_sd: Operator, v: Operator, terms: Sequence[GenTrainingTerm]) -> float:
    """Weighted sum of ``<Psi| M+ (H_i on S,R) M |Psi>`` with ``M = ((V+ (x) I_D) U) (x) I_R``.

    The register order is fixed as S (first), then D, then R; each term's H
    acts on S (x) R and is embedded around the D block explicitly.  Weights
    must sum to 1.
    """
    if not terms:
        raise ValueError("gen_cost: empty term list")
    weight = sum(term.p for term in terms)
    if abs(weight - 1.0) > 1e-10:
        raise ValueError(f"gen_cost: weights sum to {weight!r}, expected 1")
    total = 0.0
    for term in terms:
        n_s, n_d, n_r = _partition(u_sd, v, term.psi)
        if term.h.n_qubits != n_s + n_r:
            raise ValueError(
                f"gen_cost: H acts on {term.h.n_qubits} qubits, expected |S|+|R|={n_s + n_r}"
            )
        m = np.kron(v.entries.conj().T, np.eye(2**n_d)) @ u_sd.entries
        if n_r > 0:
            m = np.kron(m, np.eye(2**n_r))
        h_full = embed_operator(
            term.h, list(range(n_s)) + list(range(n_s + n_d, n_s + n_d + n_r)), term.psi.n_qubits
        )
        phi = m @ term.psi.amplitudes
        value = np.vdot(phi, h_full.entries @ phi)
        if abs(value.imag) > ATOL:
            raise AssertionError(f"gen_cost: imaginary residue {value.imag:.3e}")
        total += term.p * value.real
    return float(total)
