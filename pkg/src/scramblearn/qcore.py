"""Dense statevector and operator primitives for qubit registers.

Conventions, fixed once for the whole package:

* Bit ordering: qubit 0 is the MOST significant bit of a basis index, so
  ``|q0 q1 ... q_{n-1}>`` lives at index ``sum_k q_k * 2**(n-1-k)``.  An
  operator acting on the leading qubits of a register is therefore the left
  factor of a Kronecker product, and axis ``k`` of an amplitude array
  reshaped to ``(2,)*n`` addresses qubit ``k`` directly.  All index
  arithmetic goes through :func:`bit_value` / the reshape idiom so the
  convention lives in one place.
* Rotations: ``rotation_gate(axis, theta) == exp(-1j*theta*P/2)`` for the
  Pauli ``P`` of the axis, i.e. the generator is the half Pauli with
  spectrum ``{+1/2, -1/2}``.
* Tolerances are absolute, in max norm, defaulting to ``ATOL = 1e-10``.

All container types are immutable after construction (backing arrays are
marked read-only) and every operation is a pure function, so the whole
module is safe to call from concurrent Monte Carlo loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-10

__all__ = [
    "ATOL",
    "StateVector",
    "Operator",
    "bit_value",
    "identity",
    "pauli",
    "pauli_on",
    "hadamard_gate",
    "basis_state",
    "plus_state",
    "tensor_product",
    "apply_unitary",
    "apply_local_gate",
    "rotation_gate",
    "partial_trace",
    "reduced_density_matrix",
    "expectation",
    "max_entangled_state",
    "choi_vector",
    "embed_operator",
]


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


def _frozen_complex(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=complex, copy=True, order="C")
    if arr.ndim != ndim:
        raise ValueError(f"{what}: expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def bit_value(index: int, qubit: int, n_qubits: int) -> int:
    """Bit of ``qubit`` in basis ``index`` (qubit 0 = most significant)."""
    return (index >> (n_qubits - 1 - qubit)) & 1


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of ``n_qubits`` qubits (length ``2**n``)."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen_complex(self.amplitudes, 1, "StateVector")
        if amps.size < 2 or not _is_power_of_two(amps.size):
            raise ValueError(f"StateVector: length {amps.size} is not 2**n with n >= 1")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"StateVector: norm {norm!r} deviates from 1 by more than {ATOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class Operator:
    """Dense square complex matrix on a qubit register.

    ``kind_hint`` is advisory but enforced: constructing with a "unitary"
    or "hermitian" hint validates the corresponding property to ``ATOL``
    in max norm.
    """

    entries: np.ndarray
    kind_hint: str = "general"

    def __post_init__(self) -> None:
        mat = _frozen_complex(self.entries, 2, "Operator")
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"Operator: matrix is not square: {mat.shape}")
        if not _is_power_of_two(mat.shape[0]) or mat.shape[0] < 2:
            raise ValueError(f"Operator: dim {mat.shape[0]} is not 2**n with n >= 1")
        if self.kind_hint not in ("general", "unitary", "hermitian"):
            raise ValueError(f"Operator: unknown kind_hint {self.kind_hint!r}")
        if self.kind_hint == "unitary":
            defect = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
            if defect > ATOL:
                raise ValueError(f"Operator: unitary hint violated, |U+U - I| = {defect:.3e}")
        elif self.kind_hint == "hermitian":
            defect = np.max(np.abs(mat - mat.conj().T))
            if defect > ATOL:
                raise ValueError(f"Operator: hermitian hint violated, |H - H+| = {defect:.3e}")
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T, self.kind_hint)

    def __matmul__(self, other: "Operator") -> "Operator":
        hint = "unitary" if (self.kind_hint == other.kind_hint == "unitary") else "general"
        return Operator(self.entries @ other.entries, hint)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


_PAULIS = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim, dtype=complex), "unitary")


def pauli(axis: str) -> Operator:
    """Single-qubit Pauli X, Y or Z."""
    if axis not in _PAULIS:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return Operator(_PAULIS[axis], "hermitian")


def pauli_on(axis: str, qubit: int, n_qubits: int) -> Operator:
    """Pauli ``axis`` acting on one site of an ``n_qubits`` register."""
    return Operator(embed_operator(pauli(axis), [qubit], n_qubits).entries, "hermitian")


def hadamard_gate() -> Operator:
    return Operator(np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2), "unitary")


def basis_state(n_qubits: int, index: int = 0) -> StateVector:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def plus_state(n_qubits: int) -> StateVector:
    """Uniform superposition ``|+>^n``."""
    dim = 2**n_qubits
    return StateVector(np.full(dim, 1.0 / np.sqrt(dim), dtype=complex))


def tensor_product(a: Operator, b: Operator) -> Operator:
    """Kronecker product; ``a`` acts on the leading qubits."""
    if a.kind_hint == b.kind_hint and a.kind_hint in ("unitary", "hermitian"):
        hint = a.kind_hint
    else:
        hint = "general"
    return Operator(np.kron(a.entries, b.entries), hint)


def apply_unitary(state: StateVector, u: Operator) -> StateVector:
    if u.dim != state.dim:
        raise ValueError(f"apply_unitary: operator dim {u.dim} != state dim {state.dim}")
    return StateVector(u.entries @ state.amplitudes)


def apply_local_gate(state: StateVector, gate: Operator, qubit: int) -> StateVector:
    """Apply a 2x2 gate to one qubit by strided amplitude pairing.

    Equivalent to ``apply_unitary`` with ``I (x) ... (x) gate (x) ... (x) I``
    but without forming the 2^n x 2^n matrix.
    """
    n = state.n_qubits
    if gate.entries.shape != (2, 2):
        raise ValueError("apply_local_gate: gate must be 2x2")
    if not 0 <= qubit < n:
        raise ValueError(f"apply_local_gate: qubit {qubit} out of range for {n} qubits")
    psi = state.amplitudes.reshape((2,) * n)
    psi = np.moveaxis(psi, qubit, 0).reshape(2, -1)
    out = gate.entries @ psi
    out = np.moveaxis(out.reshape((2,) * n), 0, qubit).reshape(-1)
    return StateVector(out)


def rotation_gate(axis: str, angle: float) -> Operator:
    """``exp(-1j*angle*P/2)`` for Pauli ``P`` of ``axis`` (half-angle form)."""
    c = np.cos(angle / 2.0)
    s = np.sin(angle / 2.0)
    if axis == "x":
        mat = np.array([[c, -1j * s], [-1j * s, c]])
    elif axis == "y":
        mat = np.array([[c, -s], [s, c]], dtype=complex)
    elif axis == "z":
        mat = np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]])
    else:
        raise ValueError(f"unknown rotation axis {axis!r}")
    return Operator(mat, "unitary")


def _validated_keep(keep: Iterable[int], n: int, op_name: str) -> list[int]:
    qubits = sorted(set(int(q) for q in keep))
    if not qubits:
        raise ValueError(f"{op_name}: keep set is empty")
    if qubits[0] < 0 or qubits[-1] >= n:
        raise ValueError(f"{op_name}: keep set {qubits} out of range for {n} qubits")
    return qubits


def partial_trace(rho: Operator, keep: Iterable[int]) -> Operator:
    """Trace out every qubit not in ``keep``; kept qubits stay in ascending order."""
    n = rho.n_qubits
    kept = _validated_keep(keep, n, "partial_trace")
    rest = [q for q in range(n) if q not in kept]
    perm = kept + rest
    t = rho.entries.reshape((2,) * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    k = len(kept)
    t = t.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
    return Operator(np.einsum("ajbj->ab", t), "general")


def reduced_density_matrix(state: StateVector, keep: Iterable[int]) -> Operator:
    """Density matrix of ``keep`` for a pure state, without forming |psi><psi|."""
    n = state.n_qubits
    kept = _validated_keep(keep, n, "reduced_density_matrix")
    rest = [q for q in range(n) if q not in kept]
    psi = state.amplitudes.reshape((2,) * n)
    block = psi.transpose(kept + rest).reshape(2 ** len(kept), -1)
    return Operator(block @ block.conj().T, "hermitian")


def expectation(h: Operator, state: StateVector) -> float:
    """``<psi|H|psi>`` for Hermitian ``H``; asserts the imaginary residue is tiny."""
    if h.dim != state.dim:
        raise ValueError(f"expectation: operator dim {h.dim} != state dim {state.dim}")
    if h.kind_hint != "hermitian":
        defect = np.max(np.abs(h.entries - h.entries.conj().T))
        if defect > ATOL:
            raise ValueError(f"expectation: operator is not hermitian, |H - H+| = {defect:.3e}")
    value = np.vdot(state.amplitudes, h.entries @ state.amplitudes)
    if abs(value.imag) > ATOL:
        raise AssertionError(f"expectation: imaginary residue {value.imag:.3e} exceeds {ATOL}")
    return float(value.real)


def max_entangled_state(n_qubits: int) -> StateVector:
    """``(1/sqrt(2^n)) sum_i |i>_S |i>_R`` on 2n qubits, S the first n qubits."""
    if n_qubits < 1:
        raise ValueError("max_entangled_state: n_qubits must be >= 1")
    d = 2**n_qubits
    amps = np.zeros(d * d, dtype=complex)
    amps[(np.arange(d) << n_qubits) | np.arange(d)] = 1.0 / np.sqrt(d)
    return StateVector(amps)


def choi_vector(w: Operator) -> StateVector:
    """``(W (x) I)|Phi+>``; amplitude ``W[a, b]/sqrt(d)`` at basis index ``(a, b)``.

    With the most-significant-first bit ordering this is exactly the
    row-major flattening of ``W / sqrt(d)``.
    """
    d = w.dim
    return StateVector(w.entries.reshape(-1) / np.sqrt(d))


def embed_operator(op: Operator, qubits: Sequence[int], n_qubits: int) -> Operator:
    """Embed ``op`` acting on ``qubits`` (in the order given) into an n-qubit register."""
    sites = [int(q) for q in qubits]
    if len(set(sites)) != len(sites):
        raise ValueError(f"embed_operator: repeated qubits in {sites}")
    if any(q < 0 or q >= n_qubits for q in sites):
        raise ValueError(f"embed_operator: qubits {sites} out of range for {n_qubits} qubits")
    if op.dim != 2 ** len(sites):
        raise ValueError(f"embed_operator: operator dim {op.dim} != 2**{len(sites)}")
    rest = [q for q in range(n_qubits) if q not in sites]
    order = sites + rest
    full = np.kron(op.entries, np.eye(2 ** len(rest), dtype=complex))
    t = full.reshape((2,) * (2 * n_qubits))
    inv = np.argsort(order)
    perm = list(inv) + [n_qubits + i for i in inv]
    t = t.transpose(perm)
    hint = op.kind_hint if op.kind_hint in ("unitary", "hermitian") else "general"
    return Operator(t.reshape(2**n_qubits, 2**n_qubits), hint)
