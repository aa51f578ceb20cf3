"""Layered ansatz circuits, exact gradients, and closed-form gradient variances.

An ansatz is an ordered sequence of layers; layer 1 is applied to the state
first (it is the rightmost factor of the matrix product).  Parametrized
layers implement ``exp(-1j*theta*G)``.  Splitting the circuit at parameter
``k`` gives ``U = U_L U_R`` with ``U_R`` containing layers 1..k inclusive;
the effective derivative generator is ``J_k = -1j*U*dU+/dtheta_k =
U_L G_k U_L+``, whose quantum variance in ``U|psi>`` equals the variance of
``G_k`` in ``U_R|psi>``.  That variance, times a trace prefactor of the
measurement, is the closed-form gradient variance over 2-design targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .costs import FactorizedGenTerm
from .ensembles import ScramblerSpec, entangler_phases
from .qcore import ATOL, Operator, StateVector, embed_operator, pauli, rotation_gate

__all__ = [
    "RotationLayer",
    "GeneratorLayer",
    "FixedLayer",
    "PhaseLayer",
    "LayeredAnsatz",
    "GradientEstimate",
    "ansatz_unitary",
    "scrambler_ansatz",
    "scrambler_circuit_ansatz",
    "shift_rule_gradient",
    "finite_difference_gradient",
    "quantum_variance_of_generator",
    "variance_prefactor",
    "thm1_variance",
    "corollary_bound",
    "thm3_variance",
    "thm3_variance_bound",
]


@dataclass(frozen=True)
class RotationLayer:
    """``exp(-1j*theta*P_site/2)``: parametrized single-qubit rotation."""

    site: int
    axis: str
    theta: float


@dataclass(frozen=True)
class GeneratorLayer:
    """``exp(-1j*theta*G)`` for an arbitrary dense Hermitian generator."""

    generator: Operator
    theta: float


@dataclass(frozen=True)
class FixedLayer:
    """Fixed (non-parametrized) dense unitary."""

    unitary: Operator


@dataclass(frozen=True)
class PhaseLayer:
    """Fixed diagonal unitary given by its phase vector."""

    phases: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.phases, dtype=complex, copy=True)
        if np.max(np.abs(np.abs(arr) - 1.0)) > ATOL:
            raise ValueError("PhaseLayer: entries must have unit modulus")
        arr.setflags(write=False)
        object.__setattr__(self, "phases", arr)


Layer = Union[RotationLayer, GeneratorLayer, FixedLayer, PhaseLayer]


def _is_param(layer: Layer) -> bool:
    return isinstance(layer, (RotationLayer, GeneratorLayer))


@dataclass(frozen=True)
class LayeredAnsatz:
    """Ordered gate layers on ``n_qubits``; layer 1 acts on the state first."""

    n_qubits: int
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        dim = 2**self.n_qubits
        object.__setattr__(self, "layers", tuple(self.layers))
        for layer in self.layers:
            if isinstance(layer, RotationLayer):
                if not 0 <= layer.site < self.n_qubits:
                    raise ValueError(f"LayeredAnsatz: rotation site {layer.site} out of range")
            elif isinstance(layer, GeneratorLayer):
                if layer.generator.dim != dim:
                    raise ValueError("LayeredAnsatz: generator dim mismatch")
            elif isinstance(layer, FixedLayer):
                if layer.unitary.dim != dim:
                    raise ValueError("LayeredAnsatz: fixed layer dim mismatch")
            elif isinstance(layer, PhaseLayer):
                if layer.phases.size != dim:
                    raise ValueError("LayeredAnsatz: phase layer length mismatch")
            else:
                raise TypeError(f"LayeredAnsatz: unknown layer {layer!r}")

    @property
    def param_positions(self) -> tuple[int, ...]:
        return tuple(i for i, layer in enumerate(self.layers) if _is_param(layer))

    @property
    def n_params(self) -> int:
        return len(self.param_positions)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([self.layers[i].theta for i in self.param_positions])

    def with_theta(self, k: int, theta: float) -> "LayeredAnsatz":
        pos = self._position(k)
        layer = self.layers[pos]
        if isinstance(layer, RotationLayer):
            new = RotationLayer(layer.site, layer.axis, theta)
        else:
            new = GeneratorLayer(layer.generator, theta)
        layers = self.layers[:pos] + (new,) + self.layers[pos + 1 :]
        return LayeredAnsatz(self.n_qubits, layers)

    def _position(self, k: int) -> int:
        positions = self.param_positions
        if not 0 <= k < len(positions):
            raise ValueError(f"parameter index {k} out of range (have {len(positions)})")
        return positions[k]


@dataclass(frozen=True)
class GradientEstimate:
    value: float
    method: str  # "shift_rule" | "finite_difference"
    step: float | None = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError("GradientEstimate: value must be finite")


def _apply_layer(block: np.ndarray, layer: Layer, n: int, theta: float | None = None) -> np.ndarray:
    """Left-multiply the layer's unitary onto a (2^n, m) block of columns.

    Single-qubit and diagonal layers use strided updates instead of a dense
    d x d product.
    """
    if isinstance(layer, RotationLayer):
        angle = layer.theta if theta is None else theta
        gate = rotation_gate(layer.axis, angle).entries
        cols = block.shape[1]
        view = block.reshape((2,) * n + (cols,))
        view = np.moveaxis(view, layer.site, 0).reshape(2, -1)
        out = gate @ view
        out = np.moveaxis(out.reshape((2,) * n + (cols,)), 0, layer.site)
        return out.reshape(2**n, cols)
    if isinstance(layer, GeneratorLayer):
        angle = layer.theta if theta is None else theta
        evals, evecs = np.linalg.eigh(layer.generator.entries)
        gate = (evecs * np.exp(-1j * angle * evals)) @ evecs.conj().T
        return gate @ block
    if isinstance(layer, FixedLayer):
        return layer.unitary.entries @ block
    if isinstance(layer, PhaseLayer):
        return layer.phases[:, None] * block
    raise TypeError(f"unknown layer {layer!r}")


def _product(a: LayeredAnsatz, start: int, stop: int) -> np.ndarray:
    """Dense matrix of layers ``start..stop-1`` (in application order)."""
    block = np.eye(2**a.n_qubits, dtype=complex)
    for layer in a.layers[start:stop]:
        block = _apply_layer(block, layer, a.n_qubits)
    return block


def ansatz_unitary(a: LayeredAnsatz) -> Operator:
    """Ordered product of all layers; the empty ansatz is the identity."""
    return Operator(_product(a, 0, len(a.layers)), "unitary")


def scrambler_circuit_ansatz(n_qubits: int, g: float, t: int, angles: np.ndarray) -> LayeredAnsatz:
    """Layer decomposition of the scrambler circuit with per-period angles (t, n, 3).

    Each period carries 3n rotation layers (z, then y, then x per qubit,
    matching the application order inside the rotation brick) followed by the
    fixed entangling phase layer, so every rotation occurrence is an
    independent parameter of the decomposition.
    """
    arr = np.asarray(angles, dtype=float)
    if arr.shape != (t, n_qubits, 3):
        raise ValueError(f"scrambler_circuit_ansatz: angles shape {arr.shape} != ({t}, {n_qubits}, 3)")
    layers: list[Layer] = []
    if t > 0:
        phase = PhaseLayer(entangler_phases(n_qubits, g))
        for p in range(t):
            for q in range(n_qubits):
                ax, ay, az = arr[p, q]
                layers.append(RotationLayer(q, "z", az))
                layers.append(RotationLayer(q, "y", ay))
                layers.append(RotationLayer(q, "x", ax))
            layers.append(phase)
    return LayeredAnsatz(n_qubits, tuple(layers))


def scrambler_ansatz(spec: ScramblerSpec) -> LayeredAnsatz:
    """Layer decomposition of ``scrambler_unitary(spec)`` (angles shared per period)."""
    tiled = np.tile(spec.angles.reshape(1, spec.n_qubits, 3), (spec.t, 1, 1))
    return scrambler_circuit_ansatz(spec.n_qubits, spec.g, spec.t, tiled)


def _layer_generator(layer: Layer, n: int) -> np.ndarray:
    if isinstance(layer, RotationLayer):
        return embed_operator(pauli(layer.axis), [layer.site], n).entries / 2.0
    if isinstance(layer, GeneratorLayer):
        return layer.generator.entries
    raise ValueError("layer is not parametrized")


def _has_half_spectrum(layer: Layer, n: int) -> bool:
    if isinstance(layer, RotationLayer):
        return True
    if isinstance(layer, GeneratorLayer):
        evals = np.linalg.eigvalsh(layer.generator.entries)
        return bool(np.max(np.abs(np.abs(evals) - 0.5)) <= 1e-9)
    return False


def _shifted_unitaries(a: LayeredAnsatz, k: int, deltas: Sequence[float]) -> list[Operator]:
    """Full-circuit unitaries with ``theta_k`` shifted by each delta (one pass)."""
    pos = a._position(k)
    layer = a.layers[pos]
    before = _product(a, 0, pos)
    n_layers = len(a.layers)
    outs = []
    for delta in deltas:
        block = _apply_layer(before, layer, a.n_qubits, theta=layer.theta + delta)
        for rest in a.layers[pos + 1 : n_layers]:
            block = _apply_layer(block, rest, a.n_qubits)
        outs.append(Operator(block, "unitary"))
    return outs


def shift_rule_gradient(
    a: LayeredAnsatz, k: int, cost: Callable[[Operator], float]
) -> GradientEstimate:
    """Exact ``dC/dtheta_k = [C(theta_k + pi/2) - C(theta_k - pi/2)] / 2``.

    Valid only for generators with spectrum {+1/2, -1/2} (all rotation
    layers); raises otherwise, in which case callers must fall back to
    :func:`finite_difference_gradient`.
    """
    pos = a._position(k)
    if not _has_half_spectrum(a.layers[pos], a.n_qubits):
        raise ValueError(
            "shift_rule_gradient: generator spectrum is not {+1/2, -1/2}; "
            "use finite_difference_gradient"
        )
    plus, minus = _shifted_unitaries(a, k, (np.pi / 2, -np.pi / 2))
    value = (cost(plus) - cost(minus)) / 2.0
    return GradientEstimate(float(value), "shift_rule")


def finite_difference_gradient(
    a: LayeredAnsatz, k: int, cost: Callable[[Operator], float], h: float = 1e-5
) -> GradientEstimate:
    """Central difference ``[C(theta_k + h) - C(theta_k - h)] / (2h)``."""
    if h <= 0:
        raise ValueError("finite_difference_gradient: h must be > 0")
    plus, minus = _shifted_unitaries(a, k, (h, -h))
    value = (cost(plus) - cost(minus)) / (2.0 * h)
    return GradientEstimate(float(value), "finite_difference", step=h)


def _state_after(a: LayeredAnsatz, k: int, psi: StateVector) -> np.ndarray:
    """``U_R^k |psi>``: layers 1..k applied, inclusive of parameter k's layer."""
    pos = a._position(k)
    block = psi.amplitudes[:, None]
    for layer in a.layers[: pos + 1]:
        block = _apply_layer(block, layer, a.n_qubits)
    return block[:, 0]


def quantum_variance_of_generator(a: LayeredAnsatz, k: int, psi: StateVector) -> float:
    """Variance of ``G_k`` in the state ``U_R^k |psi>``; clamped at 0."""
    chi = _state_after(a, k, psi)
    g = _layer_generator(a.layers[a._position(k)], a.n_qubits)
    gchi = g @ chi
    e1 = np.vdot(chi, gchi).real
    e2 = np.vdot(gchi, gchi).real
    var = e2 - e1 * e1
    if var < -1e-12:
        raise AssertionError(f"quantum variance negative beyond tolerance: {var:.3e}")
    return float(max(var, 0.0))


def variance_prefactor(h: Operator, n_qubits: int) -> float:
    """``2 Tr[H^2]/(2^2n - 1) - 2 (Tr H)^2 / (2^n (2^2n - 1))``; always >= 0."""
    d = 2**n_qubits
    if h.dim != d:
        raise ValueError(f"variance_prefactor: H dim {h.dim} != 2**{n_qubits}")
    if h.kind_hint != "hermitian":
        defect = np.max(np.abs(h.entries - h.entries.conj().T))
        if defect > ATOL:
            raise ValueError(f"variance_prefactor: H is not hermitian, |H - H+| = {defect:.3e}")
    tr_h = np.trace(h.entries).real
    tr_h2 = float(np.sum(np.abs(h.entries) ** 2))  # Tr[H^2] = |H|_F^2 for Hermitian H
    return 2.0 * tr_h2 / (d * d - 1.0) - 2.0 * tr_h * tr_h / (d * (d * d - 1.0))


def thm1_variance(h: Operator, a: LayeredAnsatz, k: int, psi: StateVector) -> float:
    """Closed-form gradient variance over 2-design targets for the generic cost."""
    return variance_prefactor(h, a.n_qubits) * quantum_variance_of_generator(a, k, psi)


def corollary_bound(h: Operator, g_k: Operator, n_qubits: int) -> float:
    """Upper bound: prefactor times ``|G_k^2|_inf`` (largest eigenvalue of G^2)."""
    evals = np.linalg.eigvalsh(g_k.entries)
    g2_norm = float(np.max(evals**2))
    return variance_prefactor(h, n_qubits) * g2_norm


def _validate_factorized(terms: Sequence[FactorizedGenTerm]) -> None:
    if not terms:
        raise ValueError("thm3: empty term list")
    total = sum(t.p_tilde for t in terms)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"thm3: p_tilde weights sum to {total!r}, expected 1")


def thm3_variance(terms: Sequence[FactorizedGenTerm], a: LayeredAnsatz, k: int) -> float:
    """Closed-form gradient variance of the generalized cost over 2-design targets.

    For the factorized cost ``sum_l p_l w_l <psi_l| U+ ((V H_l V+) (x) I_D) U |psi_l>``
    the variance over 2-design targets V evaluates, via the second-moment
    subspace identity, to the double sum

        ``sum_lm p_l w_l p_m w_m *
          [Tr[H_l H_m]/(d^2-1) - Tr[H_l]Tr[H_m]/(d(d^2-1))] *
          Tr[M_l M_m]``

    with ``d = 2^|S|`` and ``M_l = Tr_D[-1j*[J_k, U|psi_l><psi_l|U+]]`` the
    dilation-traced derivative of each evolved training state
    (``J_k = -1j*U dU+/dtheta_k``).  The diagonal ``Tr[M_l^2]`` equals
    ``2 Var[G_k]`` in ``U_R^k|psi_l>`` when D is trivial, so a single term
    with no dilation reduces exactly to :func:`thm1_variance`.
    """
    _validate_factorized(terms)
    n_s = terms[0].h_s.n_qubits
    d = 2**n_s
    d_dil = 2 ** (a.n_qubits - n_s)
    for term in terms:
        if term.h_s.n_qubits != n_s:
            raise ValueError("thm3: inconsistent system size across terms")
        if term.psi_sd.n_qubits != a.n_qubits:
            raise ValueError("thm3: psi_sd must live on the ansatz register S(x)D")
    pos = a._position(k)
    g = _layer_generator(a.layers[pos], a.n_qubits)
    u_r = _product(a, 0, pos + 1)
    u_l = _product(a, pos + 1, len(a.layers))
    traced = []
    for term in terms:
        phi = u_r @ term.psi_sd.amplitudes
        chi = (u_l @ phi).reshape(d, d_dil)
        jchi = (u_l @ (g @ phi)).reshape(d, d_dil)
        traced.append(-1j * (jchi @ chi.conj().T - chi @ jchi.conj().T))
    total = 0.0
    for l, tl in enumerate(terms):
        for m, tm in enumerate(terms):
            tr_lm = np.trace(tl.h_s.entries @ tm.h_s.entries).real
            tr_l = np.trace(tl.h_s.entries).real
            tr_m = np.trace(tm.h_s.entries).real
            pref = tr_lm / (d * d - 1.0) - tr_l * tr_m / (d * (d * d - 1.0))
            f_lm = np.trace(traced[l] @ traced[m])
            if abs(f_lm.imag) > 1e-10:
                raise AssertionError(f"thm3_variance: imaginary residue {f_lm.imag:.3e}")
            total += tl.p_tilde * tl.w * tm.p_tilde * tm.w * pref * f_lm.real
    return float(total)


def thm3_variance_bound(terms: Sequence[FactorizedGenTerm], a: LayeredAnsatz, k: int) -> float:
    """Upper bound ``w_max^2 [2 X_max/(d^2-1) + 2 Y_max/(d(d^2-1))] |G_k^2|_inf``."""
    _validate_factorized(terms)
    d = 2 ** terms[0].h_s.n_qubits
    w_max = max(abs(t.w) for t in terms)
    x_max = max(
        abs(np.trace(tl.h_s.entries @ tm.h_s.entries).real) for tl in terms for tm in terms
    )
    y_max = max(
        abs(np.trace(tl.h_s.entries).real) * abs(np.trace(tm.h_s.entries).real)
        for tl in terms
        for tm in terms
    )
    g = _layer_generator(a.layers[a._position(k)], a.n_qubits)
    g2_norm = float(np.max(np.linalg.eigvalsh(g) ** 2))
    return w_max**2 * (2.0 * x_max / (d * d - 1.0) + 2.0 * y_max / (d * (d * d - 1.0))) * g2_norm
