"""Unit tests for the statevector/operator primitives.

Derived expectations are checked against independent oracles: dense
Kronecker constructions, scipy's matrix exponential, and naive index loops.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from scramblearn.qcore import (
    Operator,
    StateVector,
    apply_local_gate,
    apply_unitary,
    basis_state,
    bit_value,
    choi_vector,
    embed_operator,
    expectation,
    hadamard_gate,
    identity,
    max_entangled_state,
    partial_trace,
    pauli,
    plus_state,
    reduced_density_matrix,
    rotation_gate,
    tensor_product,
)


def random_state(n, rng):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return StateVector(v / np.linalg.norm(v))


def random_density(n, rng):
    a = rng.standard_normal((2**n, 2**n)) + 1j * rng.standard_normal((2**n, 2**n))
    rho = a @ a.conj().T
    return Operator(rho / np.trace(rho).real)


class TestTypes:
    def test_state_norm_enforced(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 1.0]))

    def test_state_length_power_of_two(self):
        with pytest.raises(ValueError):
            StateVector(np.ones(3) / np.sqrt(3))

    def test_operator_square(self):
        with pytest.raises(ValueError):
            Operator(np.ones((2, 3)))

    def test_unitary_hint_validated(self):
        with pytest.raises(ValueError):
            Operator(np.array([[1, 0], [0, 2]]), "unitary")
        Operator(np.eye(2), "unitary")

    def test_hermitian_hint_validated(self):
        with pytest.raises(ValueError):
            Operator(np.array([[0, 1], [0, 0]]), "hermitian")

    def test_immutability(self):
        state = basis_state(2)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0.0

    def test_bit_value_msb_first(self):
        # index 2 on 2 qubits is |10>: qubit 0 carries the high bit
        assert bit_value(2, 0, 2) == 1
        assert bit_value(2, 1, 2) == 0


class TestTensorProduct:
    def test_identity(self):
        assert np.allclose(tensor_product(identity(2), identity(2)).entries, np.eye(4))

    def test_zz_diagonal(self):
        zz = tensor_product(pauli("z"), pauli("z"))
        assert np.allclose(np.diag(zz.entries), [1, -1, -1, 1])

    def test_xz_entry(self):
        # 4x4 expansion by hand: row 0, col 2 of X (x) Z is +1
        xz = tensor_product(pauli("x"), pauli("z"))
        expected = np.array(
            [
                [0, 0, 1, 0],
                [0, 0, 0, -1],
                [1, 0, 0, 0],
                [0, -1, 0, 0],
            ],
            dtype=complex,
        )
        assert np.allclose(xz.entries, expected)
        assert xz.entries[0, 2] == 1


class TestApply:
    def test_x_flips(self):
        assert np.allclose(apply_unitary(basis_state(1), pauli("x")).amplitudes, [0, 1])

    def test_identity_fixes(self):
        rng = np.random.default_rng(3)
        psi = random_state(3, rng)
        out = apply_unitary(psi, identity(8))
        assert np.allclose(out.amplitudes, psi.amplitudes)

    def test_hadamard_involution(self):
        out = apply_unitary(apply_unitary(basis_state(1), hadamard_gate()), hadamard_gate())
        assert np.max(np.abs(out.amplitudes - [1, 0])) <= 1e-12

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            apply_unitary(basis_state(2), pauli("x"))

    def test_local_x_on_qubit0(self):
        out = apply_local_gate(basis_state(2), pauli("x"), 0)
        assert np.allclose(out.amplitudes, [0, 0, 1, 0])  # |10>

    def test_local_rz_preserves_moduli(self):
        out = apply_local_gate(basis_state(1), rotation_gate("z", 0.7), 0)
        assert np.allclose(np.abs(out.amplitudes), [1, 0])

    def test_local_agrees_with_dense(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            q = int(rng.integers(0, n))
            psi = random_state(n, rng)
            gmat = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            q_mat, _ = np.linalg.qr(gmat)
            gate = Operator(q_mat, "unitary")
            dense = embed_operator(gate, [q], n)
            got = apply_local_gate(psi, gate, q)
            want = apply_unitary(psi, dense)
            assert np.max(np.abs(got.amplitudes - want.amplitudes)) <= 1e-12

    def test_local_out_of_range(self):
        with pytest.raises(ValueError):
            apply_local_gate(basis_state(2), pauli("x"), 2)


class TestRotationGate:
    def test_zero_angle(self):
        for axis in "xyz":
            assert np.allclose(rotation_gate(axis, 0.0).entries, np.eye(2))

    def test_two_pi_is_minus_identity(self):
        assert np.allclose(rotation_gate("z", 2 * np.pi).entries, -np.eye(2))

    @pytest.mark.parametrize("axis", ["x", "y", "z"])
    def test_matches_matrix_exponential(self, axis):
        for angle in np.linspace(-2 * np.pi, 2 * np.pi, 17):
            want = expm(-1j * angle * pauli(axis).entries / 2)
            assert np.max(np.abs(rotation_gate(axis, angle).entries - want)) <= 1e-12

    def test_x_pi_is_minus_i_x(self):
        assert np.allclose(rotation_gate("x", np.pi).entries, -1j * pauli("x").entries)


class TestPartialTrace:
    def test_product_state(self):
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0] = 1.0
        out = partial_trace(Operator(rho), [0])
        assert np.allclose(out.entries, [[1, 0], [0, 0]])

    def test_bell_reduction(self):
        bell = max_entangled_state(1)
        rho = Operator(np.outer(bell.amplitudes, bell.amplitudes.conj()))
        out = partial_trace(rho, [0])
        assert np.allclose(out.entries, np.eye(2) / 2)

    def test_trace_preserved_and_positive(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            rho = random_density(3, rng)
            keep = sorted(rng.choice(3, size=int(rng.integers(1, 3)), replace=False))
            out = partial_trace(rho, keep)
            assert abs(np.trace(out.entries) - 1.0) <= 1e-12
            assert np.min(np.linalg.eigvalsh((out.entries + out.entries.conj().T) / 2)) >= -1e-10

    def test_against_index_sum_oracle(self):
        rng = np.random.default_rng(6)
        rho = random_density(3, rng)
        out = partial_trace(rho, [0, 2]).entries
        want = np.zeros((4, 4), dtype=complex)
        for a0 in range(2):
            for a2 in range(2):
                for b0 in range(2):
                    for b2 in range(2):
                        for j in range(2):  # traced qubit 1
                            r = (a0 << 2) | (j << 1) | a2
                            c = (b0 << 2) | (j << 1) | b2
                            want[(a0 << 1) | a2, (b0 << 1) | b2] += rho.entries[r, c]
        assert np.max(np.abs(out - want)) <= 1e-12

    def test_invalid_keep(self):
        rho = random_density(2, np.random.default_rng(0))
        with pytest.raises(ValueError):
            partial_trace(rho, [])
        with pytest.raises(ValueError):
            partial_trace(rho, [5])

    def test_reduced_density_matches_partial_trace(self):
        rng = np.random.default_rng(7)
        psi = random_state(4, rng)
        rho = Operator(np.outer(psi.amplitudes, psi.amplitudes.conj()))
        for keep in ([0], [1, 3], [0, 2], [2]):
            a = reduced_density_matrix(psi, keep).entries
            b = partial_trace(rho, keep).entries
            assert np.max(np.abs(a - b)) <= 1e-12


class TestExpectation:
    def test_z_on_zero(self):
        assert expectation(pauli("z"), basis_state(1)) == 1.0

    def test_z_on_plus(self):
        assert abs(expectation(pauli("z"), plus_state(1))) <= 1e-12

    def test_against_naive_loop(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = Operator((a + a.conj().T) / 2, "hermitian")
        psi = random_state(2, rng)
        want = 0.0
        for i in range(4):
            for j in range(4):
                want += (psi.amplitudes[i].conjugate() * h.entries[i, j] * psi.amplitudes[j]).real
        assert abs(expectation(h, psi) - want) <= 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            expectation(Operator(np.array([[0, 1], [0, 0]])), basis_state(1))


class TestEntangledStates:
    def test_bell(self):
        assert np.allclose(
            max_entangled_state(1).amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2)
        )

    @pytest.mark.parametrize("n", range(1, 7))
    def test_norm(self, n):
        assert abs(np.linalg.norm(max_entangled_state(n).amplitudes) - 1) <= 1e-12

    def test_reduced_state_maximally_mixed(self):
        n = 3
        rho = reduced_density_matrix(max_entangled_state(n), list(range(n)))
        assert np.max(np.abs(rho.entries - np.eye(8) / 8)) <= 1e-12

    def test_choi_of_identity(self):
        assert np.allclose(choi_vector(identity(2)).amplitudes, max_entangled_state(1).amplitudes)

    def test_choi_of_x(self):
        # (|10> + |01>)/sqrt(2)
        assert np.allclose(
            choi_vector(pauli_x_unitary()).amplitudes, np.array([0, 1, 1, 0]) / np.sqrt(2)
        )

    def test_choi_matches_dense(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        w, _ = np.linalg.qr(a)
        wop = Operator(w, "unitary")
        got = choi_vector(wop).amplitudes
        dense = tensor_product(wop, identity(4)).entries @ max_entangled_state(2).amplitudes
        assert np.max(np.abs(got - dense)) <= 1e-12

    def test_choi_overlap_is_normalized_trace(self):
        # <choi(V)|choi(W)> = Tr[V+ W]/2^n, the identity behind the overlap test
        rng = np.random.default_rng(10)
        for n in (1, 2, 3):
            d = 2**n
            v, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
            w, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
            lhs = np.vdot(choi_vector(Operator(v, "unitary")).amplitudes,
                          choi_vector(Operator(w, "unitary")).amplitudes)
            rhs = np.trace(v.conj().T @ w) / d
            assert abs(lhs - rhs) <= 1e-12


def pauli_x_unitary():
    return Operator(pauli("x").entries, "unitary")


class TestEmbedOperator:
    def test_single_site(self):
        got = embed_operator(pauli("z"), [1], 2).entries
        assert np.allclose(got, np.kron(np.eye(2), pauli("z").entries))

    def test_order_matters(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        op = Operator(a)
        fwd = embed_operator(op, [0, 1], 2).entries
        rev = embed_operator(op, [1, 0], 2).entries
        swap = np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
        )
        assert np.allclose(fwd, a)
        assert np.allclose(rev, swap @ a @ swap)

    def test_composition_unitarity_drift(self):
        # long random products stay unitary to 1e-9 in max norm
        rng = np.random.default_rng(13)
        n = 3
        u = np.eye(8, dtype=complex)
        for _ in range(400):
            q = int(rng.integers(0, n))
            axis = "xyz"[int(rng.integers(0, 3))]
            u = embed_operator(rotation_gate(axis, rng.uniform(0, 2 * np.pi)), [q], n).entries @ u
        assert np.max(np.abs(u.conj().T @ u - np.eye(8))) <= 1e-9
