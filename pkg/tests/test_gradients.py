"""Gradient and closed-form variance tests.

The shift rule is validated against central finite differences; the
closed-form variances are validated against Monte Carlo over Haar targets
(tight sample counts live in the acceptance suite, smaller ones here).
"""

import numpy as np
import pytest
from scipy.linalg import expm

from scramblearn.costs import FactorizedGenTerm, GenericCostSpec, generic_cost, hst_cost, lhst_cost, lhst_local_cost
from scramblearn.ensembles import (
    ScramblerSpec,
    SeedPlan,
    haar_state_array,
    haar_unitary,
    random_scrambler_spec,
    scrambler_unitary,
    summarize,
)
from scramblearn.gradients import (
    FixedLayer,
    GeneratorLayer,
    GradientEstimate,
    LayeredAnsatz,
    PhaseLayer,
    RotationLayer,
    ansatz_unitary,
    corollary_bound,
    finite_difference_gradient,
    quantum_variance_of_generator,
    scrambler_ansatz,
    shift_rule_gradient,
    thm1_variance,
    thm3_variance,
    thm3_variance_bound,
    variance_prefactor,
)
from scramblearn.qcore import Operator, StateVector, basis_state, embed_operator, identity, pauli, pauli_on, plus_state


def random_hermitian(dim, rng):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator((a + a.conj().T) / 2, "hermitian")


def random_state(dim, rng):
    return StateVector(haar_state_array(dim, rng))


class TestAnsatzUnitary:
    def test_empty_is_identity(self):
        a = LayeredAnsatz(2, ())
        assert np.array_equal(ansatz_unitary(a).entries, np.eye(4))

    def test_single_zero_rotation(self):
        a = LayeredAnsatz(1, (RotationLayer(0, "x", 0.0),))
        assert np.allclose(ansatz_unitary(a).entries, np.eye(2))

    def test_layer_order_is_application_order(self):
        # layer 1 acts first: U = L2 @ L1
        a = LayeredAnsatz(
            1, (RotationLayer(0, "x", 0.7), RotationLayer(0, "z", 1.1))
        )
        want = expm(-1j * 1.1 * pauli("z").entries / 2) @ expm(-1j * 0.7 * pauli("x").entries / 2)
        assert np.max(np.abs(ansatz_unitary(a).entries - want)) <= 1e-12

    def test_matches_scrambler_unitary(self):
        for seed, (n, g, t) in enumerate([(2, 1.0, 3), (3, 0.7, 4), (4, 0.0, 2)]):
            spec = random_scrambler_spec(n, g, t, seed)
            got = ansatz_unitary(scrambler_ansatz(spec)).entries
            assert np.max(np.abs(got - scrambler_unitary(spec).entries)) <= 1e-10

    def test_generator_layer_matches_expm(self):
        rng = np.random.default_rng(5)
        g = random_hermitian(4, rng)
        theta = 0.9
        a = LayeredAnsatz(2, (GeneratorLayer(g, theta),))
        want = expm(-1j * theta * g.entries)
        assert np.max(np.abs(ansatz_unitary(a).entries - want)) <= 1e-12

    def test_fixed_and_phase_layers(self):
        rng = np.random.default_rng(6)
        u = haar_unitary(4, rng)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        a = LayeredAnsatz(2, (FixedLayer(u), PhaseLayer(phases)))
        want = np.diag(phases) @ u.entries
        assert np.max(np.abs(ansatz_unitary(a).entries - want)) <= 1e-12

    def test_with_theta(self):
        a = scrambler_ansatz(random_scrambler_spec(2, 1.0, 2, 3))
        b = a.with_theta(4, 0.123)
        assert b.thetas[4] == 0.123
        assert np.allclose(np.delete(a.thetas, 4), np.delete(b.thetas, 4))

    def test_shifted_unitaries_match_full_rebuild(self):
        from scramblearn.gradients import _shifted_unitaries

        rng = np.random.default_rng(44)
        a = scrambler_ansatz(random_scrambler_spec(3, 0.9, 2, rng))
        for k in (0, 7, a.n_params - 1):
            theta = a.thetas[k]
            plus, minus = _shifted_unitaries(a, k, (np.pi / 2, -np.pi / 2))
            want_plus = ansatz_unitary(a.with_theta(k, theta + np.pi / 2))
            want_minus = ansatz_unitary(a.with_theta(k, theta - np.pi / 2))
            assert np.max(np.abs(plus.entries - want_plus.entries)) <= 1e-12
            assert np.max(np.abs(minus.entries - want_minus.entries)) <= 1e-12


COSTS = {
    "generic": lambda u, v, spec: generic_cost(u, v, spec),
    "hst": lambda u, v, spec: hst_cost(u, v),
    "lhst": lambda u, v, spec: lhst_cost(u, v),
    "lhst_local_0": lambda u, v, spec: lhst_local_cost(u, v, 0),
}


class TestShiftRule:
    def test_cosine_landscape(self):
        # ansatz R_x(theta) on |0>, observable Z: cost = cos(theta)
        spec1 = ScramblerSpec(1, 0.0, 1, np.array([np.pi / 2, 0.0, 0.0]))
        a = scrambler_ansatz(spec1)
        cost_spec = GenericCostSpec(pauli("z"), basis_state(1))
        cost = lambda u: generic_cost(u, identity(2), cost_spec)
        assert abs(shift_rule_gradient(a, 2, cost).value + 1.0) <= 1e-12
        a0 = a.with_theta(2, 0.0)
        assert abs(shift_rule_gradient(a0, 2, cost).value) <= 1e-12

    def test_finite_difference_on_cosine(self):
        spec1 = ScramblerSpec(1, 0.0, 1, np.array([np.pi / 2, 0.0, 0.0]))
        a = scrambler_ansatz(spec1)
        cost_spec = GenericCostSpec(pauli("z"), basis_state(1))
        cost = lambda u: generic_cost(u, identity(2), cost_spec)
        est = finite_difference_gradient(a, 2, cost)
        assert est.step == 1e-5
        assert abs(est.value + 1.0) <= 1e-9

    def test_constant_cost(self):
        a = scrambler_ansatz(random_scrambler_spec(2, 1.0, 1, 4))
        h = Operator(np.eye(4, dtype=complex), "hermitian")
        spec = GenericCostSpec(h, basis_state(2))
        cost = lambda u: generic_cost(u, haar_unitary(4, 9), spec)
        assert abs(shift_rule_gradient(a, 0, cost).value) <= 1e-12
        assert abs(finite_difference_gradient(a, 0, cost).value) <= 1e-9

    def test_matches_finite_difference_all_costs(self):
        # 100 random scrambler-ansatz instances, n <= 4, within 1e-6 absolute
        plan = SeedPlan(777)
        kinds = list(COSTS)
        for i in range(100):
            rng = plan.rng(i)
            n = int(rng.integers(1, 5))
            t = int(rng.integers(1, 3))
            a = scrambler_ansatz(random_scrambler_spec(n, float(rng.uniform(0, 2)), t, rng))
            k = int(rng.integers(0, a.n_params))
            v = haar_unitary(2**n, rng)
            spec = GenericCostSpec(random_hermitian(2**n, rng), random_state(2**n, rng))
            kind = kinds[i % len(kinds)]
            cost = lambda u: COSTS[kind](u, v, spec)
            g_shift = shift_rule_gradient(a, k, cost).value
            g_fd = finite_difference_gradient(a, k, cost, 1e-5).value
            assert abs(g_shift - g_fd) <= 1e-6, (kind, n, k)

    def test_rejects_non_half_spectrum(self):
        rng = np.random.default_rng(10)
        g = random_hermitian(4, rng)
        a = LayeredAnsatz(2, (GeneratorLayer(g, 0.3),))
        with pytest.raises(ValueError):
            shift_rule_gradient(a, 0, lambda u: 0.0)
        # finite difference remains available as the fallback
        est = finite_difference_gradient(a, 0, lambda u: 0.0)
        assert isinstance(est, GradientEstimate)

    def test_half_spectrum_generator_layer_accepted(self):
        g = Operator(embed_operator(pauli("z"), [0], 2).entries / 2, "hermitian")
        a = LayeredAnsatz(2, (GeneratorLayer(g, 0.4),))
        spec = GenericCostSpec(pauli_on("z", 0, 2), basis_state(2))
        cost = lambda u: generic_cost(u, identity(4), spec)
        got = shift_rule_gradient(a, 0, cost).value
        want = finite_difference_gradient(a, 0, cost).value
        assert abs(got - want) <= 1e-9


class TestQuantumVariance:
    def test_eigenstate_gives_zero(self):
        a = LayeredAnsatz(1, (RotationLayer(0, "z", 0.5),))
        assert quantum_variance_of_generator(a, 0, basis_state(1)) <= 1e-15

    def test_plus_state_quarter(self):
        a = LayeredAnsatz(1, (RotationLayer(0, "z", 0.0),))
        assert abs(quantum_variance_of_generator(a, 0, plus_state(1)) - 0.25) <= 1e-12

    def test_bounded_by_generator_norm(self):
        plan = SeedPlan(31)
        for i in range(20):
            rng = plan.rng(i)
            n = int(rng.integers(1, 4))
            a = scrambler_ansatz(random_scrambler_spec(n, 1.0, 2, rng))
            k = int(rng.integers(0, a.n_params))
            var = quantum_variance_of_generator(a, k, random_state(2**n, rng))
            assert -1e-12 <= var <= 0.25 + 1e-12

    def test_equals_variance_of_derivative_generator(self):
        # Var in U|psi> of J = -i U dU+/dtheta_k equals Var of G_k in U_R^k|psi>
        from scramblearn.gradients import _layer_generator, _product

        plan = SeedPlan(35)
        for i in range(10):
            rng = plan.rng(i)
            n = int(rng.integers(1, 4))
            a = scrambler_ansatz(random_scrambler_spec(n, 1.0, 2, rng))
            k = int(rng.integers(0, a.n_params))
            psi = random_state(2**n, rng)
            pos = a.param_positions[k]
            u_r = _product(a, 0, pos + 1)
            u_l = _product(a, pos + 1, len(a.layers))
            g = _layer_generator(a.layers[pos], n)
            j = u_l @ g @ u_l.conj().T
            chi = u_l @ (u_r @ psi.amplitudes)
            e1 = np.vdot(chi, j @ chi).real
            e2 = np.vdot(j @ chi, j @ chi).real
            assert abs((e2 - e1 * e1) - quantum_variance_of_generator(a, k, psi)) <= 1e-12

    def test_depends_only_on_prefix(self):
        # appending layers after k leaves the value unchanged
        rng = np.random.default_rng(32)
        a = scrambler_ansatz(random_scrambler_spec(2, 1.0, 1, rng))
        psi = random_state(4, rng)
        k = 2
        base = quantum_variance_of_generator(a, k, psi)
        extra = a.layers + tuple(
            RotationLayer(int(rng.integers(0, 2)), "xyz"[int(rng.integers(0, 3))], rng.uniform(0, 6))
            for _ in range(5)
        )
        extended = LayeredAnsatz(2, extra)
        assert abs(quantum_variance_of_generator(extended, k, psi) - base) <= 1e-12


class TestThm1Variance:
    def test_identity_observable_vanishes(self):
        a = scrambler_ansatz(random_scrambler_spec(2, 1.0, 1, 1))
        h = Operator(np.eye(4, dtype=complex), "hermitian")
        assert abs(thm1_variance(h, a, 0, random_state(4, np.random.default_rng(2)))) <= 1e-12

    def test_eigenstate_input_vanishes(self):
        a = LayeredAnsatz(2, (RotationLayer(0, "z", 0.3), RotationLayer(1, "x", 0.8)))
        h = random_hermitian(4, np.random.default_rng(3))
        assert abs(thm1_variance(h, a, 0, basis_state(2))) <= 1e-12

    def test_prefactor_rank_one_projector(self):
        for n in (2, 4, 6, 8):
            h = np.zeros((2**n, 2**n), dtype=complex)
            h[0, 0] = 1.0
            pref = variance_prefactor(Operator(h, "hermitian"), n)
            want = 2 * (1 - 2.0**-n) / (4**n - 1)
            assert abs(pref - want) <= 1e-15
            if n >= 6:  # asymptotic regime
                assert abs(pref - 2.0 / 4**n) <= 0.05 * 2.0 / 4**n

    def test_matches_monte_carlo(self):
        plan = SeedPlan(2024)
        rng = plan.rng(0)
        n, d = 2, 4
        a = scrambler_ansatz(random_scrambler_spec(n, 1.0, 1, rng))
        h = random_hermitian(d, rng)
        psi = random_state(d, rng)
        analytic = thm1_variance(h, a, 0, psi)
        spec = GenericCostSpec(h, psi)
        grads = np.empty(6000)
        for i in range(6000):
            v = haar_unitary(d, plan.seed(1 + i))
            grads[i] = shift_rule_gradient(a, 0, lambda u: generic_cost(u, v, spec)).value
        s = summarize(grads, 0)
        assert abs(s.variance - analytic) <= 5 * s.std_error_of_variance
        assert abs(s.mean) <= 5 * s.std_error_of_mean

    def test_matches_monte_carlo_rank_one_projector(self):
        # H = |00><00| with a three-rotation-layer ansatz
        plan = SeedPlan(2025)
        rng = plan.rng(0)
        d = 4
        layers = tuple(
            RotationLayer(int(rng.integers(0, 2)), "xyz"[int(rng.integers(0, 3))],
                          float(rng.uniform(0, 2 * np.pi)))
            for _ in range(3)
        )
        a = LayeredAnsatz(2, layers)
        h_mat = np.zeros((d, d), dtype=complex)
        h_mat[0, 0] = 1.0
        h = Operator(h_mat, "hermitian")
        psi = random_state(d, rng)
        analytic = thm1_variance(h, a, 1, psi)
        spec = GenericCostSpec(h, psi)
        grads = np.empty(8000)
        for i in range(8000):
            v = haar_unitary(d, plan.seed(1 + i))
            grads[i] = shift_rule_gradient(a, 1, lambda u: generic_cost(u, v, spec)).value
        s = summarize(grads, 0)
        assert abs(s.variance - analytic) <= 5 * s.std_error_of_variance


class TestCorollaryBound:
    def test_dominates_thm1(self):
        plan = SeedPlan(41)
        for i in range(100):
            rng = plan.rng(i)
            n = int(rng.integers(1, 5))
            a = scrambler_ansatz(random_scrambler_spec(n, 1.0, 1, rng))
            k = int(rng.integers(0, a.n_params))
            h = random_hermitian(2**n, rng)
            psi = random_state(2**n, rng)
            layer = a.layers[a.param_positions[k]]
            g = Operator(embed_operator(pauli(layer.axis), [layer.site], n).entries / 2, "hermitian")
            assert corollary_bound(h, g, n) >= thm1_variance(h, a, k, psi) - 1e-12

    def test_exponential_decay_for_extensive_h(self):
        # Tr[H^2] = 2^n with H = Z (x) I...: bound <= 2^-n
        for n in range(2, 9):
            h = pauli_on("z", 0, n)
            g = Operator(embed_operator(pauli("x"), [0], n).entries / 2, "hermitian")
            assert corollary_bound(h, g, n) <= 2.0**-n


def two_term_instance(n_d, seed):
    rng = np.random.default_rng(seed)
    n_s, d_s = 2, 4
    d_sd = 2 ** (2 + n_d)
    h_s = random_hermitian(d_s, rng)
    w = rng.uniform(-1, 1, 2)
    psi = [haar_state_array(d_sd, rng) for _ in range(2)]
    alpha = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    alpha /= np.linalg.norm(alpha)
    factorized = tuple(
        FactorizedGenTerm(abs(alpha[l]) ** 2, float(w[l]), h_s, StateVector(psi[l]))
        for l in range(2)
    )
    ansatz = scrambler_ansatz(random_scrambler_spec(2 + n_d, 1.0, 1, rng))
    return factorized, ansatz


class TestThm3Variance:
    def test_single_term_reduces_to_thm1(self):
        rng = np.random.default_rng(51)
        h = random_hermitian(4, rng)
        psi = random_state(4, rng)
        a = scrambler_ansatz(random_scrambler_spec(2, 1.0, 1, rng))
        single = (FactorizedGenTerm(1.0, 1.0, h, psi),)
        assert abs(thm3_variance(single, a, 0) - thm1_variance(h, a, 0, psi)) <= 1e-12

    def test_zero_reference_weights(self):
        rng = np.random.default_rng(52)
        h = random_hermitian(4, rng)
        psi = random_state(4, rng)
        a = scrambler_ansatz(random_scrambler_spec(2, 1.0, 1, rng))
        assert thm3_variance((FactorizedGenTerm(1.0, 0.0, h, psi),), a, 0) == 0.0

    def test_weights_validated(self):
        rng = np.random.default_rng(53)
        h = random_hermitian(4, rng)
        psi = random_state(4, rng)
        a = scrambler_ansatz(random_scrambler_spec(2, 1.0, 1, rng))
        with pytest.raises(ValueError):
            thm3_variance((FactorizedGenTerm(0.5, 1.0, h, psi),), a, 0)

    @pytest.mark.parametrize("n_d", [0, 1])
    def test_bounded(self, n_d):
        terms, a = two_term_instance(n_d, 54 + n_d)
        assert thm3_variance(terms, a, 0) <= thm3_variance_bound(terms, a, 0) + 1e-12

    def test_result_is_real_symmetric_sum(self):
        terms, a = two_term_instance(1, 60)
        val = thm3_variance(terms, a, 0)
        assert isinstance(val, float)
