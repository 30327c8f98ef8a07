import math

import numpy as np
import pytest

from consensus_lab import (GraphSequence, MatrixSequence, NegativeWeight, VacuousBound,
                           averaging_identity_residual, contraction_certificate,
                           doubly_stochastic_rate_factor, operator_norm_sq,
                           pairwise_decrement_sum, product_convergence_records,
                           rate_quotient, regular_tree_graph, regular_quarter_weights,
                           spread_bound, step_decrement, uniform_adjoint,
                           vector_contraction_certificate, weighted_variance)


def triple_sum_oracle(a, x, nu):
    """Literal triple loop for (1/2) sum_i nu_i sum_{j,l} A_ij A_il (x_j - x_l)^2."""
    m = len(x)
    total = 0.0
    for i in range(m):
        acc = 0.0
        for j in range(m):
            for l in range(m):
                acc += a[i, j] * a[i, l] * (x[j] - x[l]) ** 2
        total += nu[i] * acc
    return 0.5 * total


def random_stochastic_matrix(rng, m):
    a = rng.random((m, m)) + 0.05
    return a / a.sum(axis=1, keepdims=True)


class TestWeightedVariance:
    def test_symmetric_two_point(self):
        assert weighted_variance(np.array([1.0, -1.0]), np.array([0.5, 0.5])).value == 1.0

    def test_consensus_state_zero(self):
        v = weighted_variance(np.full(5, 3.7), np.full(5, 0.2))
        assert abs(v.value) <= 1e-12

    def test_hand_case(self):
        v = weighted_variance(np.array([3.0, 0.0, 0.0]), np.full(3, 1 / 3))
        assert v.value == pytest.approx(2.0, abs=1e-14)
        assert v.center == pytest.approx(1.0, abs=1e-15)

    def test_negative_weight_guard(self):
        with pytest.raises(NegativeWeight):
            weighted_variance(np.array([1.0, 2.0]), np.array([0.5, -0.5]))

    def test_moment_and_centered_forms_agree(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            m = int(rng.integers(2, 13))
            x = rng.uniform(-8, 8, m)
            nu = rng.random(m)
            nu /= nu.sum()
            moment = weighted_variance(x, nu).value
            centered = float(nu @ (x - nu @ x) ** 2)
            assert abs(moment - centered) <= 1e-10 * max(1.0, x @ x)
            assert moment >= -1e-12


class TestExactDecrease:
    def test_identity_matrix_residual_zero(self):
        x = np.array([1.0, -2.0, 0.5])
        nu = np.array([0.2, 0.3, 0.5])
        assert averaging_identity_residual(np.eye(3), x, nu) == 0.0

    def test_half_ones_hand_case(self):
        a = np.full((2, 2), 0.5)
        x = np.array([1.0, -1.0])
        nu = np.array([0.5, 0.5])
        assert weighted_variance(a @ x, nu).value == 0.0
        assert weighted_variance(x, a.T @ nu).value == 1.0
        assert pairwise_decrement_sum(a, x, nu) == 1.0
        assert averaging_identity_residual(a, x, nu) == 0.0

    def test_random_instances_against_oracle(self):
        rng = np.random.default_rng(101)
        for _ in range(100):
            m = int(rng.integers(2, 13))
            a = random_stochastic_matrix(rng, m)
            x = rng.uniform(-5, 5, m)
            nu = rng.random(m)
            scale = max(1.0, float(x @ x))
            assert abs(averaging_identity_residual(a, x, nu)) <= 1e-10 * scale
            assert abs(pairwise_decrement_sum(a, x, nu) -
                       triple_sum_oracle(a, x, nu)) <= 1e-10 * scale


class TestStepDecrement:
    def test_consensus_state(self):
        a = np.full((3, 3), 1 / 3)
        rec = step_decrement(a, np.full(3, 2.0), np.full(3, 1 / 3),
                             delta=1 / 3, beta=1 / 3, p_star=1)
        assert rec.value == 0.0
        assert rec.spread_sq == 0.0
        assert rec.passed

    def test_regular_tree_indicator(self):
        g = regular_tree_graph(3)
        a = regular_quarter_weights(g).entries
        x = np.zeros(8)
        x[3] = 1.0
        rec = step_decrement(a, x, np.full(8, 0.125), delta=0.125, beta=0.25, p_star=2)
        assert rec.spread_sq == 1.0
        assert rec.lower_bound == pytest.approx(0.125 * 0.0625 / 8.0, abs=0)
        assert rec.value >= rec.lower_bound
        assert rec.passed

    def test_random_certified_cases(self):
        rng = np.random.default_rng(55)
        for _ in range(100):
            m = int(rng.integers(2, 10))
            a = random_stochastic_matrix(rng, m)
            x = rng.uniform(-4, 4, m)
            pi = rng.random(m)
            pi /= pi.sum()
            delta = float(pi.min())
            beta = float(a.min())
            rec = step_decrement(a, x, pi, delta=delta, beta=beta, p_star=m - 1)
            assert rec.passed


class TestSpreadBound:
    def test_constant_vector(self):
        assert spread_bound(np.full(4, 1.5), np.full(4, 0.25)) == (0.0, 0.0)

    def test_hand_case(self):
        spread_sq, wvar = spread_bound(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        assert spread_sq == 1.0
        assert wvar == 0.25

    def test_random_cases(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            m = int(rng.integers(2, 21))
            x = rng.uniform(-10, 10, m)
            nu = rng.random(m)
            nu /= nu.sum()
            spread_sq, wvar = spread_bound(x, nu)
            assert wvar <= spread_sq * (1 + 1e-9) + 1e-12


class TestRateQuotient:
    def test_regular_tree_value(self):
        assert rate_quotient(0.125, 0.25, 2) == 1.0 - 1.0 / 1024.0

    def test_vacuous_guard(self):
        with pytest.raises(VacuousBound):
            rate_quotient(500.0, 1.0, 1)


class TestContraction:
    def _run(self, d=3, horizon=120, seed=2):
        seq = MatrixSequence.from_scheme(GraphSequence.static(regular_tree_graph(d)),
                                         "quarter")
        aps = uniform_adjoint(seq, horizon)
        rng = np.random.default_rng(seed)
        m = 2 ** d
        states = np.empty((horizon + 1, m))
        states[0] = rng.uniform(-1, 1, m)
        for t in range(horizon):
            states[t + 1] = seq.matrix_at(t) @ states[t]
        return seq, aps, states

    def test_t_equals_k_is_tight(self):
        _, aps, states = self._run()
        rb = contraction_certificate(states, aps, beta=0.25, p_star=2, k=0)
        first = rb.records[0]
        assert first.t == 0 and first.lhs == first.rhs
        assert rb.all_pass

    def test_all_pass_both_ks(self):
        _, aps, states = self._run()
        for k in (0, 60):
            assert contraction_certificate(states, aps, 0.25, 2, k).all_pass

    def test_vector_reduces_to_scalar(self):
        _, aps, states = self._run()
        scalar = contraction_certificate(states, aps, 0.25, 2, 0)
        vector = vector_contraction_certificate(states[:, :, None], aps, 0.25, 2, 0)
        assert [(r.lhs, r.rhs) for r in scalar.records] == \
               [(r.lhs, r.rhs) for r in vector.records]

    def test_equal_initial_states_stay_zero(self):
        seq = MatrixSequence.from_scheme(GraphSequence.static(regular_tree_graph(2)),
                                         "quarter")
        aps = uniform_adjoint(seq, 10)
        states = np.full((11, 4, 3), 2.5)
        rb = vector_contraction_certificate(states, aps, 0.25, 1, 0)
        assert all(r.lhs == 0.0 and r.rhs == 0.0 for r in rb.records)
        assert rb.all_pass


class TestBaselineFactor:
    def test_regular_tree_step(self):
        assert doubly_stochastic_rate_factor(0.25, 8, 1) == 1.0 - 1.0 / 512.0

    def test_zero_steps(self):
        assert doubly_stochastic_rate_factor(0.25, 8, 0) == 1.0

    def test_crossover_with_new_quotient(self):
        # the tree-based quotient beats the baseline once m > 8 ceil(d/2)
        for d, better in ((3, False), (6, True)):
            m = 2 ** d
            q_new = 1.0 - 1.0 / (64 * m * math.ceil(d / 2))
            q_base = doubly_stochastic_rate_factor(0.25, m, 1)
            assert (q_new < q_base) == better


class TestOperatorNormProducts:
    def test_norm_against_power_iteration_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            mat = rng.normal(size=(int(rng.integers(2, 9)),) * 2)
            gram = mat.T @ mat
            v = rng.normal(size=gram.shape[0])
            for _ in range(2000):
                v = gram @ v
                v /= np.linalg.norm(v)
            oracle = float(v @ gram @ v)
            assert operator_norm_sq(mat) == pytest.approx(oracle, rel=1e-9)

    def test_constant_positive_chain_limit(self):
        a = np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])
        seq = MatrixSequence.custom([a])
        aps = uniform_adjoint(seq, 300)
        recs = product_convergence_records(seq, aps, beta=0.25, p_star=1, k=0, t_max=260)
        assert all(r.passed for r in recs)
        assert recs[-1].lhs <= 1e-12  # product collapses to the rank-one limit

    def test_single_factor_case(self):
        seq = MatrixSequence.from_scheme(GraphSequence.static(regular_tree_graph(3)),
                                         "quarter")
        aps = uniform_adjoint(seq, 5)
        rec = product_convergence_records(seq, aps, 0.25, 2, k=0, t_max=0)[0]
        a = seq.matrix_at(0)
        expected = operator_norm_sq(a - np.outer(np.ones(8), aps.vectors[0]))
        assert rec.lhs == expected
        assert rec.passed
