from __future__ import annotations

import numpy as np
import pytest

from robustcb.audits import random_lemma3_instance
from robustcb.sem import Intervention, WeightMatrix, chain_dag, compose_weights, expected_reward
from robustcb.theory import (
    BoundParams,
    f_paths,
    hierarchical_dag,
    lemma3_check,
    lower_bound_curve,
    theorem2_instance,
    upper_bound_curve,
)


class TestUpperBoundCurve:
    def test_sqrt_t_scaling(self):
        p = BoundParams(d=2, L=2, N=5, m_x=0.0)
        base = upper_bound_curve(10_000, 1.0, p)
        grown = upper_bound_curve(40_000, 1.0, p)
        # sqrt(T) factor doubles, within the drift of the log factor
        ratio = grown / base
        assert 2.0 < ratio < 2.0 * np.log1p(40_000) / np.log1p(10_000) * 1.6

    def test_degree_scaling_in_leading_term(self):
        p3 = BoundParams(d=3, L=2, N=7, m_x=0.0)
        p1 = BoundParams(d=1, L=2, N=7, m_x=0.0)
        r = upper_bound_curve(1000, 1.0, p3) / upper_bound_curve(1000, 1.0, p1)
        assert r == pytest.approx(3.0**1.5, rel=1e-6)

    def test_monotone_in_c_with_linear_slope(self):
        p = BoundParams(d=2, L=3, N=7, m_x=1.0)
        v1 = upper_bound_curve(1000, 10.0, p)
        v2 = upper_bound_curve(1000, 11.0, p)
        slope = (v2 - v1) / 1.0
        assert slope == pytest.approx(p.c0 * 2 ** (3 - 0.5) * 7 * np.log1p(1000), rel=1e-9)

    def test_rejects_bad_inputs(self):
        p = BoundParams(d=1, L=1, N=2)
        with pytest.raises(ValueError):
            upper_bound_curve(0, 1.0, p)
        with pytest.raises(ValueError):
            upper_bound_curve(10, 0.5, p)


class TestLowerBoundCurve:
    def test_no_deviation_branch(self):
        p = BoundParams(d=2, L=2, N=5)
        assert lower_bound_curve(400, 0.0, p) == pytest.approx(2 ** (1 - 2) * 20.0)

    def test_linear_branch(self):
        p = BoundParams(d=2, L=2, N=5)
        c = 100.0
        assert lower_bound_curve(400, c, p) == pytest.approx(2**-1 * 4 * c)

    def test_crossover_point(self):
        p = BoundParams(d=3, L=2, N=7)
        t = 8100
        c_star = np.sqrt(t) / 9
        lo = lower_bound_curve(t, c_star * 0.999, p)
        hi = lower_bound_curve(t, c_star * 1.001, p)
        assert lo == pytest.approx(p.d ** (p.L / 2 - 2) * np.sqrt(t))
        assert hi > lo

    def test_upper_dominates_lower_at_matched_scale(self):
        for d in range(1, 7):
            for big_l in (1, 2, 3):
                p = BoundParams(d=d, L=big_l, N=big_l * d + 1, m_x=1.0)
                for t in (10, 1000, 100_000):
                    for c in (1.0, 10.0, 1000.0):
                        assert upper_bound_curve(t, c, p) >= lower_bound_curve(t, c, p)


class TestFPaths:
    def test_zero_weights(self):
        dag = chain_dag(3)
        w = WeightMatrix(dag, (np.zeros(0), np.array([0.0]), np.array([0.0])))
        assert np.allclose(f_paths(w), [0, 0, 1])

    def test_chain_products(self):
        dag = chain_dag(3)
        w = WeightMatrix(dag, (np.zeros(0), np.array([0.5]), np.array([0.5])))
        assert np.allclose(f_paths(w), [0.25, 0.5, 1.0])

    def test_refuses_large_graphs(self):
        dag = chain_dag(13)
        cols = (np.zeros(0),) + tuple(np.array([0.5]) for _ in range(12))
        with pytest.raises(ValueError, match="refusing"):
            f_paths(WeightMatrix(dag, cols))


class TestLemma3Check:
    def test_zero_perturbation(self):
        dag = hierarchical_dag([2, 2])
        cols = []
        for i in range(dag.n_nodes):
            k = len(dag.parents[i])
            cols.append(np.full(k, 0.5 / np.sqrt(k)) if k else np.zeros(0))
        b = WeightMatrix(dag, tuple(cols))
        metrics = [np.eye(len(dag.parents[i])) if dag.parents[i] else None
                   for i in range(dag.n_nodes)]
        lhs, rhs, holds = lemma3_check(b, b, metrics, beta=1.0)
        assert holds
        assert np.allclose(lhs, 0.0)

    def test_single_edge_identity_metric(self):
        dag = chain_dag(2)
        beta = 0.8
        b = WeightMatrix(dag, (np.zeros(0), np.array([0.1])))
        a = WeightMatrix(dag, (np.zeros(0), np.array([0.1 + beta])))
        metrics = [None, np.eye(1)]
        lhs, rhs, holds = lemma3_check(a, b, metrics, beta)
        assert holds
        assert lhs[0] == pytest.approx(beta)
        assert rhs[0] == pytest.approx(beta + 1.0)

    def test_precondition_violation_reported(self):
        dag = chain_dag(2)
        b = WeightMatrix(dag, (np.zeros(0), np.array([0.3])))
        a = WeightMatrix(dag, (np.zeros(0), np.array([0.9])))
        with pytest.raises(ValueError, match="exceeds beta"):
            lemma3_check(a, b, [None, np.eye(1)], beta=0.1)

    def test_metric_below_identity_rejected(self):
        dag = chain_dag(2)
        b = WeightMatrix(dag, (np.zeros(0), np.array([0.3])))
        with pytest.raises(ValueError, match="identity"):
            lemma3_check(b, b, [None, 0.5 * np.eye(1)], beta=1.0)

    def test_holds_on_random_admissible_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            a, b, metrics, beta = random_lemma3_instance(rng)
            _, _, holds = lemma3_check(a, b, metrics, beta)
            assert holds


class TestTheorem2Instance:
    @pytest.mark.parametrize("d,big_l", [(1, 1), (3, 2), (4, 2), (2, 3), (5, 2), (6, 3)])
    def test_gap_is_d_to_l_over_2(self, d, big_l):
        sem, _ = theorem2_instance(d, big_l)
        r = sem.dag.reward_node
        gap = expected_reward(compose_weights(sem, Intervention(1 << r)), sem.nu) - \
            expected_reward(compose_weights(sem, Intervention(0)), sem.nu)
        assert gap == pytest.approx(d ** (big_l / 2.0), abs=1e-9)

    def test_columns_have_unit_norm(self):
        sem, _ = theorem2_instance(3, 2)
        for i in sem.dag.parented_nodes:
            assert np.linalg.norm(sem.b_int[i]) == pytest.approx(1.0)

    def test_observational_reward_column_is_zero(self):
        sem, _ = theorem2_instance(3, 2)
        assert np.allclose(sem.b_obs[sem.dag.reward_node], 0.0)

    def test_noise_means(self):
        sem, _ = theorem2_instance(3, 2)
        assert np.allclose(sem.nu[:3], 1.0)
        assert np.allclose(sem.nu[3:], 0.0)

    def test_paired_schedule_is_zeroing(self):
        sem, factory = theorem2_instance(2, 2)
        s = factory(4, horizon=50)
        assert s.kind == "zeroing"
        assert s.targets == (sem.dag.reward_node,)


class TestBoundParams:
    def test_invariants(self):
        with pytest.raises(ValueError):
            BoundParams(d=0, L=1, N=2)
        with pytest.raises(ValueError):
            BoundParams(d=1, L=1, N=1)
        with pytest.raises(ValueError):
            BoundParams(d=1, L=1, N=2, c0=0.0)
