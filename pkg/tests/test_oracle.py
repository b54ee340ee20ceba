import math
from fractions import Fraction

import pytest

from drd.core import make_instance
from drd.errors import InfeasiblePolicy, LimitExceeded
from drd.oracle import (OracleReport, brute_force_edge_weight, check_adaptive_properties,
                        check_reductions, check_theorem1, check_theorem3, check_weight_equivalence,
                        optimal_policy_cost, random_instance, greedy_bound)
from drd.policies import expected_cost, make_policy

from conftest import all_shared_instance, overlap_instance


def test_report_passes_iff_no_counterexamples():
    rep = OracleReport("x")
    assert rep.passed
    rep.counterexamples.append({"seed": 0})
    assert not rep.passed and rep.summary().startswith("FAIL x")


def test_brute_force_all_shared_is_zero():
    assert brute_force_edge_weight([0.2, 0.3, 0.5], [(0,), (0,), (0,)], 3) == 0


def test_brute_force_overlap_hand_count():
    third = [Fraction(1, 3)] * 3
    # three multisets: {g1,g1,g3}, {g1,g3,g3}, {g1,g2,g3}
    assert brute_force_edge_weight(third, [(0,), (0, 1), (1,)], 3) == 3 * Fraction(1, 27)


def test_brute_force_limits():
    with pytest.raises(LimitExceeded):
        brute_force_edge_weight([0.1] * 11, [(i,) for i in range(11)], 2)
    with pytest.raises(LimitExceeded):
        brute_force_edge_weight([0.5, 0.5], [(0,), (1,)], 6)


def test_optimal_cost_examples(orthogonal):
    assert optimal_policy_cost(all_shared_instance()) == 0
    assert optimal_policy_cost(make_instance([1, 1], [[0], [1]], [[0], [1]])) == 1
    assert optimal_policy_cost(orthogonal) == 2


def test_optimal_cost_limits_and_infeasible():
    with pytest.raises(LimitExceeded):
        optimal_policy_cost(make_instance([1] * 11, [[i % 2] for i in range(11)], [list(range(11))]))
    with pytest.raises(InfeasiblePolicy):
        optimal_policy_cost(make_instance([1, 1], [[0], [0]], [[0], [1]]))


def test_optimal_never_above_greedy():
    for seed in range(30):
        inst = random_instance(seed, n_hypotheses=(4, 8), n_tests=(3, 6), feasible=True)
        assert optimal_policy_cost(inst) <= expected_cost(inst, make_policy("hec", inst, exact=True)).expected_cost_exact


def test_solved_iff_cut_small_run():
    rep = check_theorem1(range(10), walks_per_instance=5)
    assert rep.passed and rep.checks > 0


def test_overlap_states():
    from drd.core import Evidence
    from drd.hypergraph import build_index, solved_iff_edges_cut

    inst = overlap_instance()
    idx = build_index(inst)
    # test 0 answered 0 leaves only the left hypothesis, test 1 answered 0 removes the right one
    assert solved_iff_edges_cut(inst, Evidence(((1, 0),)), idx) == (True, True)
    assert solved_iff_edges_cut(inst, Evidence(), idx) == (False, False)


def test_adaptive_small_run_both_modes():
    assert check_adaptive_properties(range(10), chains=10).passed
    assert check_adaptive_properties(range(10), chains=10, exact=True).passed


def test_adaptive_single_hypothesis_vacuous(monkeypatch):
    import drd.oracle as oracle

    single = make_instance([1], [[0, 1]], [[0]], arities=[2, 2])
    monkeypatch.setattr(oracle, "random_instance", lambda seed: single)
    rep = oracle.check_adaptive_properties(range(3), chains=5, exact=True)
    assert rep.passed and rep.max_deviation == 0


def test_greedy_bound_small_run_and_zero_cost():
    rep = check_theorem3(range(20))
    assert rep.passed and rep.details["worst_ratio"] >= 1
    inst = all_shared_instance()
    c = expected_cost(inst, make_policy("hec", inst)).expected_cost
    assert c == 0 <= greedy_bound(2, min(inst.weights), optimal_policy_cost(inst))


def test_greedy_bound_with_uniform_prior(orthogonal):
    bound = greedy_bound(2, Fraction(1, 4), optimal_policy_cost(orthogonal))
    assert bound == pytest.approx((2 * math.log(4) + 1) * 2)
    assert expected_cost(orthogonal, make_policy("hec", orthogonal)).expected_cost <= bound


def test_weight_equivalence_small_run():
    assert check_weight_equivalence(range(20)).passed
    rep = check_weight_equivalence(range(20), exact=True)
    assert rep.passed and rep.max_deviation == 0


def test_reductions_small_run():
    ec2, gbs = check_reductions(range(10))
    assert ec2.passed and gbs.passed and ec2.checks > 0 and gbs.checks > 0
