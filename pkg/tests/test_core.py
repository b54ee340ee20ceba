from fractions import Fraction

import numpy as np
import pytest

from drd.core import (Evidence, apply_test, consistent_hypotheses, consistent_mask, instance_digest,
                      is_solved, make_instance, posterior, validate_instance, wrap_uncovered)
from drd.errors import ContradictoryEvidence, DuplicateTest, ValidationError
from drd.oracle import random_instance


def test_minimal_instance_has_empty_report():
    inst = make_instance([1, 1], [[0], [1]], [[0, 1]])
    rep = validate_instance(inst)
    assert rep.ok and rep.issues == []


def test_zero_weight_rejected():
    with pytest.raises(ValidationError) as err:
        make_instance([1, 0], [[0], [1]], [[0, 1]])
    assert "zero prior weight" in err.value.report.codes()


def test_negative_weight_rejected():
    with pytest.raises(ValidationError):
        make_instance([1, -1], [[0], [1]], [[0, 1]])


def test_uncovered_strict_and_lenient():
    with pytest.raises(ValidationError) as err:
        make_instance([1, 1], [[0], [1]], [[0]])
    assert "uncovered hypothesis" in err.value.report.codes()
    inst = make_instance([1, 1], [[0], [1]], [[0]], coverage="lenient")
    rep = validate_instance(inst, strict=False)
    assert rep.ok and "uncovered hypothesis" in [w.code for w in rep.warnings]


def test_wrap_adds_singleton_regions():
    inst = make_instance([1, 1, 1], [[0], [1], [1]], [[0]], coverage="wrap")
    assert inst.num_regions == 3
    assert inst.regions[1] == frozenset({1}) and inst.regions[2] == frozenset({2})
    assert inst.uncovered() == []
    assert wrap_uncovered(inst).num_regions == 3


def test_out_of_range_outcome_rejected():
    with pytest.raises(ValidationError) as err:
        make_instance([1, 1], [[0], [2]], [[0, 1]], arities=[2])
    assert "out-of-range outcome" in err.value.report.codes()


def test_empty_region_is_warning():
    inst = make_instance([1, 1], [[0], [1]], [[0, 1], []])
    rep = validate_instance(inst)
    assert rep.ok and [w.code for w in rep.warnings] == ["empty region"]


def test_malformed_matrix_is_error():
    with pytest.raises(ValidationError):
        make_instance([1, 1, 1], [[0], [1]], [[0, 1]])


def test_prior_normalized_exactly():
    inst = make_instance([1, 2, 7], [[0], [1], [1]], [[0, 1, 2]])
    assert inst.weights == (Fraction(1, 10), Fraction(1, 5), Fraction(7, 10))
    assert abs(inst.prior.sum() - 1) < 1e-12


def test_empty_evidence_keeps_everything(overlap):
    vs = consistent_hypotheses(overlap, Evidence())
    assert vs.consistent == frozenset({0, 1, 2}) and vs.total_mass == pytest.approx(1.0)


def test_single_pair_filters():
    inst = make_instance([1, 1], [[0], [1]], [[0], [1]])
    assert consistent_hypotheses(inst, Evidence(((0, 0),))).consistent == frozenset({0})


def test_contradictory_evidence():
    inst = make_instance([1, 1], [[0, 0], [1, 1]], [[0], [1]])
    with pytest.raises(ContradictoryEvidence):
        consistent_hypotheses(inst, Evidence(((0, 0), (1, 1))))


def test_consistent_matches_filter_loop():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        out = rng.integers(0, 3, size=(20, 10))
        inst = make_instance(rng.integers(1, 10, size=20), out, [list(range(20))], arities=[3] * 10)
        h = int(rng.integers(20))
        tests = rng.choice(10, size=3, replace=False)
        ev = Evidence(tuple((int(t), int(out[h, t])) for t in tests))
        expected = {g for g in range(20) if all(out[g, t] == o for t, o in ev.pairs)}
        vs = consistent_hypotheses(inst, ev)
        assert vs.consistent == expected
        assert vs.total_mass == pytest.approx(sum(float(inst.weights[g]) for g in expected))


def test_posterior_examples():
    inst = make_instance([1, 1, 1, 1], [[0], [0], [1], [1]], [[0, 1, 2, 3]])
    assert np.allclose(posterior(inst, Evidence()), inst.prior)
    assert np.allclose(posterior(inst, Evidence(((0, 0),))), [0.5, 0.5, 0, 0])
    inst = make_instance([Fraction(1, 10), Fraction(2, 10), Fraction(7, 10)], [[0], [0], [1]], [[0, 1, 2]])
    p = posterior(inst, Evidence(((0, 0),)), exact=True)
    assert list(p) == [Fraction(1, 3), Fraction(2, 3), 0]
    assert np.allclose(posterior(inst, Evidence(((0, 0),))), [1 / 3, 2 / 3, 0])


def test_posterior_support_is_version_space():
    for seed in range(20):
        inst = random_instance(seed)
        h = seed % inst.num_hypotheses
        ev = Evidence(((0, int(inst.outcomes[h, 0])),))
        p = posterior(inst, ev)
        assert set(np.flatnonzero(p)) == set(consistent_hypotheses(inst, ev).consistent)
        assert abs(p.sum() - 1) < 1e-12


def test_is_solved_examples():
    both = make_instance([1, 1], [[0], [1]], [[0, 1], [0, 1]])
    assert is_solved(both, Evidence()) == 0
    apart = make_instance([1, 1], [[0], [1]], [[0], [1]])
    assert is_solved(apart, Evidence()) is None
    assert is_solved(apart, Evidence(((0, 1),))) == 1


def test_single_hypothesis_is_solved_under_strict_coverage():
    for seed in range(30):
        inst = random_instance(seed)
        h = seed % inst.num_hypotheses
        ev = Evidence(tuple((t, int(inst.outcomes[h, t])) for t in range(inst.num_tests)))
        mask = consistent_mask(inst, ev)
        if mask.sum() == 1:
            r = is_solved(inst, ev)
            assert r is not None and h in inst.regions[r]


def test_apply_test_value_semantics():
    e0 = Evidence()
    e1 = apply_test(e0, 0, 1)
    assert e0.pairs == () and e1.pairs == ((0, 1),)
    e3 = apply_test(apply_test(e1, 2, 0), 1, 1)
    assert e3.pairs == ((0, 1), (2, 0), (1, 1))
    with pytest.raises(DuplicateTest):
        apply_test(e3, 2, 1)


def test_order_independence_and_monotone_version_space():
    for seed in range(30):
        inst = random_instance(seed)
        rng = np.random.default_rng(seed)
        h = int(rng.integers(inst.num_hypotheses))
        pairs = [(int(t), int(inst.outcomes[h, t])) for t in rng.permutation(inst.num_tests)]
        prev = np.ones(inst.num_hypotheses, dtype=bool)
        solved_before = False
        for i in range(1, len(pairs) + 1):
            ev = Evidence(tuple(pairs[:i]))
            mask = consistent_mask(inst, ev)
            assert not (mask & ~prev).any()
            shuffled = Evidence(tuple(pairs[:i][::-1]))
            assert (consistent_mask(inst, shuffled) == mask).all()
            assert is_solved(inst, shuffled) == is_solved(inst, ev)
            solved = is_solved(inst, ev) is not None
            assert solved or not solved_before
            solved_before = solved
            prev = mask


def test_digest_is_stable():
    a, b = random_instance(3), random_instance(3)
    assert instance_digest(a) == instance_digest(b)
    assert instance_digest(a) != instance_digest(random_instance(4))
