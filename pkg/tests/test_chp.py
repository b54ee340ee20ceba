import itertools
from fractions import Fraction

import numpy as np
import pytest

from drd.chp import (WeightEngine, chp, chp_table, hyperedge_weight, lattice_terms, objective_f,
                     power_sums, zeta_weight)
from drd.core import Evidence, make_instance
from drd.errors import InternalInconsistency
from drd.hypergraph import SharedRegionSet, build_index, subregion_masses
from drd.oracle import brute_force_edge_weight, brute_force_objective, random_instance, small_instance

from conftest import all_shared_instance


def _multiset_sum(values, d):
    total = 0.0
    for combo in itertools.combinations_with_replacement(range(len(values)), d):
        total += float(np.prod([values[i] for i in combo]))
    return total


def test_power_sums():
    assert power_sums([0.5, 0.5], 2) == [1.0, 0.5]
    assert power_sums([], 3) == [0, 0, 0]
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = list(rng.random(5))
        assert power_sums(v, 1)[0] == pytest.approx(sum(v))
    with pytest.raises(ValueError):
        power_sums([1.0], 0)


def test_chp_examples():
    assert chp([0.3, 0.9], 0) == 1
    assert chp([0.7], 4) == pytest.approx(0.7 ** 4)
    assert chp([0.5, 0.5], 2) == pytest.approx(0.75)
    assert chp([Fraction(1, 2), Fraction(1, 2)], 2) == Fraction(3, 4)


def test_chp_matches_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = list(rng.random(int(rng.integers(1, 6))))
        d = int(rng.integers(0, 5))
        assert chp(v, d) == pytest.approx(_multiset_sum(v, d), rel=1e-12)


def test_chp_recurrence_holds():
    v = [Fraction(1, 3), Fraction(1, 5), Fraction(2, 7)]
    table = chp_table(v, 5)
    ps = power_sums(v, 5)
    assert table[0] == 1
    for i in range(1, 6):
        assert table[i] == sum(table[i - j] * ps[j - 1] for j in range(1, i + 1)) / i


def test_zeta_weight_examples():
    assert zeta_weight((0, 1), [0.3, 0.2], 2) == pytest.approx(0.06)
    assert zeta_weight((0,), [0.4], 3) == pytest.approx(0.4 ** 3)
    assert zeta_weight(SharedRegionSet((0, 1), 0), [0.3, 0.2], 3) == pytest.approx(0.03)
    # multisets of size 3 over {a, b} containing both: aab, abb
    assert zeta_weight((0, 1), [Fraction(3, 10), Fraction(2, 10)], 3) == Fraction(3, 100)


def test_all_shared_weight_is_zero():
    inst = all_shared_instance()
    idx = build_index(inst)
    assert hyperedge_weight(subregion_masses(inst, idx), idx) == 0


def test_overlap_weight_closed_form(overlap):
    idx = build_index(overlap)
    p = [Fraction(1, 5), Fraction(3, 10), Fraction(1, 2)]
    single = sum(x * chp([x], 2) for x in p)
    pairs = p[0] * p[1] * chp(p[:2], 1) + p[1] * p[2] * chp(p[1:], 1)
    assert hyperedge_weight(p, idx) == chp(p, 3) - single - pairs
    # edges are the multisets holding both outer subregions
    assert hyperedge_weight(p, idx) == p[0] * p[2] * (p[0] + p[1] + p[2])
    third = [Fraction(1, 3)] * 3
    assert hyperedge_weight(third, idx) == Fraction(1, 9)
    assert brute_force_edge_weight(third, [(0,), (0, 1), (1,)], 3) == Fraction(1, 9)


def test_random_weights_match_enumeration():
    for seed in range(100):
        inst = small_instance(seed)
        idx = build_index(inst)
        sigs = [g.signature for g in idx.subregions]
        exact = subregion_masses(inst, idx, exact=True)
        assert hyperedge_weight(exact, idx) == brute_force_edge_weight(exact, sigs, idx.k)
        fl = subregion_masses(inst, idx)
        assert abs(hyperedge_weight(list(fl), idx) - brute_force_edge_weight(list(fl), sigs, idx.k)) <= 1e-9


def test_engine_methods_agree():
    for seed in range(40):
        inst = random_instance(seed)
        idx = build_index(inst)
        rng = np.random.default_rng(seed)
        M = rng.random((6, idx.num_subregions)) * (rng.random((6, idx.num_subregions)) < 0.7)
        z = WeightEngine(idx, "zeta").weights(M)
        lat = WeightEngine(idx, "lattice").weights(M)
        scalar = [hyperedge_weight(list(row), idx) for row in M]
        assert np.allclose(z, lat, rtol=0, atol=1e-12)
        assert np.allclose(z, scalar, rtol=0, atol=1e-12)
        ex = [Fraction(int(x * 1000), 1000) for x in M[0]]
        capped = build_index(inst, max_zeta_sets=0)
        assert hyperedge_weight(ex, idx) == hyperedge_weight(ex, capped)


def test_lattice_terms_cover_overlap(overlap):
    terms = lattice_terms(build_index(overlap))
    assert terms == [(-1, (1,)), (1, (0, 1)), (1, (1, 2))]


def test_homogeneity_and_zero_absorption():
    for seed in range(30):
        inst = small_instance(seed)
        idx = build_index(inst)
        m = list(subregion_masses(inst, idx, exact=True))
        c = Fraction(3, 2)
        assert hyperedge_weight([c * x for x in m], idx) == c ** idx.k * hyperedge_weight(m, idx)
        g = seed % idx.num_subregions
        m0 = list(m)
        m0[g] = Fraction(0)
        keep = [i for i in range(idx.num_subregions) if i != g]
        sigs = [idx.subregions[i].signature for i in keep]
        assert hyperedge_weight(m0, idx) == brute_force_edge_weight([m[i] for i in keep], sigs, idx.k)


def test_negative_weight_raises():
    class Fake:
        k = 2
        zeta_sets = (SharedRegionSet((0,), 0), SharedRegionSet((1,), 0), SharedRegionSet((0, 1), 0),
                     SharedRegionSet((0, 1), 1))
    with pytest.raises(InternalInconsistency):
        hyperedge_weight([0.5, 0.5], Fake())
    with pytest.raises(InternalInconsistency):
        hyperedge_weight([Fraction(1, 2), Fraction(1, 2)], Fake())


def test_objective_examples(overlap):
    idx = build_index(overlap)
    assert objective_f(overlap, Evidence(), idx, exact=True) == 0
    total = hyperedge_weight(subregion_masses(overlap, idx, exact=True), idx)
    assert objective_f(overlap, Evidence(((0, 0),)), idx, exact=True) == total


def test_objective_matches_edge_oracle_along_chains():
    for seed in range(40):
        inst = small_instance(seed)
        idx = build_index(inst)
        rng = np.random.default_rng(seed)
        h = int(rng.integers(inst.num_hypotheses))
        ev = Evidence()
        prev = Fraction(0)
        for t in rng.permutation(inst.num_tests):
            ev = Evidence(ev.pairs + ((int(t), int(inst.outcomes[h, t])),))
            f = objective_f(inst, ev, idx, exact=True)
            assert f == brute_force_objective(inst, ev, idx.k)
            assert f >= prev
            prev = f
