import itertools

import numpy as np
import pytest

from drd.core import Evidence, make_instance
from drd.errors import DRDError, ValidationError
from drd.hypergraph import (build_index, cardinality_k, compute_subregions, enumerate_shared_sets,
                            is_hyperedge, solved_iff_edges_cut)
from drd.oracle import group_subregions, random_instance, small_instance

from conftest import all_shared_instance, overlap_instance


def test_overlap_has_three_subregions(overlap):
    subs = compute_subregions(overlap)
    assert [g.signature for g in subs] == [(0,), (0, 1), (1,)]
    assert [g.members for g in subs] == [(0,), (1,), (2,)]


def test_disjoint_regions_one_subregion_each():
    inst = make_instance([1] * 4, np.zeros((4, 1), dtype=int), [[0], [1], [2], [3]])
    assert len(compute_subregions(inst)) == 4


def test_grouping_matches_signature_hash():
    for seed in range(50):
        inst = random_instance(seed)
        subs = compute_subregions(inst)
        sigs, assign = group_subregions(inst)
        ours = {frozenset(g.members) for g in subs}
        theirs = {frozenset(h for h, a in enumerate(assign) if a == i) for i in range(len(sigs))}
        assert ours == theirs
        assert [g.signature for g in subs] == sorted(g.signature for g in subs)
        assert sum(g.mass_exact for g in subs) == 1


def test_k_two_regions_per_hypothesis():
    # every hypothesis in exactly two of three regions, each region with two subregions
    inst = make_instance([1] * 3, [[0], [1], [2]], [[0, 1], [1, 2], [0, 2]], arities=[3])
    assert cardinality_k(inst) == 3


def test_k_degree_six():
    # one hypothesis in all six regions plus one hypothesis per pair of regions:
    # degree 6, and each region holds six distinct subregions
    pairs = [(r, s) for r in range(6) for s in range(r + 1, 6)]
    regions = [[0] + [1 + i for i, p in enumerate(pairs) if r in p] for r in range(6)]
    n = 1 + len(pairs)
    inst = make_instance([1] * n, np.arange(n)[:, None], regions, arities=[n])
    assert cardinality_k(inst) == 7


def test_k_partition_is_two():
    inst = make_instance([1] * 4, [[0], [1], [0], [1]], [[0, 1], [2, 3]])
    assert cardinality_k(inst) == 2


def test_k_override_below_formula_rejected(overlap):
    with pytest.raises(ValidationError):
        build_index(overlap, k=2)
    assert build_index(overlap, k=5).k == 5


def test_is_hyperedge_overlap(overlap):
    idx = build_index(overlap)
    assert idx.k == 3
    assert is_hyperedge((0, 1, 2), idx)
    assert not is_hyperedge((0, 0, 1), idx)
    assert not is_hyperedge((2, 2, 2), idx)
    edges = [m for m in itertools.combinations_with_replacement(range(3), 3) if is_hyperedge(m, idx)]
    # exactly the multisets holding both outer subregions
    assert edges == [(0, 0, 2), (0, 1, 2), (0, 2, 2)]
    with pytest.raises(DRDError):
        is_hyperedge((0, 2), idx)


def test_is_hyperedge_disjoint():
    inst = make_instance([1, 1], [[0], [1]], [[0], [1]])
    idx = build_index(inst)
    assert idx.k == 2 and is_hyperedge((0, 1), idx)


def test_overlap_shared_sets(overlap):
    idx = build_index(overlap)
    found = {(z.members, z.witness_region) for z in idx.zeta_sets}
    assert found == {((0,), 0), ((1,), 0), ((2,), 1), ((0, 1), 0), ((1, 2), 1)}


def test_disjoint_shared_sets_are_singletons():
    inst = make_instance([1] * 3, [[0], [1], [2]], [[0], [1], [2]], arities=[3])
    assert all(len(z) == 1 for z in build_index(inst).zeta_sets)


def test_shared_sets_match_unpruned_scan():
    for seed in range(100):
        inst = small_instance(seed)
        idx = build_index(inst)
        masks = idx.sig_masks
        expected = set()
        for m in range(1, idx.k + 1):
            for combo in itertools.combinations(range(idx.num_subregions), m):
                common = -1
                for g in combo:
                    common &= masks[g]
                if common:
                    expected.add(combo)
        got = [z.members for z in idx.zeta_sets]
        assert len(got) == len(set(got)) and set(got) == expected
        assert got == sorted(got, key=lambda z: (len(z), z))
        for z in idx.zeta_sets:
            assert all(idx.subregions[g].signature.count(z.witness_region) for g in z.members)
            for sub in itertools.combinations(z.members, len(z.members) - 1):
                assert not sub or sub in expected


def test_solved_iff_edges_cut_examples(overlap):
    idx = build_index(overlap)
    assert solved_iff_edges_cut(overlap, Evidence(((0, 0),)), idx) == (True, True)
    assert solved_iff_edges_cut(overlap, Evidence(((1, 0),)), idx) == (True, True)
    assert solved_iff_edges_cut(overlap, Evidence(), idx) == (False, False)
    shared = all_shared_instance()
    assert solved_iff_edges_cut(shared, Evidence(), build_index(shared)) == (True, True)


def test_solved_iff_edges_cut_random_states():
    rng = np.random.default_rng(0)
    for seed in range(200):
        inst = small_instance(seed, max_subregions=10, max_k=5)
        idx = build_index(inst)
        h = int(rng.integers(inst.num_hypotheses))
        tests = rng.permutation(inst.num_tests)[: int(rng.integers(inst.num_tests + 1))]
        ev = Evidence(tuple((int(t), int(inst.outcomes[h, t])) for t in tests))
        a, b = solved_iff_edges_cut(inst, ev, idx)
        assert a == b
        assert solved_iff_edges_cut(inst, ev, idx, exact=True) == (a, b)


def test_lattice_fallback_matches_enumeration():
    for seed in range(30):
        inst = random_instance(seed)
        full = build_index(inst)
        capped = build_index(inst, max_zeta_sets=0)
        assert capped.zeta_sets is None
        ev = Evidence(((0, int(inst.outcomes[0, 0])),))
        assert solved_iff_edges_cut(inst, ev, full, exact=True) == solved_iff_edges_cut(inst, ev, capped, exact=True)
