"""Brute-force oracles and property checks on small random instances.

The oracles here avoid the code they certify: subregions are regrouped
locally, hyperedges come from explicit multiset enumeration, and the optimal
policy from exhaustive search over version spaces.  Only
:class:`~drd.core.ProblemInstance` is shared.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Evidence, ProblemInstance, apply_test, consistent_mask, make_instance
from .errors import InfeasiblePolicy, LimitExceeded

MAX_BRUTE_SUBREGIONS = 10
MAX_BRUTE_K = 5
MAX_SEARCH_HYPOTHESES = 10
MAX_SEARCH_TESTS = 8
FLOAT_TOL = 1e-9


@dataclass
class OracleReport:
    name: str
    checks: int = 0
    max_deviation: float = 0.0
    counterexamples: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def record(self, deviation=0.0):
        self.checks += 1
        self.max_deviation = max(self.max_deviation, float(deviation))

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (f"{status} {self.name}: checks={self.checks} "
                f"max_deviation={self.max_deviation:.3e} counterexamples={len(self.counterexamples)}")
        extra = " ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
        return line + (" " + extra if extra else "")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "max_deviation": self.max_deviation,
            "counterexamples": self.counterexamples[:20],
            "details": self.details,
        }


# ---------------------------------------------------------------- instances

def random_instance(seed: int, n_hypotheses=(4, 10), n_tests=(3, 8), n_regions=(2, 5),
                    arities=(2, 3), overlap=0.3, weight_range=(1, 10), uniform=False,
                    partition=False, singleton=False, feasible=False) -> ProblemInstance:
    """Seeded random instance for property checks.

    Every hypothesis gets one primary region plus each other region with
    probability ``overlap``.  ``partition`` and ``singleton`` produce disjoint
    regions; ``feasible`` resamples outcomes until the full test set can
    always solve the instance.
    """
    rng = np.random.default_rng(seed)
    n_h = int(rng.integers(n_hypotheses[0], n_hypotheses[1] + 1))
    n_t = int(rng.integers(n_tests[0], n_tests[1] + 1))
    n_r = n_h if singleton else int(rng.integers(n_regions[0], n_regions[1] + 1))
    ar = rng.choice(np.asarray(arities), size=n_t)
    if singleton:
        member = np.eye(n_h, dtype=bool)
    else:
        member = np.zeros((n_h, n_r), dtype=bool)
        member[np.arange(n_h), rng.integers(n_r, size=n_h)] = True
        if not partition:
            member |= rng.random((n_h, n_r)) < overlap
    regions = [list(np.flatnonzero(member[:, r])) for r in range(n_r)]
    if uniform:
        weights = [1] * n_h
    else:
        weights = [int(w) for w in rng.integers(weight_range[0], weight_range[1] + 1, size=n_h)]
    for _ in range(1000):
        outcomes = np.stack([rng.integers(0, a, size=n_h) for a in ar], axis=1)
        if not feasible or _fully_solvable(outcomes, member):
            break
    else:
        raise RuntimeError("could not sample a feasible instance")
    return make_instance(weights, outcomes, regions, arities=[int(a) for a in ar],
                         metadata={"generator": "random", "seed": int(seed)})


def _fully_solvable(outcomes, member) -> bool:
    classes: dict = {}
    for h, row in enumerate(map(tuple, outcomes)):
        classes.setdefault(row, []).append(h)
    return all(member[hs].all(axis=0).any() for hs in classes.values())


# ------------------------------------------------------------ edge weights

def _shares_region(regsets: Sequence[frozenset]) -> bool:
    common = None
    for s in regsets:
        common = set(s) if common is None else common & s
        if not common:
            return False
    return bool(common)


def brute_force_edge_weight(masses: Sequence, memberships: Sequence[Iterable[int]], k: int):
    """Sum of mass products over every k-multiset of subregions no region contains."""
    if len(masses) > MAX_BRUTE_SUBREGIONS or k > MAX_BRUTE_K:
        raise LimitExceeded(f"brute force limited to {MAX_BRUTE_SUBREGIONS} subregions and k <= {MAX_BRUTE_K}")
    regs = [frozenset(m) for m in memberships]
    exact = any(isinstance(v, Fraction) for v in masses)
    total = Fraction(0) if exact else 0.0
    for combo in itertools.combinations_with_replacement(range(len(masses)), k):
        if _shares_region([regs[g] for g in set(combo)]):
            continue
        prod = Fraction(1) if exact else 1.0
        for g in combo:
            prod *= masses[g]
        total += prod
    return total


def group_subregions(instance: ProblemInstance) -> tuple:
    """(signatures, hypothesis -> subregion) by a hash-by-signature pass."""
    sig_of = {}
    member = [[] for _ in range(instance.num_hypotheses)]
    for r, hs in enumerate(instance.regions):
        for h in hs:
            member[h].append(r)
    assign = []
    for h in range(instance.num_hypotheses):
        key = frozenset(member[h])
        if key not in sig_of:
            sig_of[key] = len(sig_of)
        assign.append(sig_of[key])
    sigs = [None] * len(sig_of)
    for key, i in sig_of.items():
        sigs[i] = key
    return sigs, assign


def brute_force_masses(instance: ProblemInstance, assign, n_sub, keep=None, exact=True):
    zero = Fraction(0) if exact else 0.0
    out = [zero] * n_sub
    for h in range(instance.num_hypotheses):
        if keep is None or keep[h]:
            out[assign[h]] += instance.weights[h] if exact else float(instance.weights[h])
    return out


def brute_force_objective(instance: ProblemInstance, evidence: Evidence, k: int, exact=True):
    """Mass of hyperedges cut by the evidence, from explicit edge enumeration."""
    sigs, assign = group_subregions(instance)
    keep = [all(instance.outcomes[h, t] == o for t, o in evidence.pairs)
            for h in range(instance.num_hypotheses)]
    full = brute_force_edge_weight(brute_force_masses(instance, assign, len(sigs), exact=exact), sigs, k)
    rest = brute_force_edge_weight(brute_force_masses(instance, assign, len(sigs), keep, exact), sigs, k)
    return full - rest


def brute_force_gain(instance: ProblemInstance, evidence: Evidence, test: int, k: int):
    """Expected cut mass by summing over hypotheses, exactly as defined."""
    keep = [all(instance.outcomes[h, t] == o for t, o in evidence.pairs)
            for h in range(instance.num_hypotheses)]
    total = sum(w for w, m in zip(instance.weights, keep) if m)
    base = brute_force_objective(instance, evidence, k)
    out = Fraction(0)
    for h in range(instance.num_hypotheses):
        if keep[h]:
            ext = Evidence(evidence.pairs + ((test, int(instance.outcomes[h, test])),))
            out += instance.weights[h] / total * (brute_force_objective(instance, ext, k) - base)
    return out


# --------------------------------------------------------- optimal policy

def optimal_policy_cost(instance: ProblemInstance, max_hypotheses=MAX_SEARCH_HYPOTHESES,
                        max_tests=MAX_SEARCH_TESTS) -> Fraction:
    """Exact minimum expected number of tests, by memoized exhaustive search."""
    n, T = instance.num_hypotheses, instance.num_tests
    if n > max_hypotheses or T > max_tests:
        raise LimitExceeded(f"exhaustive search limited to {max_hypotheses} hypotheses and {max_tests} tests")
    regions = [sum(1 << h for h in r) for r in instance.regions]
    w = instance.weights
    out = instance.outcomes
    memo: dict = {}

    def mass(V):
        return sum(w[h] for h in range(n) if V >> h & 1)

    def cost(V):
        if V in memo:
            return memo[V]
        if any(V & ~r == 0 for r in regions):
            memo[V] = Fraction(0)
            return memo[V]
        best = None
        total = mass(V)
        for t in range(T):
            parts: dict = {}
            for h in range(n):
                if V >> h & 1:
                    parts[int(out[h, t])] = parts.get(int(out[h, t]), 0) | (1 << h)
            if len(parts) < 2:
                continue
            c = 1 + sum(mass(P) / total * cost(P) for P in parts.values())
            if best is None or c < best:
                best = c
        if best is None:
            raise InfeasiblePolicy("infeasible instance: an unsolved version space admits no informative test")
        memo[V] = best
        return best

    return cost((1 << n) - 1)


def greedy_bound(k: int, p_min, optimal_cost) -> float:
    return (k * math.log(1 / float(p_min)) + 1) * float(optimal_cost)


# ------------------------------------------------- baseline objectives

def ec2_gain(instance: ProblemInstance, classes: Sequence[int], mask, test: int) -> Fraction:
    """Edge-cutting gain with edges between hypotheses of different classes."""
    w = instance.weights

    def weight(hs):
        return sum((w[a] * w[b] for a, b in itertools.combinations(hs, 2) if classes[a] != classes[b]),
                   Fraction(0))

    hs = [int(h) for h in np.flatnonzero(mask)]
    N = sum(w[h] for h in hs)
    groups: dict = {}
    for h in hs:
        groups.setdefault(int(instance.outcomes[h, test]), []).append(h)
    return weight(hs) - sum(sum(w[h] for h in g) / N * weight(g) for g in groups.values())


def gbs_gain(instance: ProblemInstance, mask, test: int) -> Fraction:
    """Expected prior mass eliminated by a test."""
    w = instance.weights
    hs = [int(h) for h in np.flatnonzero(mask)]
    N = sum(w[h] for h in hs)
    n_o: dict = {}
    for h in hs:
        o = int(instance.outcomes[h, test])
        n_o[o] = n_o.get(o, 0) + w[h]
    return sum(n / N * (N - n) for n in n_o.values())


def _argmax_set(values: dict) -> set:
    if not values:
        return set()
    top = max(values.values())
    return {t for t, v in values.items() if v == top}


# ----------------------------------------------------------------- checks

def _walk_states(instance, rng, walks):
    for _ in range(walks):
        h = int(rng.integers(instance.num_hypotheses))
        order = rng.permutation(instance.num_tests)
        ev = Evidence()
        yield h, ev
        for t in order:
            ev = apply_test(ev, int(t), int(instance.outcomes[h, t]))
            yield h, ev


def check_theorem1(seeds: Iterable[int], walks_per_instance: int = 20, exact: bool = False,
                   k: Optional[int] = None) -> OracleReport:
    """Region containment and 'no hyperedge left' agree on random evidence walks."""
    from .hypergraph import build_index, solved_iff_edges_cut

    rep = OracleReport("solved-iff-cut" + ("-rational" if exact else "-float"))
    for seed in seeds:
        inst = random_instance(seed)
        idx = build_index(inst, k=k)
        rng = np.random.default_rng(10_000 + seed)
        seen = set()
        for h, ev in _walk_states(inst, rng, walks_per_instance):
            a, b = solved_iff_edges_cut(inst, ev, idx, exact=exact)
            rep.record(0.0 if a == b else 1.0)
            key = ev.key()
            if a != b and key not in seen:
                seen.add(key)
                rep.counterexamples.append({"seed": seed, "evidence": list(ev.pairs),
                                            "solved_direct": a, "edges_empty": b})
    return rep


def check_adaptive_properties(seeds: Iterable[int], chains: int = 50, exact: bool = False,
                              k: Optional[int] = None) -> OracleReport:
    """Diminishing marginal gains along evidence chains and monotone objective."""
    from .hypergraph import build_index
    from .policies import GainEvaluator

    tol = 0 if exact else FLOAT_TOL
    rep = OracleReport("adaptive-submodularity" + ("-rational" if exact else "-float"))
    mono_checks = 0
    for seed in seeds:
        inst = random_instance(seed)
        idx = build_index(inst, k=k)
        ev_ = GainEvaluator(inst, idx, exact=exact)
        rng = np.random.default_rng(20_000 + seed)
        gains: dict = {}
        weights: dict = {}

        def gain(mask, t):
            key = (mask.tobytes(), t)
            if key not in gains:
                gains[key] = ev_.gain(mask, t)
            return gains[key]

        def weight(mask):
            key = mask.tobytes()
            if key not in weights:
                weights[key] = ev_.weight(mask)
            return weights[key]

        for _ in range(chains):
            h = int(rng.integers(inst.num_hypotheses))
            order = [int(t) for t in rng.permutation(inst.num_tests)]
            a, b = sorted(int(x) for x in rng.integers(0, inst.num_tests + 1, size=2))
            pairs = [(t, int(inst.outcomes[h, t])) for t in order]
            masks = [consistent_mask(inst, Evidence(pairs[:i])) for i in range(len(pairs) + 1)]
            # surviving weight never increases: the objective never decreases
            for i in range(len(masks) - 1):
                drop = weight(masks[i + 1]) - weight(masks[i])
                mono_checks += 1
                if drop > tol:
                    rep.counterexamples.append({"seed": seed, "kind": "monotone", "hypothesis": h,
                                                "evidence": pairs[:i + 1], "violation": float(drop)})
            S, S2 = masks[a], masks[b]
            for t in order[b:]:
                diff = gain(S2, t) - gain(S, t)
                rep.record(max(diff, 0))
                if diff > tol:
                    rep.counterexamples.append({"seed": seed, "kind": "submodular", "hypothesis": h,
                                                "S": pairs[:a], "S_prime": pairs[:b], "test": t,
                                                "violation": float(diff)})
    rep.details["monotone_checks"] = mono_checks
    return rep


def check_theorem3(seeds: Iterable[int], exact: bool = True, n_hypotheses=(4, 8),
                   n_tests=(3, 6), k: Optional[int] = None) -> OracleReport:
    """Greedy expected cost within (k ln(1/p_min) + 1) of the optimum."""
    from .policies import expected_cost, make_policy

    rep = OracleReport("greedy-bound")
    worst = 0.0
    for seed in seeds:
        inst = tiny_instance(seed, n_hypotheses, n_tests)
        opt = optimal_policy_cost(inst)
        pol = make_policy("hec", inst, exact=exact, k=k)
        c = expected_cost(inst, pol).expected_cost_exact
        p_min = min(inst.weights)
        bound = greedy_bound(pol.k, p_min, opt)
        ratio = float(c / opt) if opt else (0.0 if c == 0 else math.inf)
        worst = max(worst, ratio)
        excess = float(c) - bound
        rep.record(max(excess, 0.0))
        if excess > 1e-12:
            rep.counterexamples.append({"seed": seed, "hec_cost": str(c), "optimal": str(opt),
                                        "bound": bound, "k": pol.k})
    rep.details["worst_ratio"] = round(worst, 6)
    return rep


def check_weight_equivalence(seeds: Iterable[int], exact: bool = False, max_subregions=8,
                             max_k=4, k: Optional[int] = None) -> OracleReport:
    """Shared-set subtraction equals explicit multiset enumeration."""
    from .chp import WeightEngine, hyperedge_weight
    from .hypergraph import build_index, subregion_masses

    rep = OracleReport("weight-oracle" + ("-rational" if exact else "-float"))
    for seed in seeds:
        inst = small_instance(seed, max_subregions, max_k)
        idx = build_index(inst, k=k)
        sigs = [g.signature for g in idx.subregions]
        rng = np.random.default_rng(30_000 + seed)
        masks = [np.ones(inst.num_hypotheses, dtype=bool), rng.random(inst.num_hypotheses) < 0.6]
        engine = None if exact else WeightEngine(idx)
        for mask in masks:
            masses = subregion_masses(inst, idx, mask, exact=exact)
            oracle = brute_force_edge_weight(masses, sigs, idx.k)
            got = hyperedge_weight(masses, idx)
            devs = [abs(got - oracle)]
            if engine is not None:
                devs.append(abs(engine.weight(masses) - oracle))
            dev = max(devs)
            rep.record(dev)
            if (exact and dev != 0) or (not exact and dev > FLOAT_TOL):
                rep.counterexamples.append({"seed": seed, "mask": mask.tolist(), "deviation": float(dev)})
    return rep


def small_instance(seed, max_subregions=8, max_k=4) -> ProblemInstance:
    """First random instance derived from ``seed`` with few subregions and small k."""
    from .hypergraph import compute_subregions, _formula_k

    for attempt in range(1000):
        inst = random_instance(seed * 1000 + attempt)
        subs = compute_subregions(inst)
        if len(subs) <= max_subregions and _formula_k(subs, inst.num_regions) <= max_k:
            return inst
    raise RuntimeError("no small instance found")


def tiny_instance(seed, n_hypotheses=(4, 8), n_tests=(3, 6)) -> ProblemInstance:
    return random_instance(seed, n_hypotheses=n_hypotheses, n_tests=n_tests, feasible=True)


def suite_instances(seeds: Iterable[int]):
    """(check name, seed, instance) for every instance the validation suite visits."""
    for seed in seeds:
        yield "solved-iff-cut/adaptive", seed, random_instance(seed)
        yield "greedy-bound", seed, tiny_instance(seed)
        yield "weight-oracle", seed, small_instance(seed)


def check_reductions(seeds: Iterable[int], gbs_uniform: bool = False) -> tuple:
    """HEC argmax versus EC2 on partitions and versus GBS on singleton regions.

    Compared at every state visited by HEC runs, in exact arithmetic.  EC2 must
    produce the same argmax set.  For GBS every HEC maximizer must maximize
    expected eliminated mass; with unequal weights GBS can have extra ties
    that HEC breaks, so the sets need not coincide.
    Returns (ec2 report, gbs report).
    """
    from .hypergraph import build_index
    from .policies import GainEvaluator, make_policy, run_policy, splitting_tests

    seeds = list(seeds)
    reports = []
    for name, kw in (("ec2-reduction", {"partition": True}),
                     ("gbs-reduction", {"singleton": True, "arities": (2,), "uniform": gbs_uniform,
                                        "n_hypotheses": (4, 8), "n_tests": (4, 8)})):
        rep = OracleReport(name)
        for seed in seeds:
            inst = random_instance(seed, feasible=True, **kw)
            idx = build_index(inst)
            ev_ = GainEvaluator(inst, idx, exact=True)
            pol = make_policy("hec", inst, exact=True)
            classes = [next(iter(inst.signature(h))) for h in range(inst.num_hypotheses)]
            visited = set()
            for h in range(inst.num_hypotheses):
                tr = run_policy(inst, pol, h)
                ev = Evidence()
                for step in tr.steps:
                    key = ev.key()
                    if key not in visited:
                        visited.add(key)
                        mask = consistent_mask(inst, ev)
                        cands = splitting_tests(inst, mask, exclude=ev.tests)
                        hec = {t: ev_.gain(mask, t) for t in cands}
                        if name == "ec2-reduction":
                            other = {t: ec2_gain(inst, classes, mask, t) for t in cands}
                        else:
                            other = {t: gbs_gain(inst, mask, t) for t in cands}
                        mine, theirs = _argmax_set(hec), _argmax_set(other)
                        if name == "ec2-reduction":
                            ok = mine == theirs
                        else:
                            ok = mine <= theirs
                        ok = ok and step.test in theirs
                        rep.record(0.0 if ok else 1.0)
                        if not ok:
                            rep.counterexamples.append({"seed": seed, "evidence": list(ev.pairs),
                                                        "hec_argmax": sorted(mine),
                                                        "baseline_argmax": sorted(theirs)})
                    ev = apply_test(ev, step.test, step.outcome)
        reports.append(rep)
    return tuple(reports)
