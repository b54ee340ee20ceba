"""Greedy hyperedge cutting, baselines, policy execution and expected cost."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from .chp import NEGATIVE_TOL, WeightEngine, hyperedge_weight
from .core import (
    Evidence,
    ProblemInstance,
    apply_test,
    consistent_mask,
    instance_digest,
    make_instance,
    solved_region,
)
from .errors import DuplicateTest, InfeasiblePolicy, InternalInconsistency, ValidationError
from .hypergraph import SubregionIndex, build_index, subregion_masses

# Solved states must have every gain below this.
STOP_TOL = 1e-9


class PolicyKind(str, Enum):
    HEC = "hec"
    GBS = "gbs"
    GBS_HEC = "gbs-hec"
    EC2 = "ec2"
    EC2_HEC = "ec2-hec"
    VOI = "voi"


TERMINATION = {
    PolicyKind.HEC: "drd-solved",
    PolicyKind.GBS: "single-hypothesis",
    PolicyKind.GBS_HEC: "drd-solved",
    PolicyKind.EC2: "single-assigned-region",
    PolicyKind.EC2_HEC: "drd-solved",
    PolicyKind.VOI: "drd-solved",
}


def splitting_tests(instance: ProblemInstance, mask: np.ndarray, exclude=()) -> list:
    """Tests whose outcome is not constant over the hypotheses in ``mask``."""
    sub = instance.outcomes[mask]
    if sub.shape[0] == 0:
        return []
    varies = (sub != sub[0]).any(axis=0)
    return [int(t) for t in np.flatnonzero(varies) if t not in exclude]


class GainEvaluator:
    """Expected reduction of surviving hyperedge weight for single tests.

    Gains are computed one test at a time, so that eager and lazy selection
    see bitwise identical values.
    """

    def __init__(self, instance: ProblemInstance, index: SubregionIndex, exact: bool = False,
                 engine: Optional[WeightEngine] = None):
        self.instance = instance
        self.index = index
        self.exact = exact
        self.engine = None if exact else (engine or WeightEngine(index))

    def weight(self, mask: np.ndarray):
        masses = subregion_masses(self.instance, self.index, mask, exact=self.exact)
        if self.exact:
            return hyperedge_weight(masses, self.index)
        return self.engine.weight(masses)

    def gain(self, mask: np.ndarray, test: int, current=None):
        inst, idx = self.instance, self.index
        col = inst.outcomes[:, test]
        if current is None:
            current = self.weight(mask)
        if self.exact:
            return self._gain_exact(mask, col, current)
        G = idx.num_subregions
        a = int(inst.arities[test])
        p = np.where(mask, inst.prior, 0.0)
        M = np.bincount(col * G + idx.hyp_to_sub, weights=p, minlength=a * G).reshape(a, G)
        n_o = M.sum(axis=1)
        live = n_o > 0
        if live.sum() <= 1:
            return 0.0
        N = n_o[live].sum()
        W_o = self.engine.weights(M[live])
        delta = float(current - np.dot(n_o[live] / N, W_o))
        return _clamp(delta)

    def _gain_exact(self, mask, col, current):
        idx = self.index
        per: dict = {}
        for h in np.flatnonzero(mask):
            o = int(col[h])
            row = per.setdefault(o, [Fraction(0)] * idx.num_subregions)
            row[idx.hyp_to_sub[h]] += self.instance.weights[h]
        if len(per) <= 1:
            return Fraction(0)
        n = {o: sum(row) for o, row in per.items()}
        N = sum(n.values())
        expected = sum(n[o] / N * hyperedge_weight(per[o], idx) for o in sorted(per))
        delta = current - expected
        if delta < 0:
            raise InternalInconsistency(f"negative marginal gain {delta}")
        return delta


def _clamp(delta: float) -> float:
    if delta < 0:
        if delta < -NEGATIVE_TOL:
            raise InternalInconsistency(f"negative marginal gain {delta!r}")
        return 0.0
    return delta


def marginal_gain(instance: ProblemInstance, evidence: Evidence, test: int,
                  index: SubregionIndex, exact: bool = False):
    """Expected hyperedge mass removed by running ``test`` after ``evidence``."""
    if test in evidence.tests:
        raise DuplicateTest(f"test {test} is already in the evidence")
    mask = consistent_mask(instance, evidence)
    return GainEvaluator(instance, index, exact=exact).gain(mask, test)


@dataclass
class LazyState:
    """Upper bounds on marginal gains from earlier evaluations."""

    bounds: dict = field(default_factory=dict)
    evaluations: int = 0

    def copy(self) -> "LazyState":
        return LazyState(dict(self.bounds), self.evaluations)


def _argmax(values: dict):
    # highest value, then lowest test id
    return min(values, key=lambda t: (-values[t], t))


def greedy_choice(evaluator: GainEvaluator, mask: np.ndarray, candidates: list,
                  lazy: Optional[LazyState] = None):
    """(test, gain) maximizing the gain among ``candidates``; ties go to the lowest id."""
    current = evaluator.weight(mask)
    if lazy is None or not lazy.bounds:
        fresh = {t: evaluator.gain(mask, t, current) for t in candidates}
        if lazy is not None:
            lazy.bounds.update(fresh)
            lazy.evaluations += len(fresh)
        best = _argmax(fresh)
        return best, fresh[best]

    bounds = lazy.bounds
    heap = [(-bounds.get(t, float("inf")), t) for t in candidates]
    heapq.heapify(heap)
    fresh: dict = {}
    while True:
        _, t = heap[0]
        if t in fresh:
            break
        heapq.heappop(heap)
        fresh[t] = evaluator.gain(mask, t, current)
        heapq.heappush(heap, (-fresh[t], t))
    top = fresh[t]
    if evaluator.exact:
        tol = 0
    else:
        tol = 1e-9 * max(abs(top), abs(current))
    for _, s in heap:
        if s not in fresh and bounds.get(s, float("inf")) >= top - tol:
            fresh[s] = evaluator.gain(mask, s, current)
    bounds.update(fresh)
    lazy.evaluations += len(fresh)
    best = _argmax(fresh)
    return best, fresh[best]


def greedy_step(instance: ProblemInstance, evidence: Evidence, evaluator: GainEvaluator,
                lazy_state: Optional[LazyState] = None):
    """(test, gain) for the greedy choice, or (None, 0) once solved."""
    mask = consistent_mask(instance, evidence)
    if solved_region(instance, mask) is not None:
        w = evaluator.weight(mask)
        if w > STOP_TOL:
            raise InternalInconsistency(f"solved state keeps hyperedge weight {w}")
        return None, 0
    candidates = splitting_tests(instance, mask, exclude=evidence.tests)
    if not candidates:
        raise InfeasiblePolicy("infeasible under test set: no remaining test splits the version space")
    best, gain = greedy_choice(evaluator, mask, candidates, lazy_state)
    if gain <= 0:
        raise InternalInconsistency("unsolved state but every marginal gain is zero")
    return best, gain


def select_test_greedy(instance: ProblemInstance, evidence: Evidence, index: SubregionIndex,
                       lazy_state: Optional[LazyState] = None, exact: bool = False,
                       evaluator: Optional[GainEvaluator] = None) -> Optional[int]:
    """Test with the largest marginal gain, or None once the instance is solved.

    The region-containment check decides when to stop.  A solved state with
    a positive remaining weight, or an unsolved state where no test has a
    positive gain, contradicts the edge-cutting equivalence and raises.
    Tests that do not split the version space are never proposed.
    """
    evaluator = evaluator or GainEvaluator(instance, index, exact=exact)
    return greedy_step(instance, evidence, evaluator, lazy_state)[0]


def voi_gains(instance: ProblemInstance, mask: np.ndarray, candidates: list, exact: bool = False) -> dict:
    """Myopic value of information with utility 1 when the chosen region holds the truth."""
    member = instance.membership
    if exact:
        w = instance.weights
        hs = [int(h) for h in np.flatnonzero(mask)]
        N = sum(w[h] for h in hs)
        now = max(sum((w[h] for h in hs if member[h, r]), Fraction(0)) for r in range(instance.num_regions)) / N
        out = {}
        for t in candidates:
            by_o: dict = {}
            for h in hs:
                by_o.setdefault(int(instance.outcomes[h, t]), []).append(h)
            best = sum(max(sum((w[h] for h in grp if member[h, r]), Fraction(0))
                           for r in range(instance.num_regions)) for grp in by_o.values())
            out[t] = best / N - now
        return out
    p = np.where(mask, instance.prior, 0.0)
    N = p.sum()
    now = (p @ member).max() / N
    out = {}
    for t in candidates:
        col = instance.outcomes[:, t]
        total = 0.0
        for o in range(int(instance.arities[t])):
            po = np.where(col == o, p, 0.0)
            if po.any():
                total += (po @ member).max()
        out[t] = total / N - now
    return out


@dataclass
class TraceStep:
    test: int
    outcome: int
    marginal_gain: float
    objective_after: float


@dataclass
class PolicyTrace:
    true_hypothesis: int
    steps: list
    terminal_region: Optional[int]
    step_seconds: list = field(default_factory=list)

    @property
    def tests(self) -> list:
        return [s.test for s in self.steps]

    def __len__(self):
        return len(self.steps)


@dataclass
class PolicyEvaluation:
    expected_cost: float
    expected_cost_exact: Fraction
    costs: list
    max_cost: int
    step_seconds: list


@dataclass(eq=False)
class Policy:
    """A test-selection rule plus its stop condition.

    ``selector`` is the instance whose hypergraph drives selection: the
    original for HEC and VoI, the singleton-region transform for GBS and the
    random partition for EC2.  Selections are cached by evidence set, which is
    sound because selection is a deterministic function of the evidence.
    """

    kind: PolicyKind
    selector: ProblemInstance
    index: Optional[SubregionIndex]
    termination: str
    seed: int = 0
    exact: bool = False
    lazy: bool = True
    assignment: Optional[np.ndarray] = None
    _evaluator: Optional[GainEvaluator] = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)
    _full_weight: object = field(default=None, repr=False)

    @property
    def k(self) -> Optional[int]:
        return self.index.k if self.index is not None else None

    @property
    def evaluator(self) -> GainEvaluator:
        if self._evaluator is None:
            self._evaluator = GainEvaluator(self.selector, self.index, exact=self.exact)
        return self._evaluator

    def done(self, instance: ProblemInstance, mask: np.ndarray) -> bool:
        if self.termination == "single-hypothesis":
            return int(mask.sum()) == 1
        if self.termination == "single-assigned-region":
            return solved_region(self.selector, mask) is not None
        return solved_region(instance, mask) is not None

    def objective(self, mask: np.ndarray):
        """Objective value after the evidence that produced ``mask``."""
        if self.kind is PolicyKind.VOI:
            if self.exact:
                w = self.selector.weights
                hs = [int(h) for h in np.flatnonzero(mask)]
                N = sum(w[h] for h in hs)
                return max(sum((w[h] for h in hs if self.selector.membership[h, r]), Fraction(0))
                           for r in range(self.selector.num_regions)) / N
            p = np.where(mask, self.selector.prior, 0.0)
            return float((p @ self.selector.membership).max() / p.sum())
        if self._full_weight is None:
            self._full_weight = self.evaluator.weight(np.ones(self.selector.num_hypotheses, dtype=bool))
        return self._full_weight - self.evaluator.weight(mask)

    def next_test(self, evidence: Evidence, lazy: Optional[LazyState]):
        """(test, gain, lazy state for the child) for the given evidence."""
        key = evidence.key()
        hit = self._cache.get(key)
        if hit is not None:
            t, gain, snap = hit
            return t, gain, (snap.copy() if snap is not None else None)
        mask = consistent_mask(self.selector, evidence)
        if self.kind is PolicyKind.VOI:
            if solved_region(self.selector, mask) is not None:
                return None, 0, lazy
            cands = splitting_tests(self.selector, mask, exclude=evidence.tests)
            if not cands:
                raise InfeasiblePolicy("infeasible under test set: no remaining test splits the version space")
            gains = voi_gains(self.selector, mask, cands, exact=self.exact)
            t = _argmax(gains)
            gain = gains[t]
        else:
            t, gain = greedy_step(self.selector, evidence, self.evaluator, lazy)
        self._cache[key] = (t, gain, lazy.copy() if lazy is not None else None)
        return t, gain, lazy


def gbs_instance(instance: ProblemInstance) -> ProblemInstance:
    """Every hypothesis in its own region."""
    return make_instance(
        instance.weights, instance.outcomes, [[h] for h in range(instance.num_hypotheses)],
        arities=instance.arities, hypotheses=instance.hypotheses, tests=instance.tests,
        region_ids=[f"gbs-{h}" for h in instance.hypotheses], metadata=instance.metadata,
    )


def ec2_assignment(instance: ProblemInstance, seed: int) -> np.ndarray:
    """Uniformly random region, among those containing it, for each hypothesis.

    Uses a counter-based generator keyed by the instance digest and the seed.
    """
    import hashlib

    key = hashlib.sha256(instance_digest(instance) + int(seed).to_bytes(16, "little", signed=True)).digest()
    rng = np.random.Generator(np.random.Philox(key=int.from_bytes(key[:16], "little")))
    out = np.empty(instance.num_hypotheses, dtype=np.int64)
    for h in range(instance.num_hypotheses):
        regs = instance.signature(h)
        if not regs:
            raise ValidationError(f"hypothesis {instance.hypotheses[h]} is uncovered; EC2 needs full coverage")
        out[h] = regs[int(rng.integers(len(regs)))]
    return out


def ec2_instance(instance: ProblemInstance, seed: int):
    assign = ec2_assignment(instance, seed)
    regions = [[h for h in range(instance.num_hypotheses) if assign[h] == r]
               for r in range(instance.num_regions)]
    inst = make_instance(
        instance.weights, instance.outcomes, regions, arities=instance.arities,
        hypotheses=instance.hypotheses, tests=instance.tests, region_ids=instance.region_ids,
        metadata=instance.metadata,
    )
    return inst, assign


def make_baseline(kind, instance: ProblemInstance, seed: int = 0, exact: bool = False,
                  lazy: bool = True, k: Optional[int] = None):
    """(selection instance, Policy) for any policy kind, HEC included.

    ``k`` overrides the hyperedge cardinality of HEC only; baselines run on
    partitions whose formula value is 2.
    """
    kind = PolicyKind(kind)
    assignment = None
    if kind in (PolicyKind.GBS, PolicyKind.GBS_HEC):
        selector = gbs_instance(instance)
    elif kind in (PolicyKind.EC2, PolicyKind.EC2_HEC):
        selector, assignment = ec2_instance(instance, seed)
    else:
        selector = instance
    index = None
    if kind is not PolicyKind.VOI:
        index = build_index(selector, k=k if kind is PolicyKind.HEC else None)
    policy = Policy(kind, selector, index, TERMINATION[kind], seed=seed, exact=exact,
                    lazy=lazy, assignment=assignment)
    return selector, policy


def make_policy(kind, instance: ProblemInstance, seed: int = 0, **kw) -> Policy:
    return make_baseline(kind, instance, seed, **kw)[1]


def run_policy(instance: ProblemInstance, policy: Policy, true_hypothesis: int) -> PolicyTrace:
    """Execute a policy against a fixed true hypothesis until its stop condition."""
    if not 0 <= true_hypothesis < instance.num_hypotheses:
        raise ValueError(f"unknown hypothesis {true_hypothesis}")
    evidence = Evidence()
    lazy = LazyState() if (policy.lazy and policy.kind is not PolicyKind.VOI) else None
    steps, seconds = [], []
    for _ in range(instance.num_tests + 1):
        mask = consistent_mask(instance, evidence)
        if policy.done(instance, mask):
            return PolicyTrace(true_hypothesis, steps, solved_region(instance, mask), seconds)
        t0 = time.perf_counter()
        try:
            t, gain, lazy = policy.next_test(evidence, lazy)
        except InfeasiblePolicy as e:
            e.trace = PolicyTrace(true_hypothesis, steps, None, seconds)
            raise
        seconds.append(time.perf_counter() - t0)
        if t is None:
            err = InfeasiblePolicy("infeasible under test set: selection stopped before termination")
            err.trace = PolicyTrace(true_hypothesis, steps, None, seconds)
            raise err
        o = int(instance.outcomes[true_hypothesis, t])
        evidence = apply_test(evidence, t, o)
        obj = policy.objective(consistent_mask(instance, evidence))
        steps.append(TraceStep(t, o, gain, obj))
    err = InfeasiblePolicy("infeasible under test set: tests exhausted")
    err.trace = PolicyTrace(true_hypothesis, steps, None, seconds)
    raise err


def expected_cost(instance: ProblemInstance, policy: Policy) -> PolicyEvaluation:
    """Prior-weighted number of tests, running the policy once per hypothesis."""
    costs, seconds = [], []
    for h in range(instance.num_hypotheses):
        tr = run_policy(instance, policy, h)
        costs.append(len(tr))
        seconds.extend(tr.step_seconds)
    exact = sum((w * c for w, c in zip(instance.weights, costs)), Fraction(0))
    return PolicyEvaluation(float(exact), exact, costs, max(costs, default=0), seconds)
