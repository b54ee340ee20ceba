"""Problem representation, version spaces and the direct solved check.

A :class:`ProblemInstance` holds hypotheses with a prior, tests with finite
outcome sets, a dense deterministic outcome matrix and a list of (possibly
overlapping) decision regions.  Hypotheses, tests and regions are referred to
by their position; the string ids are carried along for I/O and display, and
"lowest id" always means lowest position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ContradictoryEvidence, DuplicateTest, ValidationError

NORMALIZATION_TOL = 1e-12
COVERAGE_MODES = ("strict", "wrap", "lenient")


def _as_fraction(w) -> Fraction:
    if isinstance(w, Fraction):
        return w
    if isinstance(w, str):
        return Fraction(w)
    if isinstance(w, (int, np.integer)):
        return Fraction(int(w))
    return Fraction(float(w))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A Decision Region Determination instance.

    ``weights`` are exact prior weights.  Instances built through
    :func:`make_instance` are normalized and validated; the raw constructor
    performs no checks so that malformed instances can be reported on.
    """

    hypotheses: tuple
    weights: tuple
    tests: tuple
    arities: tuple
    outcomes: np.ndarray
    regions: tuple
    region_ids: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def num_hypotheses(self) -> int:
        return len(self.hypotheses)

    @property
    def num_tests(self) -> int:
        return len(self.tests)

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    @cached_property
    def prior(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=float)

    @cached_property
    def membership(self) -> np.ndarray:
        """Boolean matrix of shape (hypotheses, regions)."""
        m = np.zeros((self.num_hypotheses, self.num_regions), dtype=bool)
        for r, members in enumerate(self.regions):
            for h in members:
                if 0 <= h < self.num_hypotheses:
                    m[h, r] = True
        return m

    @cached_property
    def region_masks(self) -> tuple:
        """Each region as an int bitmask over hypotheses."""
        return tuple(sum(1 << h for h in members) for members in self.regions)

    def signature(self, h: int) -> tuple:
        return tuple(int(r) for r in np.flatnonzero(self.membership[h]))

    def uncovered(self) -> list:
        return [int(h) for h in np.flatnonzero(~self.membership.any(axis=1))]


def make_instance(
    weights: Sequence,
    outcomes,
    regions: Sequence[Iterable[int]],
    arities: Optional[Sequence[int]] = None,
    hypotheses: Optional[Sequence[str]] = None,
    tests: Optional[Sequence[str]] = None,
    region_ids: Optional[Sequence[str]] = None,
    metadata: Optional[dict] = None,
    coverage: str = "strict",
) -> ProblemInstance:
    """Build, normalize and validate an instance.

    ``coverage`` is one of ``strict`` (uncovered hypotheses are an error),
    ``wrap`` (each uncovered hypothesis gets a fresh singleton region) or
    ``lenient`` (uncovered hypotheses only produce a warning).
    """
    if coverage not in COVERAGE_MODES:
        raise ValueError(f"unknown coverage mode {coverage!r}")
    out = np.asarray(outcomes, dtype=np.int64)
    if out.ndim != 2:
        raise ValidationError("outcome matrix must be two-dimensional")
    n_h, n_t = out.shape
    fr = [_as_fraction(w) for w in weights]
    if len(fr) != n_h:
        raise ValidationError(
            f"outcome matrix has {n_h} rows but {len(fr)} prior weights were given"
        )
    if any(w < 0 for w in fr):
        raise ValidationError("negative prior weight")
    total = sum(fr)
    if total > 0:
        fr = [w / total for w in fr]
    if arities is None:
        arities = [max(2, int(out[:, t].max()) + 1) if n_h else 2 for t in range(n_t)]
    inst = ProblemInstance(
        hypotheses=tuple(hypotheses) if hypotheses is not None else tuple(f"h{i}" for i in range(n_h)),
        weights=tuple(fr),
        tests=tuple(tests) if tests is not None else tuple(f"t{j}" for j in range(n_t)),
        arities=tuple(int(a) for a in arities),
        outcomes=out,
        regions=tuple(frozenset(int(h) for h in r) for r in regions),
        region_ids=tuple(region_ids) if region_ids is not None else tuple(f"r{i}" for i in range(len(regions))),
        metadata=dict(metadata or {}),
    )
    if coverage == "wrap":
        inst = wrap_uncovered(inst)
    report = validate_instance(inst, strict=(coverage == "strict"))
    if not report.ok:
        raise ValidationError("invalid instance: " + "; ".join(str(i) for i in report.errors), report)
    return inst


def wrap_uncovered(instance: ProblemInstance) -> ProblemInstance:
    """Give every uncovered hypothesis its own singleton region."""
    missing = instance.uncovered()
    if not missing:
        return instance
    used = set(instance.region_ids)
    regions = list(instance.regions)
    ids = list(instance.region_ids)
    for h in missing:
        rid = f"wrap-{instance.hypotheses[h]}"
        while rid in used:
            rid += "_"
        used.add(rid)
        regions.append(frozenset([h]))
        ids.append(rid)
    meta = dict(instance.metadata)
    meta["wrapped_hypotheses"] = len(missing)
    return ProblemInstance(
        hypotheses=instance.hypotheses,
        weights=instance.weights,
        tests=instance.tests,
        arities=instance.arities,
        outcomes=instance.outcomes,
        regions=tuple(regions),
        region_ids=tuple(ids),
        metadata=meta,
    )


@dataclass(frozen=True)
class Issue:
    severity: str
    code: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.code}: {self.message}"


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def errors(self) -> list:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list:
        return [i.code for i in self.issues]

    def add(self, severity, code, message):
        self.issues.append(Issue(severity, code, message))


def validate_instance(instance: ProblemInstance, strict: bool = True) -> ValidationReport:
    """Check an instance against the model assumptions.

    An empty report means the instance is well formed.  Structural problems
    (wrong matrix shape, dangling hypothesis references) are always errors;
    uncovered hypotheses are errors only when ``strict`` is set.
    """
    rep = ValidationReport()
    n_h, n_t = len(instance.hypotheses), len(instance.tests)
    out = np.asarray(instance.outcomes)
    if out.ndim != 2 or out.shape != (n_h, n_t):
        rep.add("error", "malformed outcome matrix",
                f"expected shape {(n_h, n_t)}, got {out.shape}")
        return rep
    if len(instance.weights) != n_h:
        rep.add("error", "malformed prior", f"{len(instance.weights)} weights for {n_h} hypotheses")
        return rep
    if len(instance.arities) != n_t:
        rep.add("error", "malformed tests", f"{len(instance.arities)} arities for {n_t} tests")
        return rep
    if len(instance.region_ids) != len(instance.regions):
        rep.add("error", "malformed regions", "region ids and regions differ in length")
        return rep
    if len(set(instance.hypotheses)) != n_h:
        rep.add("error", "duplicate id", "hypothesis ids are not unique")
    if len(set(instance.tests)) != n_t:
        rep.add("error", "duplicate id", "test ids are not unique")
    if len(set(instance.region_ids)) != len(instance.region_ids):
        rep.add("error", "duplicate id", "region ids are not unique")

    for h, w in enumerate(instance.weights):
        if w < 0:
            rep.add("error", "negative prior weight", f"hypothesis {instance.hypotheses[h]}")
        elif w == 0:
            rep.add("error", "zero prior weight", f"hypothesis {instance.hypotheses[h]}")
    total = sum(instance.weights)
    if abs(float(total) - 1.0) > NORMALIZATION_TOL:
        rep.add("error", "non-normalized prior", f"weights sum to {float(total)!r}")

    for t, a in enumerate(instance.arities):
        if a < 1:
            rep.add("error", "bad arity", f"test {instance.tests[t]} has arity {a}")
            continue
        col = out[:, t]
        if n_h and (col.min() < 0 or col.max() >= a):
            rep.add("error", "out-of-range outcome",
                    f"test {instance.tests[t]} has outcomes outside [0, {a})")

    for r, members in enumerate(instance.regions):
        bad = [h for h in members if not 0 <= h < n_h]
        if bad:
            rep.add("error", "malformed regions",
                    f"region {instance.region_ids[r]} references unknown hypotheses {sorted(bad)}")
        if not members:
            rep.add("warning", "empty region", f"region {instance.region_ids[r]}")

    covered = set()
    for members in instance.regions:
        covered.update(members)
    for h in range(n_h):
        if h not in covered:
            rep.add("error" if strict else "warning", "uncovered hypothesis",
                    f"hypothesis {instance.hypotheses[h]} lies in no region")
    return rep


@dataclass(frozen=True)
class Evidence:
    """An ordered set of (test, outcome) observations."""

    pairs: tuple = ()

    def __post_init__(self):
        pairs = tuple((int(t), int(o)) for t, o in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        tests = [t for t, _ in pairs]
        if len(set(tests)) != len(tests):
            raise DuplicateTest("a test appears more than once in the evidence")

    @property
    def tests(self) -> frozenset:
        return frozenset(t for t, _ in self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def key(self) -> frozenset:
        """Order-independent identity of the evidence set."""
        return frozenset(self.pairs)


def apply_test(evidence: Evidence, test: int, outcome: int) -> Evidence:
    if test in evidence.tests:
        raise DuplicateTest(f"test {test} has already been run")
    return Evidence(evidence.pairs + ((int(test), int(outcome)),))


@dataclass(frozen=True)
class VersionSpace:
    consistent: frozenset
    total_mass: float
    mask: np.ndarray = field(repr=False, compare=False)

    def __len__(self):
        return len(self.consistent)


def consistent_mask(instance: ProblemInstance, evidence: Evidence) -> np.ndarray:
    mask = np.ones(instance.num_hypotheses, dtype=bool)
    for t, o in evidence.pairs:
        mask &= instance.outcomes[:, t] == o
    return mask


def consistent_hypotheses(instance: ProblemInstance, evidence: Evidence) -> VersionSpace:
    """Hypotheses agreeing with every observed outcome, with their prior mass."""
    mask = consistent_mask(instance, evidence)
    if not mask.any():
        raise ContradictoryEvidence("contradictory evidence: no hypothesis is consistent")
    idx = np.flatnonzero(mask)
    return VersionSpace(frozenset(int(i) for i in idx), float(instance.prior[mask].sum()), mask)


def posterior(instance: ProblemInstance, evidence: Evidence, exact: bool = False):
    """Prior conditioned on the evidence.

    Returns a float array, or a list of Fractions when ``exact`` is set.
    """
    mask = consistent_mask(instance, evidence)
    if not mask.any():
        raise ContradictoryEvidence("contradictory evidence: empty version space")
    if exact:
        total = sum(w for w, m in zip(instance.weights, mask) if m)
        return [w / total if m else Fraction(0) for w, m in zip(instance.weights, mask)]
    p = np.where(mask, instance.prior, 0.0)
    return p / p.sum()


def solved_region(instance: ProblemInstance, mask: np.ndarray) -> Optional[int]:
    """Lowest region containing every hypothesis selected by ``mask``."""
    inside = instance.membership[mask].all(axis=0)
    hits = np.flatnonzero(inside)
    return int(hits[0]) if hits.size else None


def is_solved(instance: ProblemInstance, evidence: Evidence) -> Optional[int]:
    """Region containing the whole version space, or None."""
    mask = consistent_mask(instance, evidence)
    if not mask.any():
        raise ContradictoryEvidence("contradictory evidence: empty version space")
    return solved_region(instance, mask)


def instance_digest(instance: ProblemInstance) -> bytes:
    """SHA-256 over the canonical content of an instance (metadata excluded)."""
    import hashlib

    h = hashlib.sha256()
    for part in (instance.hypotheses, instance.tests, instance.region_ids):
        h.update(repr(tuple(str(x) for x in part)).encode())
    h.update(repr(tuple(str(w) for w in instance.weights)).encode())
    h.update(repr(tuple(instance.arities)).encode())
    h.update(np.ascontiguousarray(instance.outcomes, dtype="<i8").tobytes())
    h.update(repr(tuple(tuple(sorted(r)) for r in instance.regions)).encode())
    return h.digest()
