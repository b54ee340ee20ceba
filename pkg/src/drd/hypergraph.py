"""Subregions, hyperedge cardinality and shared-region sets.

Hypotheses with identical region memberships are merged into subregions.
The splitting hypergraph over subregions is never materialized: its total
weight is obtained from complete homogeneous symmetric polynomials minus the
weight of every multiset whose support shares a region (see :mod:`drd.chp`).
This module enumerates those supports ("shared sets") once per instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import Evidence, ProblemInstance, consistent_mask, solved_region
from .errors import DRDError, ValidationError

DEFAULT_MAX_ZETA_SETS = 2_000_000


@dataclass(frozen=True)
class Subregion:
    id: int
    signature: tuple
    members: tuple
    mass: float
    mass_exact: Fraction


@dataclass(frozen=True)
class SharedRegionSet:
    members: tuple
    witness_region: int

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True, eq=False)
class SubregionIndex:
    """Evidence-independent structure shared by all weight computations.

    ``zeta_sets`` is None when the number of shared sets would exceed the
    enumeration cap; weight engines then fall back to inclusion-exclusion
    over region intersections.
    """

    subregions: tuple
    k: int
    zeta_sets: Optional[tuple]
    num_regions: int
    hyp_to_sub: np.ndarray
    sig_masks: tuple

    @property
    def num_subregions(self) -> int:
        return len(self.subregions)


def compute_subregions(instance: ProblemInstance) -> list:
    """Group hypotheses by region signature, ordered lexicographically by signature."""
    groups: dict = {}
    for h in range(instance.num_hypotheses):
        groups.setdefault(instance.signature(h), []).append(h)
    out = []
    for i, sig in enumerate(sorted(groups)):
        members = tuple(groups[sig])
        exact = sum((instance.weights[h] for h in members), Fraction(0))
        out.append(Subregion(i, sig, members, float(instance.prior[list(members)].sum()), exact))
    return out


def _formula_k(subregions: Sequence[Subregion], num_regions: int) -> int:
    max_degree = max((len(g.signature) for g in subregions), default=0)
    per_region = [0] * num_regions
    for g in subregions:
        for r in g.signature:
            per_region[r] += 1
    max_sub = max(per_region, default=0)
    return max(2, min(max_degree, max_sub) + 1)


def cardinality_k(instance: ProblemInstance) -> int:
    """Practical hyperedge cardinality: min(max node degree, max subregions per region) + 1."""
    return _formula_k(compute_subregions(instance), instance.num_regions)


def _sig_mask(sig) -> int:
    m = 0
    for r in sig:
        m |= 1 << r
    return m


def _lowest_bit(m: int) -> int:
    return (m & -m).bit_length() - 1


def count_shared_sets_bound(subregions: Sequence[Subregion], num_regions: int, k: int) -> int:
    """Upper bound on the number of shared sets, used to decide whether to enumerate."""
    per_region = [0] * num_regions
    for g in subregions:
        for r in g.signature:
            per_region[r] += 1
    return sum(math.comb(n, m) for n in per_region for m in range(1, min(n, k) + 1))


def enumerate_shared_sets(subregions: Sequence[Subregion], k: int) -> list:
    """All sets of 1..k distinct subregions jointly contained in some region.

    Generated level by level.  A set of size m+1 is only considered as an
    extension of a surviving set of size m (any subset of a shared set is
    shared, so nothing is lost), and it survives when the intersection of
    its members' signatures is nonempty.  The witness is the lowest region
    in that intersection.  Output is ordered by (size, members).
    """
    masks = [_sig_mask(g.signature) for g in subregions]
    n = len(masks)
    level = [((i,), masks[i]) for i in range(n) if masks[i]]
    out = []
    size = 1
    while level:
        out.extend(SharedRegionSet(members, _lowest_bit(common)) for members, common in level)
        if size == k:
            break
        nxt = []
        for members, common in level:
            for j in range(members[-1] + 1, n):
                c = common & masks[j]
                if c:
                    nxt.append((members + (j,), c))
        level = nxt
        size += 1
    return out


def build_index(
    instance: ProblemInstance,
    k: Optional[int] = None,
    max_zeta_sets: int = DEFAULT_MAX_ZETA_SETS,
) -> SubregionIndex:
    """Compute subregions, cardinality and shared sets for an instance.

    ``k`` overrides the formula value; values below it are rejected because
    cutting all hyperedges would no longer imply a solved instance.
    """
    subs = compute_subregions(instance)
    k_formula = _formula_k(subs, instance.num_regions)
    if k is None:
        k = k_formula
    elif k < k_formula:
        raise ValidationError(f"k override {k} is below the formula value {k_formula}")
    hyp_to_sub = np.empty(instance.num_hypotheses, dtype=np.int64)
    for g in subs:
        hyp_to_sub[list(g.members)] = g.id
    zeta = None
    if count_shared_sets_bound(subs, instance.num_regions, k) <= max_zeta_sets:
        zeta = tuple(enumerate_shared_sets(subs, k))
    return SubregionIndex(
        subregions=tuple(subs),
        k=int(k),
        zeta_sets=zeta,
        num_regions=instance.num_regions,
        hyp_to_sub=hyp_to_sub,
        sig_masks=tuple(_sig_mask(g.signature) for g in subs),
    )


def is_hyperedge(multiset: Sequence[int], index: SubregionIndex) -> bool:
    """Whether a k-multiset of subregion ids is a hyperedge (no region holds all of it)."""
    if len(multiset) != index.k:
        raise DRDError(f"hyperedges have cardinality {index.k}, got {len(multiset)}")
    common = -1
    for g in set(multiset):
        common &= index.sig_masks[g]
    return common == 0


def subregion_masses(instance: ProblemInstance, index: SubregionIndex, mask=None, exact: bool = False):
    """Prior mass of each subregion restricted to the hypotheses in ``mask``."""
    if mask is None:
        mask = np.ones(instance.num_hypotheses, dtype=bool)
    if exact:
        out = [Fraction(0)] * index.num_subregions
        for h in np.flatnonzero(mask):
            g = index.hyp_to_sub[h]
            out[g] += instance.weights[h]
        return out
    return np.bincount(index.hyp_to_sub, weights=np.where(mask, instance.prior, 0.0),
                       minlength=index.num_subregions)


def solved_iff_edges_cut(instance: ProblemInstance, evidence: Evidence, index: SubregionIndex,
                         exact: bool = False) -> tuple:
    """(solved by direct region containment, no hyperedge survives the evidence)."""
    from .chp import hyperedge_weight

    mask = consistent_mask(instance, evidence)
    solved_direct = solved_region(instance, mask) is not None
    w = hyperedge_weight(subregion_masses(instance, index, mask, exact=exact), index)
    return solved_direct, w == 0
