"""Complete homogeneous symmetric polynomials and total hyperedge weight.

The total weight of all k-multisets over subregions is CHP_k of the
subregion masses.  Multisets whose support shares a region are removed by
subtracting, for every shared set zeta of size m, the product of its masses
times CHP_{k-m}(zeta): the weight of multisets whose support is exactly zeta.

Scalar functions here are generic over the number type, so passing
``fractions.Fraction`` masses gives exact results.  :class:`WeightEngine`
evaluates many float mass vectors at once with numpy.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import Evidence, ProblemInstance, consistent_mask
from .errors import InternalInconsistency

NEGATIVE_TOL = 1e-9
# |W| below this fraction of CHP_k(masses) is cancellation noise
SNAP_RTOL = 1e-12
_CHUNK_ELEMS = 1 << 22


def power_sums(values: Sequence, max_degree: int) -> list:
    """[PS_1, ..., PS_max_degree] of ``values``."""
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    out = []
    powers = list(values)
    base = list(values)
    for d in range(1, max_degree + 1):
        if d > 1:
            powers = [p * b for p, b in zip(powers, base)]
        out.append(sum(powers, 0 * (base[0] if base else 0)))
    return out


def chp_table(values: Sequence, degree: int) -> list:
    """[CHP_0, ..., CHP_degree] by the Newton-Girard recurrence."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    exact = any(isinstance(v, Fraction) for v in values)
    one = Fraction(1) if exact else 1.0
    table = [one]
    if degree == 0:
        return table
    ps = power_sums(values, degree)
    for i in range(1, degree + 1):
        acc = sum((table[i - j] * ps[j - 1] for j in range(1, i + 1)), 0 * one)
        table.append(acc / i)
    return table


def chp(values: Sequence, degree: int):
    """Complete homogeneous symmetric polynomial of the given degree."""
    return chp_table(values, degree)[degree]


def zeta_weight(zeta, masses: Sequence, k: int):
    """Weight of k-multisets whose support is exactly the members of ``zeta``."""
    members = zeta.members if hasattr(zeta, "members") else tuple(zeta)
    m = len(members)
    if m > k:
        raise ValueError(f"shared set of size {m} exceeds k={k}")
    vals = [masses[g] for g in members]
    prod = vals[0]
    for v in vals[1:]:
        prod = prod * v
    return prod * chp(vals, k - m)


def _finish(total, shared, exact):
    w = total - shared
    if exact:
        if w < 0:
            raise InternalInconsistency(f"negative hyperedge weight {w}")
        return w
    if abs(w) <= SNAP_RTOL * abs(total):
        return 0.0
    if w < 0:
        if w < -NEGATIVE_TOL:
            raise InternalInconsistency(f"negative hyperedge weight {w!r}")
        return 0.0
    return float(w)


def hyperedge_weight(masses: Sequence, index):
    """Total weight of hyperedges given per-subregion masses.

    Exact when the masses are Fractions; floats are snapped to zero when the
    result is within cancellation noise and clamped at the negative tolerance.
    """
    masses = list(masses)
    exact = any(isinstance(v, Fraction) for v in masses)
    k = index.k
    total = chp(masses, k)
    zero = Fraction(0) if exact else 0.0
    shared = zero
    if index.zeta_sets is not None:
        for z in sorted(index.zeta_sets, key=lambda z: (len(z.members), z.members)):
            if all(masses[g] for g in z.members):
                shared = shared + zeta_weight(z, masses, k)
    else:
        for coef, members in lattice_terms(index):
            shared = shared + coef * chp([masses[g] for g in members], k)
    return _finish(total, shared, exact)


def objective_f(instance: ProblemInstance, evidence: Evidence, index, exact: bool = False):
    """Mass of hyperedges cut by the evidence: W(prior masses) - W(surviving masses)."""
    from .hypergraph import subregion_masses

    full = hyperedge_weight(subregion_masses(instance, index, exact=exact), index)
    mask = consistent_mask(instance, evidence)
    rest = hyperedge_weight(subregion_masses(instance, index, mask, exact=exact), index)
    return full - rest


def lattice_terms(index) -> list:
    """Inclusion-exclusion terms over region intersections.

    The multisets with a shared support are the union over regions r of the
    multisets supported inside r.  Grouping region collections by the set of
    subregions they jointly contain gives (coefficient, members) pairs with
    shared weight = sum coef * CHP_k(members).  Only collections with a
    nonempty intersection matter, and those are subsets of some signature.
    """
    cached = getattr(index, "_lattice_terms", None)
    if cached is not None:
        return cached
    collections = set()
    for sig in set(index.sig_masks):
        bits = [1 << r for r in range(sig.bit_length()) if sig >> r & 1]
        for sel in range(1, 1 << len(bits)):
            c = 0
            for i, b in enumerate(bits):
                if sel >> i & 1:
                    c |= b
            collections.add(c)
    coef: dict = {}
    for c in collections:
        members = tuple(g for g, s in enumerate(index.sig_masks) if s & c == c)
        sign = 1 if bin(c).count("1") % 2 else -1
        coef[members] = coef.get(members, 0) + sign
    terms = sorted(((v, m) for m, v in coef.items() if v), key=lambda t: (len(t[1]), t[1]))
    object.__setattr__(index, "_lattice_terms", terms)
    return terms


def _chp_last_axis(x: np.ndarray, degree: int) -> np.ndarray:
    table = [np.ones(x.shape[:-1])]
    if degree == 0:
        return table[0]
    ps = []
    p = np.ones_like(x)
    for _ in range(degree):
        p = p * x
        ps.append(p.sum(axis=-1))
    for i in range(1, degree + 1):
        acc = table[i - 1] * ps[0]
        for j in range(2, i + 1):
            acc = acc + table[i - j] * ps[j - 1]
        table.append(acc / i)
    return table[degree]


class WeightEngine:
    """Vectorized float evaluation of hyperedge weight for a batch of mass vectors.

    ``method`` is ``zeta`` (shared-set subtraction), ``lattice``
    (inclusion-exclusion over region intersections) or ``auto`` (zeta when the
    index holds enumerated shared sets).
    """

    def __init__(self, index, method: str = "auto"):
        if method == "auto":
            method = "zeta" if index.zeta_sets is not None else "lattice"
        if method == "zeta" and index.zeta_sets is None:
            raise ValueError("index has no enumerated shared sets")
        self.index = index
        self.k = index.k
        self.method = method
        G = index.num_subregions
        if method == "zeta":
            by_size: dict = {}
            for z in index.zeta_sets:
                by_size.setdefault(len(z.members), []).append(z.members)
            self._groups = [(m, np.array(sorted(v), dtype=np.int64).reshape(-1, m))
                            for m, v in sorted(by_size.items())]
        else:
            terms = lattice_terms(index)
            width = max((len(m) for _, m in terms), default=1)
            pad = np.full((len(terms), width), G, dtype=np.int64)
            for i, (_, members) in enumerate(terms):
                pad[i, :len(members)] = members
            self._lattice_idx = pad
            self._lattice_coef = np.array([c for c, _ in terms], dtype=float)

    def weights(self, masses: np.ndarray) -> np.ndarray:
        M = np.atleast_2d(np.asarray(masses, dtype=float))
        total = _chp_last_axis(M, self.k)
        shared = np.zeros(M.shape[0])
        if self.method == "zeta":
            nz = (M > 0).any(axis=0)
            for m, Z in self._groups:
                live = Z[nz[Z].all(axis=1)]
                if not live.size:
                    continue
                step = max(1, _CHUNK_ELEMS // max(1, M.shape[0] * m))
                for s in range(0, live.shape[0], step):
                    X = M[:, live[s:s + step]]
                    term = X.prod(axis=-1)
                    if m < self.k:
                        term = term * _chp_last_axis(X, self.k - m)
                    shared += term.sum(axis=-1)
        else:
            Mp = np.concatenate([M, np.zeros((M.shape[0], 1))], axis=1)
            idx, coef = self._lattice_idx, self._lattice_coef
            step = max(1, _CHUNK_ELEMS // max(1, M.shape[0] * idx.shape[1]))
            for s in range(0, idx.shape[0], step):
                X = Mp[:, idx[s:s + step]]
                shared += (_chp_last_axis(X, self.k) * coef[s:s + step]).sum(axis=-1)
        W = total - shared
        W[np.abs(W) <= SNAP_RTOL * np.abs(total)] = 0.0
        if (W < -NEGATIVE_TOL).any():
            raise InternalInconsistency(f"negative hyperedge weight {W.min()!r}")
        return np.maximum(W, 0.0)

    def weight(self, masses) -> float:
        return float(self.weights(masses)[0])
