"""Synthetic instance generators.

``clustered``: comparison-based search over points in an embedding.  Points
come from a Gaussian mixture (or a CSV of real embeddings), are clustered by
Lloyd's algorithm, and each point belongs to the regions of its ``alpha``
nearest centroids.  A test compares two points; the answer is which one is
closer to the hidden target.

``localization2d``: a planar stand-in for touch-based object localization.
Hypotheses are poses drawn from an isotropic Gaussian, decisions succeed on
discs around sampled centers, and a guarded move along a line reports where
contact happens, quantized into a few distance bins.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ProblemInstance, make_instance
from .errors import InstanceFormatError, ValidationError

LLOYD_ITERATIONS = 25


@dataclass(frozen=True)
class ClusteredParams:
    num_points: int = 200
    dim: int = 2
    num_clusters: int = 12
    assign_alpha: int = 1
    num_tests: int = 100
    cluster_spread: float = 3.0

    def validate(self):
        for name in ("num_points", "dim", "num_clusters", "num_tests"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.assign_alpha < 1:
            raise ValidationError("assign_alpha must be >= 1")
        if self.assign_alpha > self.num_clusters:
            raise ValidationError("assign_alpha cannot exceed num_clusters")
        if self.num_clusters > self.num_points:
            raise ValidationError("num_clusters cannot exceed num_points")
        if self.num_points < 2:
            raise ValidationError("need at least two points to form a comparison")
        if self.cluster_spread <= 0:
            raise ValidationError("cluster_spread must be > 0")


@dataclass(frozen=True)
class Localization2DParams:
    num_hypotheses: int = 500
    gaussian_sigma: float = 0.2
    num_decisions: int = 20
    decision_radius: float = 0.1
    num_guarded_moves: int = 60
    num_bins: int = 4
    coverage: str = "wrap"

    def validate(self):
        for name in ("num_hypotheses", "num_decisions", "num_guarded_moves"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.gaussian_sigma <= 0:
            raise ValidationError("gaussian_sigma must be > 0")
        if self.decision_radius <= 0:
            raise ValidationError("decision_radius must be > 0")
        if self.num_bins < 2:
            raise ValidationError("num_bins must be >= 2")


# --------------------------------------------------------------- clustered

def lloyd(points: np.ndarray, num_clusters: int, rng: np.random.Generator,
          iterations: int = LLOYD_ITERATIONS) -> np.ndarray:
    """Centroids after a fixed number of Lloyd iterations.

    Initialization is farthest-point from a random first point.  An empty
    cluster is reseeded at the point farthest from its current centroid.
    """
    n = len(points)
    first = int(rng.integers(n))
    chosen = [first]
    d = np.linalg.norm(points - points[first], axis=1)
    for _ in range(1, num_clusters):
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        d = np.minimum(d, np.linalg.norm(points - points[nxt], axis=1))
    centroids = points[chosen].astype(float).copy()
    for _ in range(iterations):
        dist = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
        assign = np.argmin(dist, axis=1)
        own = dist[np.arange(n), assign]
        for c in range(num_clusters):
            members = assign == c
            if members.any():
                centroids[c] = points[members].mean(axis=0)
            else:
                far = int(np.argmax(own))
                centroids[c] = points[far]
                own[far] = -1.0
    return centroids


def _closer_outcomes(points: np.ndarray, pairs: Sequence[tuple]) -> np.ndarray:
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    da = np.linalg.norm(points[:, None, :] - points[a][None], axis=2)
    db = np.linalg.norm(points[:, None, :] - points[b][None], axis=2)
    return (db < da).astype(np.int64)


def _unresolved_class(outcomes: np.ndarray, membership: np.ndarray) -> Optional[list]:
    classes: dict = {}
    for h, row in enumerate(map(bytes, outcomes.astype(np.int8))):
        classes.setdefault(row, []).append(h)
    for hs in classes.values():
        if len(hs) > 1 and not membership[hs].all(axis=0).any():
            return hs
    return None


def clustered_instance(points: np.ndarray, ids: Sequence[str], num_clusters: int, assign_alpha: int,
                       num_tests: int, seed: int, metadata: Optional[dict] = None) -> ProblemInstance:
    """Comparison-search instance over given points (uniform prior).

    ``num_tests`` point pairs are sampled.  If some hypotheses remain
    indistinguishable under all tests while not sharing a region, a pair of
    them is appended as an extra test until every target can be resolved.
    """
    rng = np.random.default_rng(seed)
    n = len(points)
    centroids = lloyd(points, num_clusters, rng)
    dist = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :assign_alpha]
    membership = np.zeros((n, num_clusters), dtype=bool)
    membership[np.arange(n)[:, None], nearest] = True

    all_pairs = n * (n - 1) // 2
    count = min(num_tests, all_pairs)
    flat = rng.choice(all_pairs, size=count, replace=False)
    iu = np.triu_indices(n, k=1)
    pairs = [(int(iu[0][f]), int(iu[1][f])) for f in flat]
    outcomes = _closer_outcomes(points, pairs)
    seen = set(pairs)
    while True:
        hs = _unresolved_class(outcomes, membership)
        if hs is None:
            break
        extra = next(((a, b) for i, a in enumerate(hs) for b in hs[i + 1:]
                      if (a, b) not in seen and np.any(points[a] != points[b])), None)
        if extra is None:
            break
        seen.add(extra)
        pairs.append(extra)
        outcomes = np.concatenate([outcomes, _closer_outcomes(points, [extra])], axis=1)

    tests = [f"cmp-{ids[a]}-{ids[b]}" for a, b in pairs]
    labels = {t: {"question": f"Which is closer to your target: {ids[a]} or {ids[b]}?",
                  "outcomes": [str(ids[a]), str(ids[b])]}
              for t, (a, b) in zip(tests, pairs)}
    meta = dict(metadata or {})
    meta["labels"] = labels
    regions = [list(np.flatnonzero(membership[:, c])) for c in range(num_clusters)]
    return make_instance([1] * n, outcomes, regions, arities=[2] * len(pairs),
                         hypotheses=[str(i) for i in ids], tests=tests,
                         region_ids=[f"cluster-{c}" for c in range(num_clusters)],
                         metadata=meta, coverage="strict")


def generate_clustered(params: ClusteredParams, seed: int) -> ProblemInstance:
    """Gaussian-mixture points clustered into overlapping alpha-nearest regions."""
    params.validate()
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, params.cluster_spread, size=(params.num_clusters, params.dim))
    labels = rng.integers(params.num_clusters, size=params.num_points)
    points = centers[labels] + rng.normal(size=(params.num_points, params.dim))
    ids = [f"p{i}" for i in range(params.num_points)]
    meta = {"generator": "clustered", "seed": int(seed), "params": asdict(params)}
    return clustered_instance(points, ids, params.num_clusters, params.assign_alpha,
                              params.num_tests, seed + 1, metadata=meta)


def load_embeddings(path) -> tuple:
    """Read an embedding CSV with header ``id,x0,...,x{d-1}``; returns (ids, points)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InstanceFormatError("empty embedding file") from None
        dim = len(header) - 1
        if dim < 1 or header[0] != "id" or header[1:] != [f"x{i}" for i in range(dim)]:
            raise InstanceFormatError("embedding header must be id,x0,...,x{d-1}")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise InstanceFormatError(f"line {lineno}: expected {dim + 1} fields, got {len(row)}")
            try:
                rows.append([float(x) for x in row[1:]])
            except ValueError as e:
                raise InstanceFormatError(f"line {lineno}: {e}") from e
            ids.append(row[0])
    if len(set(ids)) != len(ids):
        raise InstanceFormatError("duplicate ids in embedding file")
    return ids, np.array(rows, dtype=float).reshape(len(ids), dim)


def clustered_from_embeddings(path, num_clusters: int, assign_alpha: int, num_tests: int,
                              seed: int) -> ProblemInstance:
    ids, points = load_embeddings(path)
    ClusteredParams(num_points=len(ids), dim=points.shape[1], num_clusters=num_clusters,
                    assign_alpha=assign_alpha, num_tests=num_tests).validate()
    meta = {"generator": "clustered-embeddings", "seed": int(seed), "source": str(path)}
    return clustered_instance(points, ids, num_clusters, assign_alpha, num_tests, seed, metadata=meta)


# ------------------------------------------------------------ localization

def generate_localization_2d(params: Localization2DParams, seed: int) -> ProblemInstance:
    """Planar localization with disc-shaped decisions and line-probe tests.

    A guarded move travels along a random line from 3 sigma before to 3 sigma
    past a reference point; the contact position is where the path passes
    closest to the object, reported in one of ``num_bins`` equal bins.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    s = params.gaussian_sigma
    poses = rng.normal(0.0, s, size=(params.num_hypotheses, 2))
    centers = rng.normal(0.0, s, size=(params.num_decisions, 2))
    inside = np.linalg.norm(poses[:, None, :] - centers[None], axis=2) <= params.decision_radius
    regions = [list(np.flatnonzero(inside[:, r])) for r in range(params.num_decisions)]

    theta = rng.uniform(0.0, np.pi, size=params.num_guarded_moves)
    direction = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    anchor = rng.normal(0.0, s, size=(params.num_guarded_moves, 2))
    along = np.einsum("htd,td->ht", poses[:, None, :] - anchor[None], direction) + 3 * s
    bins = np.clip(np.floor(along / (6 * s / params.num_bins)), 0, params.num_bins - 1).astype(np.int64)

    meta = {"generator": "localization2d", "seed": int(seed), "params": asdict(params)}
    return make_instance([1] * params.num_hypotheses, bins, regions,
                         arities=[params.num_bins] * params.num_guarded_moves,
                         hypotheses=[f"pose{i}" for i in range(params.num_hypotheses)],
                         tests=[f"move{j}" for j in range(params.num_guarded_moves)],
                         region_ids=[f"grasp{r}" for r in range(params.num_decisions)],
                         metadata=meta, coverage=params.coverage)
