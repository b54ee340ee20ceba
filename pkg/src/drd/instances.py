"""Instance documents: canonical JSON serialization and results export.

Weights are stored as exact fraction strings so that a saved instance loads
back to the identical rational prior.  The writer emits a fixed layout (one
hypothesis, test, outcome row or region per line, stable key order, trailing
newline), which makes save -> load -> save byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .core import ProblemInstance, make_instance
from .errors import InstanceFormatError

SCHEMA_VERSION = 1
RESULT_COLUMNS = ("instance_id", "seed", "policy", "k", "num_regions", "queries", "solved", "wall_ms")


def _frac_str(w: Fraction) -> str:
    return str(w.numerator) if w.denominator == 1 else f"{w.numerator}/{w.denominator}"


def instance_to_document(instance: ProblemInstance) -> dict:
    hyp = instance.hypotheses
    return {
        "schema_version": SCHEMA_VERSION,
        "hypotheses": [{"id": h, "weight": _frac_str(w)} for h, w in zip(hyp, instance.weights)],
        "tests": [{"id": t, "arity": int(a)} for t, a in zip(instance.tests, instance.arities)],
        "outcomes": [[int(v) for v in row] for row in instance.outcomes],
        "regions": [{"id": rid, "hypothesis_ids": [hyp[h] for h in sorted(r)]}
                    for rid, r in zip(instance.region_ids, instance.regions)],
        "metadata": instance.metadata,
    }


def _line(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "), sort_keys=True)


def _block(name: str, items: list) -> str:
    if not items:
        return f'  "{name}": []'
    body = ",\n".join("    " + _line(x) for x in items)
    return f'  "{name}": [\n{body}\n  ]'


def dumps_document(doc: dict) -> str:
    parts = [
        f'  "schema_version": {int(doc["schema_version"])}',
        _block("hypotheses", doc["hypotheses"]),
        _block("tests", doc["tests"]),
        _block("outcomes", doc["outcomes"]),
        _block("regions", doc["regions"]),
        '  "metadata": ' + _line(doc.get("metadata") or {}),
    ]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def dumps_instance(instance: ProblemInstance) -> str:
    return dumps_document(instance_to_document(instance))


def save_instance(instance: ProblemInstance, path) -> dict:
    """Write the canonical document for ``instance``; returns the document."""
    doc = instance_to_document(instance)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_document(doc))
    return doc


def parse_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode("utf-8"))
        raise InstanceFormatError(f"parse error at byte offset {offset}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    version = doc.get("schema_version")
    if version is None:
        raise InstanceFormatError("missing schema_version")
    if version != SCHEMA_VERSION:
        raise InstanceFormatError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    for key in ("hypotheses", "tests", "outcomes", "regions"):
        if not isinstance(doc.get(key), list):
            raise InstanceFormatError(f"field {key!r} must be a list")
    return doc


def document_to_instance(doc: dict, coverage: str = "strict") -> ProblemInstance:
    try:
        hyp_ids = [str(h["id"]) for h in doc["hypotheses"]]
        weights = [Fraction(str(h["weight"])) for h in doc["hypotheses"]]
        tests = [str(t["id"]) for t in doc["tests"]]
        arities = [int(t["arity"]) for t in doc["tests"]]
        pos = {h: i for i, h in enumerate(hyp_ids)}
        regions, region_ids = [], []
        for r in doc["regions"]:
            region_ids.append(str(r["id"]))
            regions.append([pos[str(h)] for h in r["hypothesis_ids"]])
    except KeyError as e:
        raise InstanceFormatError(f"missing or unknown field {e}") from e
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise InstanceFormatError(f"malformed field: {e}") from e
    outcomes = doc["outcomes"]
    if len(outcomes) != len(hyp_ids) or any(not isinstance(row, list) or len(row) != len(tests)
                                            for row in outcomes):
        raise InstanceFormatError("outcome matrix must have one row per hypothesis and one column per test")
    if not tests:
        outcomes = [[] for _ in hyp_ids]
    return make_instance(weights, np.array(outcomes, dtype=np.int64).reshape(len(hyp_ids), len(tests)),
                         regions, arities=arities, hypotheses=hyp_ids, tests=tests,
                         region_ids=region_ids, metadata=doc.get("metadata") or {}, coverage=coverage)


def loads_instance(text: str, coverage: str = "strict") -> ProblemInstance:
    return document_to_instance(parse_document(text), coverage=coverage)


def load_instance(path, coverage: str = "strict") -> ProblemInstance:
    """Read, parse and validate an instance document."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_instance(fh.read(), coverage=coverage)


# ------------------------------------------------------------------ results

@dataclass(frozen=True)
class ResultRow:
    instance_id: str
    seed: int
    policy: str
    k: Optional[int]
    num_regions: int
    queries: int
    solved: bool
    wall_ms: Optional[float] = None

    def as_row(self) -> list:
        return [
            self.instance_id,
            str(self.seed),
            self.policy,
            "" if self.k is None else str(self.k),
            str(self.num_regions),
            str(self.queries),
            "true" if self.solved else "false",
            "" if self.wall_ms is None else f"{self.wall_ms:.3f}",
        ]


def write_results(evaluations: Iterable[ResultRow], path) -> int:
    """Write result rows as CSV with a fixed header; returns the number of rows."""
    rows = list(evaluations)
    if not rows:
        raise ValueError("no evaluations to write")
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow(r.as_row())
    return len(rows)


def read_results(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
