"""Command-line front end: generate, run, validate, interactive.

Exit codes: 0 success, 1 a check or assertion failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Evidence, apply_test, consistent_mask, solved_region
from .errors import DRDError, InfeasiblePolicy, InstanceFormatError, ValidationError
from .generators import (ClusteredParams, Localization2DParams, clustered_from_embeddings,
                         generate_clustered, generate_localization_2d)
from .hypergraph import build_index, cardinality_k
from .instances import ResultRow, load_instance, save_instance, write_results
from .policies import LazyState, PolicyKind, expected_cost, make_policy, run_policy

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _say(args, *parts):
    if not getattr(args, "quiet", False):
        print(*parts)


def _summary(instance, k=None) -> str:
    idx = build_index(instance, k=k)
    return (f"|H|={instance.num_hypotheses} |T|={instance.num_tests} |R|={instance.num_regions} "
            f"|G|={idx.num_subregions} k={idx.k}")


def _load(args):
    try:
        return load_instance(args.instance, coverage=args.coverage)
    except FileNotFoundError:
        raise UsageError(f"no such instance file: {args.instance}")
    except (InstanceFormatError, ValidationError) as e:
        raise UsageError(f"cannot load {args.instance}: {e}")


def _check_k(instance, k):
    if k is not None:
        formula = cardinality_k(instance)
        if k < formula:
            raise UsageError(f"--k {k} is below the formula value {formula} for this instance")


# ----------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    try:
        if args.kind == "clustered":
            params = ClusteredParams(num_points=args.points, dim=args.dim, num_clusters=args.clusters,
                                     assign_alpha=args.alpha, num_tests=args.tests)
            inst = generate_clustered(params, args.seed)
        elif args.kind == "localization2d":
            params = Localization2DParams(num_hypotheses=args.hypotheses, gaussian_sigma=args.sigma,
                                          num_decisions=args.decisions, decision_radius=args.radius,
                                          num_guarded_moves=args.moves, num_bins=args.bins,
                                          coverage=args.coverage)
            inst = generate_localization_2d(params, args.seed)
        else:
            inst = clustered_from_embeddings(args.csv, args.clusters, args.alpha, args.tests, args.seed)
    except (ValidationError, InstanceFormatError) as e:
        raise UsageError(str(e))
    except FileNotFoundError as e:
        raise UsageError(str(e))
    save_instance(inst, args.output)
    _say(args, f"wrote {args.output}: {_summary(inst)}")
    return EXIT_OK


# ---------------------------------------------------------------------- run

def cmd_run(args) -> int:
    inst = _load(args)
    _check_k(inst, args.k)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    kinds = [p.strip() for p in args.policies.split(",") if p.strip()]
    if not kinds:
        raise UsageError("--policies must name at least one policy")
    valid = {k.value for k in PolicyKind}
    for p in kinds:
        if p not in valid:
            raise UsageError(f"unknown policy {p!r}; choose from {', '.join(sorted(valid))}")
    exact = args.arith == "rational"
    try:
        policies = [make_policy(p, inst, seed=args.seed, exact=exact, k=args.k) for p in kinds]
    except ValidationError as e:
        raise UsageError(str(e))

    if args.exhaustive:
        truths = list(range(inst.num_hypotheses))
    else:
        rng = np.random.default_rng(args.seed)
        truths = [int(h) for h in rng.choice(inst.num_hypotheses, size=args.trials, p=inst.prior)]

    instance_id = Path(args.instance).stem
    rows, warned = [], False
    for h in truths:
        for name, pol in zip(kinds, policies):
            t0 = time.perf_counter()
            try:
                tr = run_policy(inst, pol, h)
                queries, solved = len(tr), solved_region(inst, consistent_mask(
                    inst, Evidence(tuple((s.test, s.outcome) for s in tr.steps)))) is not None
            except InfeasiblePolicy as e:
                queries = len(e.trace) if e.trace is not None else 0
                solved = False
                if not warned:
                    print(f"warning: {e} (policy {name}, hypothesis {inst.hypotheses[h]})", file=sys.stderr)
                    warned = True
            wall = (time.perf_counter() - t0) * 1000 if args.timing else None
            rows.append(ResultRow(instance_id, args.seed, name, pol.k, inst.num_regions, queries, solved, wall))

    write_results(rows, args.out)
    _say(args, f"wrote {len(rows)} rows to {args.out}")
    for name in kinds:
        q = [r.queries for r in rows if r.policy == name]
        ok = sum(r.solved for r in rows if r.policy == name)
        _say(args, f"{name}: mean queries {np.mean(q):.4f} solved {ok}/{len(q)}")
    if args.exhaustive:
        for name, pol in zip(kinds, policies):
            try:
                ev = expected_cost(inst, pol)
            except InfeasiblePolicy:
                _say(args, f"{name}: expected cost undefined (infeasible for some hypothesis)")
                continue
            _say(args, f"{name}: expected_cost {ev.expected_cost!r} ({ev.expected_cost_exact})")
    return EXIT_OK


# ----------------------------------------------------------------- validate

def _parse_seeds(text: str) -> range:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return range(int(a), int(b))
        return range(int(text))
    except ValueError:
        raise UsageError(f"--seeds expects N or A..B, got {text!r}")


def cmd_validate(args) -> int:
    from . import oracle

    seeds = _parse_seeds(args.seeds) if args.seeds else range(20 if args.quick else 100)
    exact = args.arith == "rational"
    if args.k is not None:
        if args.k > oracle.MAX_BRUTE_K:
            raise UsageError(f"--k {args.k} exceeds the brute-force limit {oracle.MAX_BRUTE_K}")
        for check, seed, inst in oracle.suite_instances(seeds):
            formula = cardinality_k(inst)
            if args.k < formula:
                raise UsageError(f"--k {args.k} is below the formula value {formula} "
                                 f"({check} instance, seed {seed})")
    walks, chains = (5, 10) if args.quick else (20, 50)
    reports = [
        oracle.check_weight_equivalence(seeds, exact=exact, k=args.k),
        oracle.check_theorem1(seeds, walks, exact=exact, k=args.k),
        oracle.check_adaptive_properties(seeds, chains, exact=exact, k=args.k),
        oracle.check_theorem3(seeds, k=args.k),
    ]
    if args.k is None:
        reports.extend(oracle.check_reductions(seeds))
    failed = False
    for rep in reports:
        print(rep.summary())
        if not rep.passed:
            failed = True
            first = rep.counterexamples[0]
            print(f"  first counterexample (replay with --seeds {first['seed']}..{first['seed'] + 1}): {first}")
    return EXIT_FAIL if failed else EXIT_OK


# -------------------------------------------------------------- interactive

def _labels(instance, t):
    meta = (instance.metadata or {}).get("labels") or {}
    entry = meta.get(instance.tests[t]) if isinstance(meta, dict) else None
    arity = instance.arities[t]
    question = f"Outcome of test {instance.tests[t]}?"
    outcomes = [str(o) for o in range(arity)]
    if isinstance(entry, dict):
        question = entry.get("question", question)
        if isinstance(entry.get("outcomes"), list) and len(entry["outcomes"]) == arity:
            outcomes = [str(x) for x in entry["outcomes"]]
    elif isinstance(entry, str):
        question = entry
    return question, outcomes


def interactive_session(instance, policy, stdin, stdout) -> int:
    """Ask the selected tests on ``stdout`` and read answers from ``stdin``."""
    def out(line=""):
        print(line, file=stdout, flush=True)

    evidence = Evidence()
    lazy = LazyState() if policy.lazy and policy.kind is not PolicyKind.VOI else None
    history = []
    full = policy.evaluator.weight(np.ones(policy.selector.num_hypotheses, dtype=bool)) \
        if policy.index is not None else None

    def status():
        mask = consistent_mask(instance, evidence)
        mass = float(instance.prior[mask].sum())
        line = f"status: answers={len(evidence)} |V|={int(mask.sum())} remaining_mass={mass:.6g}"
        if full is not None:
            frac = float(policy.objective(mask) / full) if full else 1.0
            line += f" cut_fraction={frac:.6g}"
        out(line)

    while True:
        mask = consistent_mask(instance, evidence)
        if policy.done(instance, mask):
            r = solved_region(instance, mask)
            if r is None:
                out(f"DONE after {len(evidence)} questions: policy stopped without a single decision")
            else:
                out(f"DECISION: {instance.region_ids[r]} after {len(evidence)} questions")
            return EXIT_OK
        try:
            t, _, new_lazy = policy.next_test(evidence, lazy.copy() if lazy is not None else None)
        except InfeasiblePolicy as e:
            out(f"STUCK: {e}")
            return EXIT_FAIL
        if t is None:
            out("STUCK: no remaining test can narrow down the answer")
            return EXIT_FAIL
        question, names = _labels(instance, t)
        choices = ", ".join(f"{o}={n}" for o, n in enumerate(names))
        while True:
            out(f"Q: [{instance.tests[t]}] {question} ({choices})")
            line = stdin.readline()
            if not line:
                out("input ended before a decision was reached")
                return EXIT_FAIL
            word = line.strip().lower()
            if word == "quit":
                out("quit")
                return EXIT_OK
            if word == "status":
                status()
                continue
            if word == "undo":
                if not history:
                    out("nothing to undo")
                    continue
                evidence, lazy = history.pop()
                out("undone")
                break
            try:
                o = int(word)
            except ValueError:
                out(f"please answer with an outcome id 0..{len(names) - 1}, or undo/status/quit")
                continue
            if not 0 <= o < len(names):
                out(f"outcome must be between 0 and {len(names) - 1}")
                continue
            nxt = apply_test(evidence, t, o)
            if not consistent_mask(instance, nxt).any():
                out("contradiction: no hypothesis matches all answers given so far plus this one; "
                    "answer again or type undo to revise an earlier answer")
                continue
            history.append((evidence, lazy))
            evidence, lazy = nxt, new_lazy
            break


def cmd_interactive(args) -> int:
    inst = _load(args)
    _check_k(inst, args.k)
    try:
        pol = make_policy(args.policy, inst, seed=args.seed, exact=args.arith == "rational", k=args.k)
    except ValidationError as e:
        raise UsageError(str(e))
    return interactive_session(inst, pol, sys.stdin, sys.stdout)


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="drd", description="Decision region determination by hyperedge cutting.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic instance")
    gsub = g.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    c = gsub.add_parser("clustered", help="comparison search over clustered points")
    c.add_argument("--points", type=int, default=200)
    c.add_argument("--dim", type=int, default=2)
    c.add_argument("--clusters", type=int, default=12)
    c.add_argument("--alpha", type=int, default=1)
    c.add_argument("--tests", type=int, default=100)
    loc = gsub.add_parser("localization2d", help="planar localization with guarded moves")
    loc.add_argument("--hypotheses", type=int, default=500)
    loc.add_argument("--decisions", type=int, default=20)
    loc.add_argument("--moves", type=int, default=60)
    loc.add_argument("--sigma", type=float, default=0.2)
    loc.add_argument("--radius", type=float, default=0.1)
    loc.add_argument("--bins", type=int, default=4)
    loc.add_argument("--coverage", choices=["strict", "wrap"], default="wrap")
    e = gsub.add_parser("embeddings", help="comparison search over points from a CSV")
    e.add_argument("--csv", required=True)
    e.add_argument("--clusters", type=int, default=12)
    e.add_argument("--alpha", type=int, default=1)
    e.add_argument("--tests", type=int, default=100)
    for sp in (c, loc, e):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-o", "--output", required=True)
        sp.add_argument("--quiet", action="store_true")
        sp.set_defaults(func=cmd_generate)

    def common(sp):
        sp.add_argument("--arith", choices=["float", "rational"], default="float")
        sp.add_argument("--coverage", choices=["strict", "wrap"], default="strict")
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--quiet", action="store_true")

    r = sub.add_parser("run", help="run policies against sampled true hypotheses")
    r.add_argument("instance")
    r.add_argument("--policies", default="hec")
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--exhaustive", action="store_true", help="use every hypothesis once as the truth")
    r.add_argument("--out", default="results.csv")
    r.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    common(r)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="run the oracle property checks")
    v.add_argument("--seeds", default=None, help="N or A..B (half-open)")
    v.add_argument("--quick", action="store_true")
    v.add_argument("--arith", choices=["float", "rational"], default="float")
    v.add_argument("--k", type=int, default=None)
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_validate)

    i = sub.add_parser("interactive", help="answer the selected questions yourself")
    i.add_argument("instance")
    i.add_argument("--policy", default="hec", choices=[k.value for k in PolicyKind])
    common(i)
    i.set_defaults(func=cmd_interactive)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"drd: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DRDError as e:
        print(f"drd: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
