"""Command-line entry point ``coarse-minor``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .distortion import ProfilePolicy, approximate_distortion
from .fatmodel import FatModel, ModelError, PatternGraph, verify_fat_model
from .generators import generate
from .graph import components, read_edge_list, write_edge_list
from .minor import has_minor, parse_pattern
from .partition import (LayeredPartition, ProfileError, build_partition, compute_constants,
                        quasi_isometry, verify_partition)
from .theta import (DispersionQuery, PreconditionError, SearchBudgetExceeded, audit_attachments,
                    audit_boundary, find_dispersed_tuple, theta_from_dispersion)

OK, FAILED, BAD_INPUT, BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=1)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_graph(path: str):
    try:
        return read_edge_list(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read graph {path}: {exc}") from exc


def _profile_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=["paper", "scaled"], default="paper")
    p.add_argument("--N", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--Lp", type=int)
    p.add_argument("--R0", type=int)


# ---------------------------------------------------------------- commands

def cmd_gen(a) -> int:
    g = generate(a.spec)
    if a.output:
        write_edge_list(g, a.output)
    else:
        from .graph import format_edge_list
        sys.stdout.write(format_edge_list(g))
    return OK


def cmd_partition(a) -> int:
    g = _load_graph(a.graph)
    overrides = {k: getattr(a, k) for k in ("N", "L", "Lp", "R0") if getattr(a, k) is not None}
    prof = compute_constants(a.t, a.K, a.profile, **overrides)
    results = []
    status = OK
    for comp in components(g):
        sub, ids = g.induced(comp)
        root = None
        if a.root is not None and a.root in set(ids.tolist()):
            root = int(np.searchsorted(ids, a.root))
        out = build_partition(sub, prof, root)
        doc = {"component": ids.tolist()}
        if out.is_witness:
            doc.update({"outcome": "witness", "source": out.source,
                        "model": out.witness.to_json()})
        else:
            rep = verify_partition(out.partition)
            doc.update({"outcome": "partition", "partition": out.partition.to_json(),
                        "verification": rep.to_json()})
            if not rep.valid:
                status = FAILED
        if a.dump_merge:
            doc["merges"] = out.merges
        results.append(doc)
    if len(results) == 1:
        doc = results[0]
        del doc["component"]
    else:
        doc = {"components": results}
    doc["schema"] = "coarse-minor/partition-run/1"
    _emit(doc, a.output)
    return status


def cmd_verify_model(a) -> int:
    g = _load_graph(a.graph)
    doc = _load_json(a.model)
    if "pattern" not in doc and "model" in doc:
        doc = doc["model"]
    try:
        model = FatModel.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model: {exc}") from exc
    rep = verify_fat_model(g, model, a.K)
    _emit({"schema": "coarse-minor/fatness-report/1", **rep.to_json()}, a.output)
    return OK if rep.valid else FAILED


def cmd_verify_qi(a) -> int:
    g = _load_graph(a.graph)
    doc = _load_json(a.partition)
    if "partition" in doc:
        doc = doc["partition"]
    try:
        lp = LayeredPartition.from_json(doc, g)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed partition: {exc}") from exc
    rep = quasi_isometry(lp, samples=a.samples, seed=a.seed)
    out = rep.to_json()
    if a.structure:
        prep = verify_partition(lp)
        out["partition"] = prep.to_json()
        ok = rep.valid and prep.valid
    else:
        ok = rep.valid
    _emit(out, a.output)
    return OK if ok else FAILED


def cmd_find_theta(a) -> int:
    g = _load_graph(a.graph)
    q = _load_json(a.query)
    op = q.get("op", "dispersion")
    try:
        if op == "dispersion":
            res = theta_from_dispersion(DispersionQuery(g, q["X"], q["Y"], int(q["t"]), int(q["K"])),
                                        q.get("hint"))
            doc = res.to_json()
        elif op == "boundary":
            doc = audit_boundary(g, q["X"], int(q["K"]), q["C"], int(q["t"])).to_json()
        elif op == "attachments":
            doc = audit_attachments(g, q["X_sets"], int(q["K"]), int(q["t"])).to_json()
        elif op == "dispersed":
            tup = find_dispersed_tuple(g, q["S"], int(q["t"]), int(q["sep"]),
                                       int(q.get("budget", 2_000_000)))
            doc = {"outcome": "tuple" if tup is not None else "none",
                   "tuple": tup.tolist() if tup is not None else None}
        else:
            raise InputError(f"unknown query op {op!r}")
    except KeyError as exc:
        raise InputError(f"query is missing {exc}") from exc
    doc["schema"] = "coarse-minor/audit-outcome/1"
    _emit(doc, a.output)
    return OK


def cmd_check_minor(a) -> int:
    g = _load_graph(a.graph)
    if a.pattern.endswith(".json"):
        pattern = PatternGraph.from_json(_load_json(a.pattern))
    else:
        pattern = parse_pattern(a.pattern)
    res = has_minor(g, pattern, a.budget)
    _emit(res.to_json(), a.output)
    return BUDGET if res.answer is None else OK


def cmd_approx(a) -> int:
    g = _load_graph(a.graph)
    policy = ProfilePolicy(a.profile, a.N)
    rep = approximate_distortion(g, a.t, policy, exhaustive=a.exhaustive, paranoid=a.paranoid,
                                 jobs=a.jobs, minor_budget=a.budget)
    _emit(rep.to_json(), a.output)
    if a.paranoid and not rep.paranoid["valid"]:
        return FAILED
    if rep.k_min is None:
        return BUDGET if any(x.outcome == "unknown" for x in rep.attempts.values()) else FAILED
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coarse-minor",
                                description="Fat minors, layered partitions and K_{2,t} distortion.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", help="write a generated graph as an edge list")
    s.add_argument("spec")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("partition", help="build and verify a layered partition")
    s.add_argument("graph")
    s.add_argument("--t", type=int, default=3)
    s.add_argument("--K", type=int, default=1)
    _profile_args(s)
    s.add_argument("--root", type=int)
    s.add_argument("--dump-merge", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("verify-model", help="check a fat model against a host graph")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("model")
    s.add_argument("graph")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_verify_model)

    s = sub.add_parser("verify-qi", help="check the bag map of a stored partition")
    s.add_argument("partition")
    s.add_argument("graph")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--structure", action="store_true", help="also re-verify the partition")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_verify_qi)

    s = sub.add_parser("find-theta", help="run a fat theta audit from a JSON query")
    s.add_argument("query")
    s.add_argument("graph")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_find_theta)

    s = sub.add_parser("check-minor", help="exact minor test with certificate")
    s.add_argument("--pattern", required=True)
    s.add_argument("--budget", type=int, default=2_000_000)
    s.add_argument("graph")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_check_minor)

    s = sub.add_parser("approx", help="approximate the K_{2,t} distortion")
    s.add_argument("graph")
    s.add_argument("--t", type=int, default=3)
    s.add_argument("--profile", choices=["paper", "scaled"], default="paper")
    s.add_argument("--N", type=int)
    s.add_argument("--exhaustive", action="store_true")
    s.add_argument("--paranoid", action="store_true")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--budget", type=int, default=2_000_000)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_approx)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.func(a)
    except SearchBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BUDGET
    except (InputError, PreconditionError, ProfileError, ModelError, ValueError,
            IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
