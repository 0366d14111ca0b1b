"""Approximate the distortion of embedding a graph into a K_{2,t}-minor-free graph.

For each candidate fatness ``K`` the layered partition is built at fatness
``3K``.  A builder witness (a fat theta) is subdivided into a ``K``-fat
``K_{2,t}``; a partition whose quotient contains ``K_{2,t}`` as a minor is
converted into a ``K``-fat ``K_{2,t}`` through a minimal 2-connected quotient
subgraph.  Any other partition is a success, and the smallest successful
``K`` is reported together with the embedding and the witness from ``K - 1``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .fatmodel import FatModel, PatternGraph, subdivide_model, verify_fat_model
from .graph import Graph, components
from .minor import has_minor
from .partition import (ConstantsProfile, LayeredPartition, ProfileError, build_partition,
                        compose_with_minor, compute_constants, extract_fat_model,
                        quasi_isometry, verify_partition)

log = logging.getLogger(__name__)

REPORT_SCHEMA = "coarse-minor/distortion-report/1"


@dataclass(frozen=True)
class ProfilePolicy:
    """How to pick construction constants for a build at fatness ``k``."""

    mode: str = "paper"
    N: int | None = None

    def __call__(self, t: int, k: int) -> ConstantsProfile:
        if self.mode == "paper":
            return compute_constants(t, k, "paper")
        return compute_constants(t, k, "scaled", N=self.N)

    def to_json(self) -> dict:
        return {"mode": self.mode, "N": self.N}


@dataclass
class Attempt:
    K: int
    outcome: str                      # success | failure | unknown | error
    build_fatness: int
    partition: LayeredPartition | None = None
    witness: FatModel | None = None
    provenance: str = ""
    minor_nodes: int = 0
    message: str = ""

    def to_json(self) -> dict:
        doc = {"K": self.K, "outcome": self.outcome, "build_fatness": self.build_fatness,
               "provenance": self.provenance, "minor_nodes_explored": self.minor_nodes}
        if self.message:
            doc["message"] = self.message
        if self.partition is not None:
            doc["quotient"] = {"nodes": len(self.partition.bags),
                               "edges": [list(e) for e in self.partition.h_edges],
                               "profile": self.partition.profile.to_json()}
        if self.witness is not None:
            doc["witness"] = self.witness.to_json()
        return doc


@dataclass
class EmbeddingCheck:
    pairs_checked: int
    exhaustive: bool
    max_expansion: float
    max_contraction: float
    violations: int

    def to_json(self) -> dict:
        return {"pairs_checked": self.pairs_checked, "exhaustive": self.exhaustive,
                "max_expansion": self.max_expansion, "max_contraction": self.max_contraction,
                "violations": self.violations}


@dataclass
class DistortionReport:
    t: int
    k_min: int | None
    attempts: dict[int, Attempt]
    policy: ProfilePolicy
    embedding: np.ndarray | None = None
    augmented: Graph | None = None
    qi: dict | None = None
    augmented_check: EmbeddingCheck | None = None
    paranoid: dict | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def lower_bound_witness(self) -> FatModel | None:
        if self.k_min is None or self.k_min <= 1:
            return None
        prev = self.attempts.get(self.k_min - 1)
        return prev.witness if prev is not None else None

    @property
    def success(self) -> Attempt | None:
        return self.attempts.get(self.k_min) if self.k_min is not None else None

    def to_json(self) -> dict:
        m = self.qi["M_measured"] if self.qi else None
        doc = {
            "schema": REPORT_SCHEMA, "t": self.t, "K_min": self.k_min,
            "profile_policy": self.policy.to_json(),
            "attempts": [self.attempts[k].to_json() for k in sorted(self.attempts)],
            "lower_bound_witness": (self.lower_bound_witness.to_json()
                                    if self.lower_bound_witness is not None else None),
            "bracket": {"lower": f"c*{self.k_min - 1}" if self.k_min else None,
                        "upper": m * self.k_min if (m is not None and self.k_min) else None,
                        "note": "c is an unevaluated universal constant"},
            "qi": self.qi,
            "warnings": self.warnings,
        }
        if self.embedding is not None:
            doc["embedding"] = self.embedding.tolist()
            doc["augmented"] = {"nodes": self.augmented.n,
                                "edges": [list(e) for e in self.augmented.edges()],
                                "check": self.augmented_check.to_json()}
        if self.paranoid is not None:
            doc["paranoid"] = self.paranoid
        return doc


# ------------------------------------------------------------ single attempt

def _certificate_edges(model: FatModel, h: Graph) -> list[tuple[int, int]]:
    """Quotient edges used by a plain minor model: internal edges of each branch set plus path edges."""
    out = set()
    for s in model.branch_sets:
        inside = set(s.tolist())
        for x in s.tolist():
            for y in h.neighbors(x).tolist():
                if y in inside and x < y:
                    out.add((x, y))
    for p in model.branch_paths:
        out.add((min(p[0], p[-1]), max(p[0], p[-1])))
    return sorted(out)


def minimal_minor_subgraph(h: Graph, pattern: PatternGraph, edges: list[tuple[int, int]],
                           budget: int) -> tuple[list[tuple[int, int]], FatModel]:
    """Delete edges greedily (highest first) while the pattern stays a minor."""
    current = list(edges)
    best = has_minor(Graph.from_edges(h.n, current), pattern, budget)
    if best.answer is not True:
        raise RuntimeError("certificate subgraph lost the minor")
    for e in sorted(edges, reverse=True):
        trial = [f for f in current if f != e]
        res = has_minor(Graph.from_edges(h.n, trial), pattern, budget)
        if res.answer is True:
            current, best = trial, res
    return current, best.certificate


def _witness_from_quotient(lp: LayeredPartition, cert: FatModel, k: int,
                           budget: int) -> FatModel:
    h = lp.quotient()
    j_edges, minor = minimal_minor_subgraph(h, cert.pattern, _certificate_edges(cert, h), budget)
    nodes = sorted({v for e in j_edges for v in e})
    inner = extract_fat_model(lp, j_edges, k)
    return compose_with_minor(inner, nodes, minor, j_edges)


def run_attempt(g: Graph, t: int, k: int, policy: ProfilePolicy,
                minor_budget: int = 2_000_000) -> Attempt:
    kb = 3 * k
    try:
        profile = policy(t, kb)
    except ValueError as exc:
        return Attempt(k, "error", kb, message=str(exc))
    if not profile.valid:
        return Attempt(k, "error", kb, message="constants profile is not valid")
    try:
        out = build_partition(g, profile)
    except ProfileError as exc:
        return Attempt(k, "error", kb, message=str(exc))
    if out.is_witness:
        return Attempt(k, "failure", kb, witness=subdivide_model(g, out.witness, k),
                       provenance=f"builder:{out.source}")
    lp = out.partition
    res = has_minor(lp.quotient(), PatternGraph.k2t(t), minor_budget)
    if res.answer is None:
        return Attempt(k, "unknown", kb, partition=lp, minor_nodes=res.nodes_explored,
                       message="minor check ran out of budget")
    if res.answer is False:
        return Attempt(k, "success", kb, partition=lp, minor_nodes=res.nodes_explored)
    witness = _witness_from_quotient(lp, res.certificate, k, minor_budget)
    return Attempt(k, "failure", kb, partition=lp, witness=witness,
                   provenance="quotient-minor:extraction", minor_nodes=res.nodes_explored)


def _check_attempt(g: Graph, a: Attempt) -> list[str]:
    problems = []
    if a.witness is not None:
        rep = verify_fat_model(g, a.witness, a.K)
        if not rep.valid:
            problems.append(f"K={a.K}: witness fails the fatness verifier")
    return problems


# ------------------------------------------------------------------ embedding

def star_augment(h: Graph, phi) -> tuple[Graph, np.ndarray]:
    """Give every vertex its own node by hanging fresh leaves off shared nodes.

    The lowest-id preimage keeps the node; the others move, in id order, to
    new leaves numbered after the existing nodes.
    """
    phi = np.asarray(phi, dtype=np.int64)
    out = phi.copy()
    edges = list(h.edges())
    nxt = h.n
    order = np.argsort(phi, kind="stable")
    sorted_phi = phi[order]
    starts = np.flatnonzero(np.r_[True, sorted_phi[1:] != sorted_phi[:-1]])
    ends = np.r_[starts[1:], sorted_phi.size]
    for s, e in zip(starts, ends):
        node = int(sorted_phi[s])
        for v in order[s + 1:e]:
            edges.append((node, nxt))
            out[v] = nxt
            nxt += 1
    return Graph.from_edges(nxt, edges), out


def check_embedding(g: Graph, h: Graph, phi: np.ndarray, bound: int,
                    exhaustive_limit: int = 3000, samples: int = 100_000,
                    seed: int = 0) -> EmbeddingCheck:
    """Measure expansion and contraction of ``phi`` and count pairs breaking
    ``d_h <= 3 d_g`` or ``d_g <= (bound+1) d_h + bound``."""
    rng = np.random.default_rng(seed)
    exhaustive = g.n <= exhaustive_limit
    if exhaustive:
        sources = np.arange(g.n)
    else:
        sources = np.sort(rng.choice(g.n, size=max(1, min(g.n, math.isqrt(samples))),
                                     replace=False))
    per = max(1, samples // max(1, sources.size))
    checked = violations = 0
    exp = con = 0.0
    for s in sources:
        dg = _kernels.bfs(g.indptr, g.indices, np.array([s]), None, -1)
        dh = _kernels.bfs(h.indptr, h.indices, np.array([phi[s]]), None, -1)
        tg = np.arange(s + 1, g.n) if exhaustive else rng.integers(0, g.n, size=per)
        tg = tg[tg != s]
        if tg.size == 0:
            continue
        a, b = dg[tg], dh[phi[tg]]
        checked += tg.size
        violations += int(((b > 3 * a) | (a > (bound + 1) * b + bound)).sum())
        exp = max(exp, float((b / a).max()))
        con = max(con, float((a / np.maximum(b, 1)).max()))
    return EmbeddingCheck(checked, exhaustive, exp, con, violations)


# ----------------------------------------------------------------- main loop

def _schedule_run(run: Callable[[list[int]], None], attempts: dict[int, Attempt], n: int,
                  exhaustive: bool) -> int | None:
    ok = lambda k: attempts[k].outcome == "success"
    if exhaustive:
        for k in range(1, n + 1):
            run([k])
            if ok(k):
                return k
        return None
    powers = []
    k = 1
    while k < n:
        powers.append(k)
        k *= 2
    powers.append(n)
    hi = None
    for k in powers:
        run([k])
        if ok(k):
            hi = k
            break
    if hi is None:
        return None
    lo = max((p for p in powers if p < hi), default=0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        run([mid])
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def approximate_distortion(g: Graph, t: int = 3, policy: ProfilePolicy | None = None, *,
                           exhaustive: bool = False, paranoid: bool = False, jobs: int = 1,
                           minor_budget: int = 2_000_000, qi_samples: int = 100_000
                           ) -> DistortionReport:
    if t < 3:
        raise ValueError("t must be at least 3")
    if g.n == 0 or len(components(g)) != 1:
        raise ValueError("the input graph must be nonempty and connected")
    policy = policy or ProfilePolicy()
    attempts: dict[int, Attempt] = {}
    warnings: list[str] = []
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None

    def run(ks: list[int]) -> None:
        todo = [k for k in ks if k not in attempts]
        if pool is not None and len(todo) > 1:
            results = list(pool.map(run_attempt, [g] * len(todo), [t] * len(todo), todo,
                                    [policy] * len(todo), [minor_budget] * len(todo)))
        else:
            results = [run_attempt(g, t, k, policy, minor_budget) for k in todo]
        for a in results:
            attempts[a.K] = a
            if a.outcome in ("unknown", "error"):
                msg = f"K={a.K}: {a.outcome}: {a.message}"
                log.warning(msg)
                warnings.append(msg)

    try:
        if pool is not None and exhaustive:
            # evaluate in batches of ``jobs`` but keep the literal first-success rule
            k_min = None
            for start in range(1, g.n + 1, jobs):
                run(list(range(start, min(g.n, start + jobs - 1) + 1)))
                hits = [k for k in range(start, min(g.n, start + jobs - 1) + 1)
                        if attempts[k].outcome == "success"]
                if hits:
                    k_min = hits[0]
                    break
        else:
            k_min = _schedule_run(run, attempts, g.n, exhaustive)
    finally:
        if pool is not None:
            pool.shutdown()

    report = DistortionReport(t, k_min, attempts, policy, warnings=warnings)
    for a in attempts.values():
        for msg in _check_attempt(g, a):
            raise AssertionError(msg)
    if k_min is not None:
        lp = attempts[k_min].partition
        qi = quasi_isometry(lp, samples=qi_samples)
        report.qi = qi.to_json()
        h2, phi2 = star_augment(lp.quotient(), lp.bag_of())
        report.embedding = phi2
        report.augmented = h2
        report.augmented_check = check_embedding(g, h2, phi2, qi.bound, samples=qi_samples)
    if paranoid:
        report.paranoid = paranoid_check(g, report, minor_budget)
    return report


def paranoid_check(g: Graph, report: DistortionReport, minor_budget: int = 2_000_000) -> dict:
    """Re-verify every stored certificate from scratch."""
    problems: list[str] = []
    checked = 0
    for k, a in sorted(report.attempts.items()):
        if a.witness is not None:
            checked += 1
            rep = verify_fat_model(g, a.witness, k)
            if not rep.valid:
                problems.append(f"K={k}: witness invalid")
            if a.witness.pattern.n != report.t + 2:
                problems.append(f"K={k}: witness pattern is not K_2,{report.t}")
        if a.partition is not None:
            checked += 1
            prep = verify_partition(a.partition, k=a.build_fatness)
            if not prep.valid:
                problems.append(f"K={k}: partition invalid: {prep.violations[:3]}")
        if a.outcome == "success":
            res = has_minor(a.partition.quotient(), PatternGraph.k2t(report.t), minor_budget * 4)
            if res.answer is not False:
                problems.append(f"K={k}: quotient minor re-check returned {res.status}")
    if report.k_min is not None and report.k_min > 1 and report.lower_bound_witness is None:
        problems.append("missing lower-bound witness")
    if report.qi is not None and not report.qi["valid"]:
        problems.append("quasi-isometry check failed")
    if report.augmented_check is not None:
        if report.augmented_check.violations:
            problems.append("augmented embedding violates its inequalities")
        if np.unique(report.embedding).size != g.n:
            problems.append("augmented embedding is not injective")
    return {"checked": checked, "problems": problems, "valid": not problems}
