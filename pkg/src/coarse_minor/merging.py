"""Coarsen a family of disjoint vertex sets until they are far apart.

The loop starts from the input family at level ``r``.  While two classes sit
closer than ``2L + d`` it merges the pair whose lowest vertex ids are
lexicographically least, then raises the level to ``r + floor(m*d/2)`` after
``m`` merges.  All distances are taken inside the given host (optionally
restricted to an ``allowed`` mask).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import INF, Graph, as_vertex_set, diameter_of


class MergeError(ValueError):
    pass


@dataclass
class MergeProblem:
    host: Graph
    q_family: list
    d: int
    r: int
    diameter_bound: int | None = None
    allowed: np.ndarray | None = None

    def __post_init__(self):
        self.q_family = [as_vertex_set(q) for q in self.q_family]


@dataclass
class MergeResult:
    p_family: list[np.ndarray]
    level: int
    provenance: list[list[int]]
    trace: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": "coarse-minor/merge-result/1",
            "level": self.level,
            "classes": [a.tolist() for a in self.p_family],
            "provenance": self.provenance,
            "trace": self.trace,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def level_after(r: int, d: int, merges: int) -> int:
    return r + (merges * d) // 2


def _pairwise(problem: MergeProblem, cap: int) -> np.ndarray:
    """Distances between input classes, with anything ``>= cap`` stored as ``INF``."""
    g = problem.host
    q = problem.q_family
    n = len(q)
    out = np.full((n, n), INF, dtype=np.int64)
    for i in range(n):
        out[i, i] = 0
        dist = _kernels.bfs(g.indptr, g.indices, q[i], problem.allowed, max(cap - 1, 0))
        for j in range(n):
            if j != i:
                dj = dist[q[j]]
                dj = dj[dj >= 0]
                if dj.size:
                    out[i, j] = min(out[i, j], int(dj.min()))
    return np.minimum(out, out.T)


def merge_partition(problem: MergeProblem) -> MergeResult:
    q = problem.q_family
    n = len(q)
    if problem.d < 0 or problem.r < 0:
        raise MergeError("d and r must be nonnegative")
    seen = np.zeros(problem.host.n, dtype=np.bool_)
    for i, b in enumerate(q):
        if b.size == 0:
            raise MergeError(f"class {i} is empty")
        if np.any(seen[b]):
            raise MergeError(f"class {i} overlaps an earlier class")
        seen[b] = True
    if n == 0:
        return MergeResult([], problem.r, [], [])
    cap = 2 * level_after(problem.r, problem.d, n) + problem.d
    base = _pairwise(problem, cap)

    groups = [[i] for i in range(n)]
    mins = [int(b[0]) for b in q]
    merges = 0
    trace = []
    while True:
        level = level_after(problem.r, problem.d, merges)
        threshold = 2 * level + problem.d
        order = sorted(range(len(groups)), key=lambda a: mins[a])
        pick = None
        for ia, a in enumerate(order):
            for b in order[ia + 1:]:
                if base[np.ix_(groups[a], groups[b])].min() < threshold:
                    pick = (a, b)
                    break
            if pick:
                break
        if pick is None:
            break
        a, b = pick
        dist_ab = int(base[np.ix_(groups[a], groups[b])].min())
        trace.append({"step": merges, "level": level, "merged": [mins[a], mins[b]],
                      "distance": dist_ab})
        groups[a] = sorted(groups[a] + groups[b])
        mins[a] = min(mins[a], mins[b])
        del groups[b]
        del mins[b]
        merges += 1
    level = level_after(problem.r, problem.d, merges)
    fam = [np.sort(np.concatenate([q[i] for i in grp])) for grp in groups]
    order = sorted(range(len(fam)), key=lambda a: int(fam[a][0]))
    return MergeResult([fam[a] for a in order], level, [groups[a] for a in order], trace)


def check_merge_result(problem: MergeProblem, result: MergeResult) -> list[str]:
    """Re-verify the chain, separation and diameter guarantees; returns failures."""
    g = problem.host
    q = problem.q_family
    n = len(q)
    L = result.level
    fails = []
    if not (problem.r <= L <= problem.r + (n * problem.d) // 2):
        fails.append(f"level {L} outside [r, r + floor(nd/2)]")
    covered = sorted(i for grp in result.provenance for i in grp)
    if covered != list(range(n)):
        fails.append("provenance is not a partition of the input classes")
    for a, grp in zip(result.p_family, result.provenance):
        expect = np.sort(np.concatenate([q[i] for i in grp])) if grp else np.zeros(0, np.int64)
        if not np.array_equal(a, expect):
            fails.append("class differs from the union of its provenance")
    full = _pairwise(problem, INF)
    for idx, grp in enumerate(result.provenance):
        reach = {grp[0]}
        frontier = [grp[0]]
        while frontier:
            x = frontier.pop()
            for y in grp:
                if y not in reach and full[x, y] <= 2 * L:
                    reach.add(y)
                    frontier.append(y)
        if len(reach) != len(grp):
            fails.append(f"class {idx} is not chained with gaps <= {2 * L}")
    for a in range(len(result.provenance)):
        for b in range(a + 1, len(result.provenance)):
            dab = full[np.ix_(result.provenance[a], result.provenance[b])].min()
            if dab < 2 * L + problem.d:
                fails.append(f"classes {a},{b} at distance {dab} < {2 * L + problem.d}")
    D = problem.diameter_bound
    if D is None:
        D = max(_diam(problem, b) for b in q) if n else 0
    bound = n * D + (n - 1) * (2 * problem.r + n * problem.d) if n else 0
    for idx, a in enumerate(result.p_family):
        da = _diam(problem, a)
        if da > bound:
            fails.append(f"class {idx} diameter {da} exceeds {bound}")
    return fails


def _diam(problem: MergeProblem, vs: np.ndarray) -> int:
    if problem.allowed is None:
        return diameter_of(problem.host, vs)
    best = 0
    for v in vs:
        d = _kernels.bfs(problem.host.indptr, problem.host.indices, np.array([v]),
                         problem.allowed, -1)[vs]
        if np.any(d < 0):
            return INF
        best = max(best, int(d.max()))
    return best
