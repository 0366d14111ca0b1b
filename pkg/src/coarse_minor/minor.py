"""Exact minor containment for small patterns, with certificates.

A multigraph pattern ``J`` is a minor of ``G`` exactly when ``G`` has disjoint
connected branch sets such that, for every pair of pattern vertices, the
number of host edges between their branch sets is at least the number of
parallel pattern edges.  For a connected pattern and a connected host,
leftover vertices can always be absorbed into a neighbouring branch set, so
the search only visits partitions of the host into exactly ``|V(J)|``
connected parts.  Patterns without cut vertices are searched block by block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fatmodel import FatModel, PatternGraph
from .graph import Graph, blocks, components

MAX_PATTERN_VERTICES = 12


class BudgetExhausted(RuntimeError):
    pass


@dataclass
class MinorQuery:
    host: Graph
    pattern: PatternGraph
    budget: int = 2_000_000
    max_pattern_vertices: int = MAX_PATTERN_VERTICES


@dataclass
class MinorResult:
    answer: bool | None
    certificate: FatModel | None
    nodes_explored: int

    @property
    def status(self) -> str:
        return {True: "true", False: "false", None: "unknown"}[self.answer]

    def to_json(self) -> dict:
        return {"schema": "coarse-minor/minor-result/1", "answer": self.status,
                "nodes_explored": self.nodes_explored,
                "certificate": self.certificate.to_json() if self.certificate else None}


def parse_pattern(text: str) -> PatternGraph:
    """``k2t:3``, ``theta:4``, or ``edges:0-1,1-2,...``."""
    fam, _, arg = text.partition(":")
    if fam == "k2t":
        return PatternGraph.k2t(int(arg))
    if fam == "theta":
        return PatternGraph.theta(int(arg))
    if fam == "edges":
        pairs = [tuple(int(x) for x in item.split("-")) for item in arg.split(",") if item]
        return PatternGraph.from_edges(pairs, name=text)
    raise ValueError(f"unknown pattern {text!r}")


# ---------------------------------------------------------------- structure

def _pattern_adj(pattern: PatternGraph) -> list[set]:
    adj = [set() for _ in range(pattern.n)]
    for x, y in pattern.edges:
        adj[x].add(y)
        adj[y].add(x)
    return adj


def _pattern_connected(pattern: PatternGraph, skip: int = -1) -> bool:
    adj = _pattern_adj(pattern)
    verts = [v for v in range(pattern.n) if v != skip]
    if not verts:
        return True
    seen = {verts[0]}
    stack = [verts[0]]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y != skip and y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(verts)


def pattern_is_biconnected(pattern: PatternGraph) -> bool:
    if pattern.n < 2 or not _pattern_connected(pattern):
        return False
    if pattern.n == 2:
        return len(pattern.edges) >= 2
    return all(_pattern_connected(pattern, v) for v in range(pattern.n))


# ------------------------------------------------------------------ search

class _Search:
    def __init__(self, nbr: list[int], pattern: PatternGraph, cover: bool, budget: int):
        self.nbr = nbr
        self.m = len(nbr)
        self.p = pattern.n
        self.cover = cover
        self.budget = budget
        self.nodes = 0
        self.mult = pattern.multiplicities()
        degs = [0] * pattern.n
        for x, y in pattern.edges:
            degs[x] += 1
            degs[y] += 1
        self.pdeg = degs
        self.min_deg = min(degs) if degs else 0
        self.order = sorted(range(pattern.n), key=lambda x: (-degs[x], x))
        self.padj = _pattern_adj(pattern)

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExhausted

    def cut_size(self, s: int, outside: int) -> int:
        total = 0
        x = s
        while x:
            low = x & -x
            total += bin(self.nbr[low.bit_length() - 1] & outside).count("1")
            x ^= low
        return total

    def components_count(self, r: int, cap: int) -> int:
        count = 0
        while r:
            count += 1
            if count > cap:
                return count
            seed = r & -r
            comp = seed
            frontier = seed
            while frontier:
                low = frontier & -frontier
                frontier ^= low
                new = self.nbr[low.bit_length() - 1] & r & ~comp
                comp |= new
                frontier |= new
            r &= ~comp
        return count

    def connected_sets(self, v: int, r: int, max_size: int):
        """Every connected subset of ``r`` containing ``v`` exactly once."""
        start = 1 << v

        def rec(s, ext, banned, size):
            self.tick()
            yield s
            if size >= max_size:
                return
            while ext:
                u = ext & -ext
                ext ^= u
                new = self.nbr[u.bit_length() - 1] & r & ~s & ~banned & ~u
                yield from rec(s | u, (ext | new) & ~u, banned, size + 1)
                banned |= u

        yield from rec(start, self.nbr[v] & r, 0, 1)

    def embed(self, parts: list[int]) -> list[int] | None:
        """Assign pattern vertices to distinct parts so every multiplicity is met."""
        k = len(parts)
        counts = [[0] * k for _ in range(k)]
        for i in range(k):
            for j in range(i + 1, k):
                c = self.cut_size(parts[i], parts[j])
                counts[i][j] = counts[j][i] = c
        part_deg = [sum(row) for row in counts]
        assign: dict[int, int] = {}
        used = [False] * k

        def rec(idx):
            if idx == len(self.order):
                return True
            x = self.order[idx]
            for i in range(k):
                if used[i] or part_deg[i] < self.pdeg[x]:
                    continue
                ok = True
                for y, j in assign.items():
                    need = self.mult.get((min(x, y), max(x, y)), 0)
                    if need and counts[i][j] < need:
                        ok = False
                        break
                if ok:
                    used[i] = True
                    assign[x] = i
                    if rec(idx + 1):
                        return True
                    del assign[x]
                    used[i] = False
            return False

        if rec(0):
            return [assign[x] for x in range(self.p)]
        return None

    def run(self) -> tuple[list[int], list[int]] | None:
        full = (1 << self.m) - 1
        return self._rec(full, [])

    def _rec(self, r: int, parts: list[int]):
        self.tick()
        need = self.p - len(parts)
        if need == 0:
            if r and self.cover:
                return None
            emb = self.embed(parts)
            return (parts, emb) if emb is not None else None
        if bin(r).count("1") < need:
            return None
        v = (r & -r).bit_length() - 1
        left = need - 1
        max_size = bin(r).count("1") - left
        for s in self.connected_sets(v, r, max_size):
            rest = r & ~s
            if self.cover:
                if left == 0 and rest:
                    continue
                if self.components_count(rest, left) > left:
                    continue
                if self.cut_size(s, ~s & ((1 << self.m) - 1)) < self.min_deg:
                    continue
            res = self._rec(rest, parts + [s])
            if res is not None:
                return res
        if not self.cover:
            return self._rec(r & ~(1 << v), parts)
        return None


def _certificate(g: Graph, ids: np.ndarray, parts: list[int], emb: list[int],
                 pattern: PatternGraph) -> FatModel:
    sets = []
    for x in range(pattern.n):
        bits = parts[emb[x]]
        sets.append(np.array([int(ids[i]) for i in range(ids.size) if bits >> i & 1], dtype=np.int64))
    masks = [set(s.tolist()) for s in sets]
    used: set = set()
    paths = []
    for x, y in pattern.edges:
        found = None
        for a in sorted(masks[x]):
            for b in g.neighbors(a).tolist():
                if b in masks[y] and (min(a, b), max(a, b)) not in used:
                    found = (a, b)
                    break
            if found:
                break
        used.add((min(found), max(found)))
        paths.append(list(found))
    return FatModel(pattern, sets, paths, 0)


def _local(g: Graph, verts: np.ndarray) -> list[int]:
    pos = {int(v): i for i, v in enumerate(verts)}
    nbr = [0] * verts.size
    for i, v in enumerate(verts):
        for w in g.neighbors(int(v)).tolist():
            j = pos.get(w)
            if j is not None:
                nbr[i] |= 1 << j
    return nbr


def has_minor(q: MinorQuery | Graph, pattern: PatternGraph | None = None,
              budget: int | None = None) -> MinorResult:
    """Decide whether ``pattern`` is a minor of the host; ``None`` answer means the budget ran out."""
    if not isinstance(q, MinorQuery):
        q = MinorQuery(q, pattern, budget if budget is not None else 2_000_000)
    g, pat = q.host, q.pattern
    if q.budget <= 0:
        raise ValueError("budget must be positive")
    if pat.n > q.max_pattern_vertices:
        raise ValueError(f"pattern has {pat.n} vertices; the limit is {q.max_pattern_vertices}")
    if pat.n == 0:
        return MinorResult(True, FatModel(pat, [], [], 0), 0)
    if g.n < pat.n or g.edge_count < len(pat.edges):
        return MinorResult(False, None, 0)
    pdeg = [0] * pat.n
    for x, y in pat.edges:
        pdeg[x] += 1
        pdeg[y] += 1
    need_branching = max(pdeg) >= 3

    if pattern_is_biconnected(pat):
        regions = blocks(g)
        cover = True
    elif _pattern_connected(pat):
        regions = components(g)
        cover = True
    else:
        regions = [np.arange(g.n)]
        cover = False

    explored = 0
    spent = 0
    for region in regions:
        if region.size < pat.n:
            continue
        nbr = _local(g, region)
        edges = sum(bin(x).count("1") for x in nbr) // 2
        if edges < len(pat.edges):
            continue
        if need_branching and cover and max(bin(x).count("1") for x in nbr) <= 2:
            continue
        search = _Search(nbr, pat, cover, q.budget - spent)
        try:
            found = search.run()
        except BudgetExhausted:
            return MinorResult(None, None, explored + search.nodes)
        explored += search.nodes
        spent += search.nodes
        if found is not None:
            parts, emb = found
            return MinorResult(True, _certificate(g, region, parts, emb, pat), explored)
    return MinorResult(False, None, explored)
