"""Minor models, the K-fatness verifier, and the once-subdivision transform.

A model of a pattern multigraph assigns a connected branch set to every
pattern vertex and a host path to every pattern edge.  ``verify_fat_model``
never raises on malformed models: structural problems come back as
violations so callers can print them.

A branch path for the edge ``xy`` is accepted when its first vertex lies in
(or is adjacent to) the branch set of ``x`` and its last vertex lies in (or
is adjacent to) that of ``y``.  Paths listed in the reverse direction are
accepted too.  A path that re-enters its own end sets is trimmed to the
segment between its last visit of the first set and the next visit of the
second set before the disjointness checks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .graph import INF, Graph, as_vertex_set, distances_from, is_connected_set, \
    shortest_path_to_sources

SCHEMA = "coarse-minor/fat-model/1"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class PatternGraph:
    """Loopless multigraph on vertices ``0..n-1``; edges are indexed by position."""

    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""

    def __post_init__(self):
        for x, y in self.edges:
            if x == y:
                raise ValueError("pattern graphs may not have loops")
            if not (0 <= x < self.n and 0 <= y < self.n):
                raise ValueError("pattern edge endpoint out of range")

    @classmethod
    def theta(cls, t: int) -> "PatternGraph":
        if t < 1:
            raise ValueError("theta patterns need t >= 1")
        return cls(2, tuple((0, 1) for _ in range(t)), f"theta:{t}")

    @classmethod
    def k2t(cls, t: int) -> "PatternGraph":
        """Complete bipartite K_{2,t}; the two hubs are vertices 0 and 1."""
        if t < 1:
            raise ValueError("k2t patterns need t >= 1")
        edges = []
        for i in range(t):
            edges += [(0, 2 + i), (2 + i, 1)]
        return cls(2 + t, tuple(edges), f"k2t:{t}")

    @classmethod
    def from_edges(cls, edges: Sequence[tuple[int, int]], n: int | None = None,
                   name: str = "") -> "PatternGraph":
        edges = tuple((int(a), int(b)) for a, b in edges)
        if n is None:
            n = 1 + max((max(e) for e in edges), default=-1)
        return cls(n, edges, name)

    def subdivided(self) -> "PatternGraph":
        """Every edge ``e = xy`` becomes ``x - w_e - y`` with ``w_e = n + e``."""
        edges = []
        for e, (x, y) in enumerate(self.edges):
            edges += [(x, self.n + e), (self.n + e, y)]
        name = f"subdivided({self.name})" if self.name else ""
        return PatternGraph(self.n + len(self.edges), tuple(edges), name)

    def multiplicities(self) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        for x, y in self.edges:
            key = (min(x, y), max(x, y))
            out[key] = out.get(key, 0) + 1
        return out

    def to_json(self) -> dict:
        return {"vertices": self.n, "edges": [list(e) for e in self.edges], "name": self.name}

    @classmethod
    def from_json(cls, doc: dict) -> "PatternGraph":
        return cls(int(doc["vertices"]), tuple((int(a), int(b)) for a, b in doc["edges"]),
                   doc.get("name", ""))


@dataclass
class FatModel:
    pattern: PatternGraph
    branch_sets: list[np.ndarray]
    branch_paths: list[list[int]]
    fatness: int = 0

    def __post_init__(self):
        self.branch_sets = [as_vertex_set(s) for s in self.branch_sets]
        self.branch_paths = [[int(v) for v in p] for p in self.branch_paths]

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "pattern": self.pattern.to_json(),
            "branch_sets": {str(i): s.tolist() for i, s in enumerate(self.branch_sets)},
            "branch_paths": {str(i): list(p) for i, p in enumerate(self.branch_paths)},
            "fatness": int(self.fatness),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FatModel":
        pattern = PatternGraph.from_json(doc["pattern"])
        sets = [doc["branch_sets"][str(i)] for i in range(pattern.n)]
        paths = [doc["branch_paths"][str(i)] for i in range(len(pattern.edges))]
        return cls(pattern, sets, paths, int(doc.get("fatness", 0)))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class Violation:
    kind: str          # "structure" or "distance"
    objects: tuple[str, ...]
    required: int
    actual: int
    detail: str = ""

    def to_json(self) -> dict:
        return {"kind": self.kind, "objects": list(self.objects), "required": self.required,
                "actual": None if self.actual >= INF else self.actual, "detail": self.detail}


@dataclass
class FatnessReport:
    valid: bool
    violations: list[Violation] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"valid": self.valid, "violations": [v.to_json() for v in self.violations]}


def _member_name(i: int, p: int) -> str:
    return f"U{i}" if i < p else f"E{i - p}"


def _touches(g: Graph, v: int, members: set) -> bool:
    return v in members or any(w in members for w in g.neighbors(v).tolist())


def _effective_segment(path: list[int], mx, my) -> tuple[int, int]:
    """Index range of the trimmed ``U_x``--``U_y`` segment of an oriented path."""
    i = 0
    for idx, v in enumerate(path):
        if v in mx:
            i = idx
    j = len(path) - 1
    for idx in range(i, len(path)):
        if path[idx] in my:
            j = idx
            break
    return i, j


def _pairs_within(groups) -> set[tuple[int, int]]:
    out = set()
    for ids in groups:
        ids = sorted(set(ids))
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                out.add((a, b))
    return out


def _structure(g: Graph, m: FatModel) -> tuple[list[Violation], list[list[int]]]:
    """Structural checks; returns violations and the oriented branch paths."""
    out: list[Violation] = []
    p = m.pattern.n
    oriented: list[list[int]] = [list(path) for path in m.branch_paths]
    if len(m.branch_sets) != p or len(m.branch_paths) != len(m.pattern.edges):
        out.append(Violation("structure", (), 0, 0, "model size does not match pattern"))
        return out, oriented
    for obj in list(m.branch_sets) + [np.asarray(q, dtype=np.int64) for q in m.branch_paths]:
        if obj.size and (obj.min() < 0 or obj.max() >= g.n):
            out.append(Violation("structure", (), 0, 0, "vertex id out of range"))
            return out, oriented
    sets = [set(s.tolist()) for s in m.branch_sets]
    owners: dict[int, list[int]] = {}
    for x, s in enumerate(m.branch_sets):
        for v in s.tolist():
            owners.setdefault(v, []).append(x)
    for x, s in enumerate(m.branch_sets):
        if s.size == 0:
            out.append(Violation("structure", (f"U{x}",), 0, 0, "empty branch set"))
        elif not is_connected_set(g, s):
            out.append(Violation("structure", (f"U{x}",), 0, 0, "branch set not connected"))
    for x, y in sorted(_pairs_within(xs for xs in owners.values() if len(xs) > 1)):
        out.append(Violation("structure", (f"U{x}", f"U{y}"), 0, 0, "branch sets intersect"))
    segments: list[tuple[int, int]] = []
    for e, (x, y) in enumerate(m.pattern.edges):
        path = oriented[e]
        name = f"E{e}"
        segments.append((0, max(len(path) - 1, 0)))
        if not path:
            out.append(Violation("structure", (name,), 0, 0, "empty branch path"))
            continue
        if len(set(path)) != len(path):
            out.append(Violation("structure", (name,), 0, 0, "branch path repeats a vertex"))
            continue
        if any(not g.has_edge(a, b) for a, b in zip(path, path[1:])):
            out.append(Violation("structure", (name,), 0, 0, "branch path uses a non-edge"))
            continue
        if not (_touches(g, path[0], sets[x]) and _touches(g, path[-1], sets[y])):
            rev = path[::-1]
            if _touches(g, rev[0], sets[x]) and _touches(g, rev[-1], sets[y]):
                path = oriented[e] = rev
            else:
                out.append(Violation("structure", (name, f"U{x}", f"U{y}"), 0, 0,
                                     "branch path does not join its end sets"))
                continue
        segments[e] = _effective_segment(path, sets[x], sets[y])
        foreign = {z for v in path for z in owners.get(v, ())} - {x, y}
        for z in sorted(foreign):
            out.append(Violation("structure", (name, f"U{z}"), 0, 0,
                                 "branch path meets a non-incident branch set"))
    # internal disjointness of the trimmed segments, via vertex and hop indices
    spans = []
    for e, path in enumerate(oriented):
        i, j = segments[e]
        seg = path[i:j + 1]
        if len(m.pattern.edges) and seg:
            x, y = m.pattern.edges[e]
            inner = {v for v in seg if v not in sets[x] and v not in sets[y]}
        else:
            inner = set()
        hops = {(min(a, b), max(a, b)) for a, b in zip(seg, seg[1:])}
        spans.append((inner, set(seg), hops, tuple(seg)))
    on_vertex: dict[int, list[int]] = {}
    on_hop: dict[tuple[int, int], list[int]] = {}
    bare: dict[tuple, list[int]] = {}
    for e, (inner, all_e, hops, seq) in enumerate(spans):
        for v in all_e:
            on_vertex.setdefault(v, []).append(e)
        for h in hops:
            on_hop.setdefault(h, []).append(e)
        if not inner and not hops:
            bare.setdefault((seq, tuple(sorted(m.pattern.edges[e]))), []).append(e)
    clashes = _pairs_within(on_hop.values()) | _pairs_within(bare.values())
    for e, (inner, *_rest) in enumerate(spans):
        for v in inner:
            for f in on_vertex[v]:
                if f != e:
                    clashes.add((min(e, f), max(e, f)))
    for e, f in sorted(clashes):
        out.append(Violation("structure", (f"E{e}", f"E{f}"), 0, 0,
                             "branch paths are not internally disjoint"))
    return out, oriented


def verify_fat_model(g: Graph, m: FatModel, k: int) -> FatnessReport:
    """Check model structure and that non-incident members are at distance ``>= k``."""
    violations, _ = _structure(g, m)
    if any(v.detail in ("model size does not match pattern", "vertex id out of range")
           for v in violations):
        return FatnessReport(False, violations)
    p = m.pattern.n
    members = [s for s in m.branch_sets] + [as_vertex_set(q) for q in m.branch_paths]
    incident = set()
    for e, (x, y) in enumerate(m.pattern.edges):
        incident.add((x, p + e))
        incident.add((y, p + e))
    if k > 0 and members:
        # vertex -> members containing it, as a CSR table
        sizes = np.array([obj.size for obj in members], dtype=np.int64)
        flat = np.concatenate(members) if sizes.sum() else np.zeros(0, dtype=np.int64)
        owner = np.repeat(np.arange(len(members)), sizes)
        order = np.argsort(flat, kind="stable")
        flat, owner = flat[order], owner[order]
        ptr = np.searchsorted(flat, np.arange(g.n + 1))
        for i, obj in enumerate(members):
            if obj.size == 0:
                continue
            verts, dist = _kernels.reach(g.indptr, g.indices, obj, k - 1)
            cnt = ptr[verts + 1] - ptr[verts]
            total = int(cnt.sum())
            if total == 0:
                continue
            start = np.repeat(ptr[verts] - np.cumsum(cnt) + cnt, cnt) + np.arange(total)
            js = owner[start]
            ds = np.repeat(dist, cnt)
            keep = js > i
            js, ds = js[keep], ds[keep]
            if js.size == 0:
                continue
            best = np.full(len(members), INF, dtype=np.int64)
            np.minimum.at(best, js, ds)
            for j in np.flatnonzero(best < INF).tolist():
                if (i, j) in incident:
                    continue
                violations.append(Violation("distance", (_member_name(i, p), _member_name(j, p)),
                                            k, int(best[j])))
    violations.sort(key=lambda v: (v.kind, v.objects, v.actual, v.detail))
    return FatnessReport(not violations, violations)


def member_distances(g: Graph, m: FatModel) -> dict[tuple[str, str], int]:
    """Exact distance for every non-incident member pair (diagnostic helper)."""
    p = m.pattern.n
    members = [s for s in m.branch_sets] + [as_vertex_set(q) for q in m.branch_paths]
    incident = {(x, p + e) for e, ed in enumerate(m.pattern.edges) for x in ed}
    out = {}
    for i, obj in enumerate(members):
        dist = distances_from(g, obj)
        for j in range(i + 1, len(members)):
            if (i, j) in incident:
                continue
            dj = dist[members[j]]
            dj = dj[dj >= 0]
            out[(_member_name(i, p), _member_name(j, p))] = int(dj.min()) if dj.size else INF
    return out


def subdivide_model(g: Graph, m: FatModel, k: int) -> FatModel:
    """Turn a ``3k``-fat model of ``J`` into a ``k``-fat model of ``J`` with every edge subdivided once."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    report = verify_fat_model(g, m, 3 * k)
    if not report.valid:
        v = report.violations[0]
        raise ModelError(f"input model is not {3 * k}-fat: {'/'.join(v.objects)} "
                         f"{v.detail or f'at distance {v.actual}'}")
    _, oriented = _structure(g, m)
    pat = m.pattern
    sets = [s.copy() for s in m.branch_sets]
    paths: list[list[int]] = []
    for e, (x, y) in enumerate(pat.edges):
        path = oriented[e]
        mx = set(m.branch_sets[x].tolist())
        my = set(m.branch_sets[y].tolist())
        i, j = _effective_segment(path, mx, my)
        seg = path[i:j + 1]
        if k == 0:
            inner = [v for v in seg if v not in mx and v not in my]
            if not inner:
                raise ModelError(f"E{e} has no interior vertex to host the subdivision vertex")
            sets.append(as_vertex_set(inner))
            paths += [[inner[0]], [inner[-1]]]
            continue
        dx = distances_from(g, m.branch_sets[x])
        dy = distances_from(g, m.branch_sets[y])
        iu = max(idx for idx, v in enumerate(seg) if 0 <= dx[v] <= k)
        iv = next(idx for idx in range(iu, len(seg)) if 0 <= dy[seg[idx]] <= k)
        u_e, v_e = seg[iu], seg[iv]
        sets.append(as_vertex_set(seg[iu:iv + 1]))
        to_x = shortest_path_to_sources(g, dx, u_e)
        to_y = shortest_path_to_sources(g, dy, v_e)
        paths += [to_x[::-1], to_y]
    return FatModel(pat.subdivided(), sets, paths, k)


def theta_model(y_set, x_set, paths: Sequence[Sequence[int]], k: int) -> FatModel:
    """Theta_t model with branch sets ``(Y, X)`` and one branch path per entry of ``paths``."""
    t = len(paths)
    return FatModel(PatternGraph.theta(t), [as_vertex_set(y_set), as_vertex_set(x_set)],
                    [list(p) for p in paths], k)
