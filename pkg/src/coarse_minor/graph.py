"""Immutable finite simple graphs and the metric primitives built on BFS.

Vertex sets are plain sorted ``int64`` numpy arrays; every function accepts
any iterable of vertex ids and normalises it with :func:`as_vertex_set`.
Distances are integers, with :data:`INF` standing for "no path".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels

INF = 1 << 62
"""Integer sentinel for an infinite distance."""


def as_vertex_set(vs: Iterable[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(list(vs) if not isinstance(vs, np.ndarray) else vs, dtype=np.int64)
    return np.unique(arr)


class Graph:
    """Undirected simple graph on vertices ``0..n-1`` stored in CSR form."""

    __slots__ = ("n", "indptr", "indices", "labels", "_m", "_src")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray,
                 labels: dict[int, str] | None = None):
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.labels = dict(labels) if labels else {}
        self._m = int(indices.shape[0] // 2)
        self._src = None
        indptr.setflags(write=False)
        indices.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   labels: dict[int, str] | None = None) -> "Graph":
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= n:
                raise ValueError(f"edge endpoint out of range 0..{n - 1}")
            if np.any(e[:, 0] == e[:, 1]):
                bad = e[e[:, 0] == e[:, 1]][0]
                raise ValueError(f"self-loop at vertex {int(bad[0])}")
        both = np.concatenate([e, e[:, ::-1]]) if e.size else e
        if both.size:
            both = np.unique(both, axis=0)
        src = both[:, 0] if both.size else np.zeros(0, dtype=np.int64)
        dst = both[:, 1] if both.size else np.zeros(0, dtype=np.int64)
        counts = np.bincount(src, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        # np.unique sorts rows lexicographically, so dst is grouped and ascending
        return cls(n, indptr, dst.astype(np.int64, copy=True), labels)

    @classmethod
    def from_adjacency(cls, adj: Sequence[Iterable[int]]) -> "Graph":
        return cls.from_edges(len(adj), ((u, v) for u, nb in enumerate(adj) for v in nb if u < v))

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return self._m

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in self.neighbors(u):
                if u < v:
                    yield u, int(v)

    @property
    def arc_sources(self) -> np.ndarray:
        """Source vertex of every CSR arc, aligned with ``indices``."""
        if self._src is None:
            self._src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
            self._src.setflags(write=False)
        return self._src

    def edge_array(self) -> np.ndarray:
        src = self.arc_sources
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    def induced(self, vertices: Iterable[int]) -> tuple["Graph", np.ndarray]:
        """Induced subgraph with vertices relabelled ``0..k-1``; returns it and the old ids."""
        old = as_vertex_set(vertices)
        new_id = np.full(self.n, -1, dtype=np.int64)
        new_id[old] = np.arange(old.size)
        e = self.edge_array()
        keep = (new_id[e[:, 0]] >= 0) & (new_id[e[:, 1]] >= 0)
        return Graph.from_edges(old.size, new_id[e[keep]]), old

    def check_ids(self, vs: np.ndarray) -> None:
        if vs.size and (vs[0] < 0 or vs[-1] >= self.n):
            raise IndexError(f"vertex id out of range 0..{self.n - 1}")

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Graph) and self.n == other.n
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self) -> int:
        return hash((self.n, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.edge_count})"


# ---------------------------------------------------------------- distances

def mask_of(g: Graph, vs: Iterable[int] | np.ndarray) -> np.ndarray:
    m = np.zeros(g.n, dtype=np.bool_)
    m[as_vertex_set(vs)] = True
    return m


def distances_from(g: Graph, sources, allowed: np.ndarray | None = None,
                   max_depth: int = -1) -> np.ndarray:
    """BFS distance array from a source set; ``-1`` marks unreached vertices."""
    src = as_vertex_set(sources)
    g.check_ids(src)
    return _kernels.bfs(g.indptr, g.indices, src, allowed, max_depth)


def distance_sets(g: Graph, u, w, allowed: np.ndarray | None = None) -> int:
    """Minimum distance between two vertex sets (``INF`` if empty or disconnected)."""
    u = as_vertex_set(u)
    w = as_vertex_set(w)
    g.check_ids(u)
    g.check_ids(w)
    if u.size == 0 or w.size == 0:
        return INF
    if u.size > w.size:
        u, w = w, u
    d = _kernels.bfs(g.indptr, g.indices, u, allowed, -1)
    dw = d[w]
    dw = dw[dw >= 0]
    return int(dw.min()) if dw.size else INF


def ball(g: Graph, u, r: int, allowed: np.ndarray | None = None) -> np.ndarray:
    """All vertices within distance ``r`` of ``u`` (inside ``allowed`` if given)."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    d = distances_from(g, u, allowed, r)
    return np.flatnonzero(d >= 0)


def shortest_path_to_sources(g: Graph, dist: np.ndarray, v: int) -> list[int]:
    """Walk from ``v`` to the BFS sources, always stepping to the lowest-id parent."""
    if dist[v] < 0:
        raise ValueError(f"vertex {v} not reached by the BFS")
    path = [int(v)]
    while dist[path[-1]] > 0:
        path.append(_kernels.min_parent(g.indptr, g.indices, dist, path[-1]))
    return path


def geodesic(g: Graph, source: int, target_set, allowed: np.ndarray | None = None) -> list[int]:
    """Canonical shortest path from ``source`` to the nearest vertex of ``target_set``."""
    dist = distances_from(g, target_set, allowed)
    return shortest_path_to_sources(g, dist, source)


def diameter_of(g: Graph, vs, cap: int = -1) -> int:
    """Diameter in ``g`` of a vertex set; returns ``INF`` when some pair is farther than ``cap``."""
    best = _kernels.set_diameter(g.indptr, g.indices, as_vertex_set(vs), cap)
    return INF if best < 0 else best


def blocks(g: Graph) -> list[np.ndarray]:
    """Vertex sets of the 2-connected blocks (bridges included as 2-vertex blocks)."""
    n = g.n
    disc = [-1] * n
    low = [0] * n
    out: list[np.ndarray] = []
    timer = 0
    edge_stack: list[tuple[int, int]] = []
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(g.neighbors(root).tolist()))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if disc[w] < 0:
                    edge_stack.append((v, w))
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, v, iter(g.neighbors(w).tolist())))
                    advanced = True
                    break
                if w != parent and disc[w] < disc[v]:
                    edge_stack.append((v, w))
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if parent >= 0:
                low[parent] = min(low[parent], low[v])
                if low[v] >= disc[parent]:
                    comp = set()
                    while True:
                        a, b = edge_stack.pop()
                        comp.update((a, b))
                        if (a, b) == (parent, v):
                            break
                    out.append(np.array(sorted(comp), dtype=np.int64))
    out.sort(key=lambda b: (int(b[0]), b.size))
    return out


# ------------------------------------------------------------ set structure

def is_connected_set(g: Graph, vs) -> bool:
    vs = as_vertex_set(vs)
    if vs.size == 0:
        return False
    d = _kernels.bfs(g.indptr, g.indices, vs[:1], mask_of(g, vs), -1)
    return bool(np.all(d[vs] >= 0))


def boundary(g: Graph, vs) -> np.ndarray:
    """Vertices of ``vs`` with a neighbour outside ``vs``."""
    return boundary_of_mask(g, mask_of(g, vs))


def boundary_of_mask(g: Graph, inside: np.ndarray) -> np.ndarray:
    src = g.arc_sources
    cross = inside[src] & ~inside[g.indices]
    return np.unique(src[cross])


def neighbourhood(g: Graph, vs) -> np.ndarray:
    """Vertices outside ``vs`` adjacent to ``vs``."""
    return boundary_of_mask(g, ~mask_of(g, vs))


def components(g: Graph, allowed: np.ndarray | None = None) -> list[np.ndarray]:
    """Components of ``g`` (or of ``g[allowed]``), ordered by lowest vertex id."""
    labels = _kernels.label_components(g.indptr, g.indices, allowed)
    valid = labels >= 0
    if not np.any(valid):
        return []
    order = np.argsort(labels[valid], kind="stable")
    verts = np.flatnonzero(valid)[order]
    cuts = np.flatnonzero(np.diff(labels[valid][order])) + 1
    return [np.asarray(c) for c in np.split(verts, cuts)]


def components_with_boundary(g: Graph, removed) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Components of ``g - removed`` with their boundary and attachment sets.

    The boundary of a component is its set of vertices adjacent to ``removed``;
    the attachments are the removed vertices adjacent to the component.
    """
    removed = as_vertex_set(removed)
    g.check_ids(removed)
    rem = mask_of(g, removed)
    out = []
    touching = mask_of(g, boundary_of_mask(g, ~rem))
    for comp in components(g, ~rem):
        out.append((comp, comp[touching[comp]], neighbourhood(g, comp)))
    return out


# ---------------------------------------------------------- near-components

@dataclass
class NearComponentFamily:
    k: int
    classes: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.classes)


def near_components(g: Graph, u, k: int) -> NearComponentFamily:
    """Classes of ``u`` under the transitive closure of "distance at most ``k`` in ``g``"."""
    u = as_vertex_set(u)
    g.check_ids(u)
    member = mask_of(g, u)
    seen = np.zeros(g.n, dtype=np.bool_)
    classes = []
    for start in u:
        if seen[start]:
            continue
        seen[start] = True
        cls = [int(start)]
        frontier = np.array([start], dtype=np.int64)
        while frontier.size:
            d = _kernels.bfs(g.indptr, g.indices, frontier, None, k)
            hit = np.flatnonzero((d >= 0) & member & ~seen)
            seen[hit] = True
            cls.extend(int(x) for x in hit)
            frontier = hit
        classes.append(np.sort(np.asarray(cls, dtype=np.int64)))
    return NearComponentFamily(k, classes)


def near_path(g: Graph, cls: np.ndarray, a: int, b: int, k: int) -> list[int]:
    """A ``k``-near path from ``a`` to ``b`` inside one near-component (BFS over hops)."""
    cls = as_vertex_set(cls)
    idx = {int(v): i for i, v in enumerate(cls)}
    prev = {int(a): -1}
    queue = [int(a)]
    member = mask_of(g, cls)
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        if x == b:
            break
        d = _kernels.bfs(g.indptr, g.indices, np.array([x]), None, k)
        for y in np.flatnonzero((d >= 0) & member):
            y = int(y)
            if y not in prev:
                prev[y] = x
                queue.append(y)
    if b not in prev or b not in idx:
        raise ValueError("endpoints are not in one near-component")
    seq = [int(b)]
    while prev[seq[-1]] != -1:
        seq.append(prev[seq[-1]])
    return seq[::-1]


# -------------------------------------------------------------- edge lists

def parse_edge_list(text: str) -> Graph:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "n":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: malformed header {raw!r}")
            n = int(parts[1])
            continue
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    top = max((max(e) for e in edges), default=-1) + 1
    if n is None:
        n = top
    elif top > n:
        raise ValueError(f"edge endpoint {top - 1} exceeds declared vertex count {n}")
    return Graph.from_edges(n, edges)


def format_edge_list(g: Graph) -> str:
    lines = [f"n {g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edge_array().tolist())
    return "\n".join(lines) + "\n"


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(g))
