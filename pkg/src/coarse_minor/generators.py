"""Deterministic graph families used by the CLI and the test corpus.

Spec strings look like ``family:arg,arg``, for example ``path:100``,
``grid:30,40``, ``theta:3,600``, ``comb:60,30,6``, ``random-tree:50,7`` or
``gnp:20,0.2,7``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: tuple

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        fam, _, rest = text.strip().partition(":")
        fam = fam.lower()
        args = tuple(a for a in rest.replace("x", ",").split(",") if a) if rest else ()
        conv = []
        for a in args:
            try:
                conv.append(int(a))
            except ValueError:
                conv.append(float(a))
        return cls(fam, tuple(conv))

    def __str__(self) -> str:
        return f"{self.family}:{','.join(str(p) for p in self.params)}"


def path(n: int) -> Graph:
    if n < 1:
        raise ValueError("path needs n >= 1")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def grid(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise ValueError("grid needs positive dimensions")
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    return Graph.from_edges(rows * cols, np.concatenate([horiz, vert]))


def theta(t: int, leg: int) -> Graph:
    """Hubs 0 and 1 joined by ``t`` internally disjoint paths of length ``leg``."""
    if t < 1 or leg < 1:
        raise ValueError("theta needs t >= 1 and leg >= 1")
    if leg == 1 and t > 1:
        raise ValueError("parallel legs of length 1 would repeat an edge")
    edges = []
    nxt = 2
    for _ in range(t):
        prev = 0
        for _ in range(leg - 1):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, 1))
    return Graph.from_edges(nxt, edges)


def comb(span: int, spacing: int, rung: int) -> Graph:
    """Two paths ``b_0..b_span`` and ``t_0..t_span`` joined by rungs of length ``rung``.

    Rungs sit at every column divisible by ``spacing``.  ``b_i`` is vertex ``i``,
    ``t_i`` is vertex ``span + 1 + i``, rung interiors follow.
    """
    if span < 0 or spacing < 1 or rung < 1:
        raise ValueError("comb needs span >= 0, spacing >= 1, rung >= 1")
    top = span + 1
    edges = [(i, i + 1) for i in range(span)] + [(top + i, top + i + 1) for i in range(span)]
    nxt = 2 * (span + 1)
    for c in range(0, span + 1, spacing):
        prev = c
        for _ in range(rung - 1):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, top + c))
    return Graph.from_edges(nxt, edges)


def comb_columns(span: int, spacing: int) -> list[int]:
    return list(range(0, span + 1, spacing))


def random_tree(n: int, seed: int = 0) -> Graph:
    """Uniform labelled tree from a random Pruefer sequence."""
    if n < 1:
        raise ValueError("random-tree needs n >= 1")
    if n <= 2:
        return path(n)
    rng = np.random.default_rng(seed)
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    np.add.at(degree, seq, 1)
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((a, b))
    return Graph.from_edges(n, edges)


def gnp(n: int, p: float, seed: int = 0) -> Graph:
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


_FAMILIES = {
    "path": path,
    "cycle": cycle,
    "grid": grid,
    "theta": theta,
    "comb": comb,
    "random-tree": random_tree,
    "tree": random_tree,
    "gnp": gnp,
}


def generate(spec: GeneratorSpec | str) -> Graph:
    if isinstance(spec, str):
        spec = GeneratorSpec.parse(spec)
    fn = _FAMILIES.get(spec.family)
    if fn is None:
        raise ValueError(f"unknown generator family {spec.family!r}")
    try:
        return fn(*spec.params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {spec.family}: {spec.params}") from exc
