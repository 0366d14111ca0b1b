"""Detectors that either certify structural bounds or return a fat Theta_t model.

Three audits share one engine: a search for ``t`` vertices that are pairwise
at least ``3k`` apart inside ``ball(X, k)`` of a connected set ``Y`` far from
``X``.  Such a tuple yields the model with branch sets ``Y`` and ``X`` and
geodesic branch paths of length ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .fatmodel import FatModel, PatternGraph
from .graph import (INF, Graph, as_vertex_set, ball, boundary, components, distance_sets,
                    distances_from, is_connected_set, mask_of, near_components, near_path,
                    neighbourhood, shortest_path_to_sources)


class PreconditionError(ValueError):
    pass


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass
class Confirmation:
    counts: dict = field(default_factory=dict)
    is_witness = False

    def to_json(self) -> dict:
        return {"outcome": "confirmation", "counts": self.counts}


@dataclass
class Witness:
    model: FatModel
    source: str
    detail: dict = field(default_factory=dict)
    is_witness = True

    def to_json(self) -> dict:
        return {"outcome": "witness", "source": self.source, "detail": self.detail,
                "model": self.model.to_json()}


AuditOutcome = Union[Confirmation, Witness]


@dataclass
class DispersionQuery:
    host: Graph
    x_set: np.ndarray
    y_set: np.ndarray
    t: int
    k: int


# ------------------------------------------------------------ dispersed sets

def _conflicts(g: Graph, s: np.ndarray, sep: int) -> list[list[int]]:
    """For each index into ``s``, the indices of members closer than ``sep``."""
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[s] = np.arange(s.size)
    member = pos >= 0
    out = []
    for i, v in enumerate(s):
        if sep <= 0:
            out.append([])
            continue
        d = _kernels.bfs(g.indptr, g.indices, np.array([v]), None, sep - 1)
        hit = np.flatnonzero((d >= 0) & member)
        out.append(sorted(int(pos[h]) for h in hit if pos[h] != i))
    return out


def _greedy(adj: list[list[int]], order: list[int]) -> list[int]:
    chosen = []
    blocked = set()
    for i in order:
        if i not in blocked:
            chosen.append(i)
            blocked.update(adj[i])
    return chosen


def _clique_cover_bound(adj_sets: list[set], cand: list[int]) -> int:
    """Number of cliques in a greedy clique cover of ``cand`` (an upper bound on independence)."""
    cliques: list[list[int]] = []
    for v in cand:
        for c in cliques:
            if all(u in adj_sets[v] for u in c):
                c.append(v)
                break
        else:
            cliques.append([v])
    return len(cliques)


def _max_independent(adj_sets: list[set], comp: list[int], need: int, budget: list[int]) -> list[int]:
    """Largest independent subset of ``comp`` found, stopping as soon as ``need`` is reached."""
    best: list[int] = _greedy([sorted(adj_sets[v]) for v in range(len(adj_sets))], comp)
    best = [v for v in best if v in set(comp)]
    if len(best) >= need:
        return best[:need]
    if _clique_cover_bound(adj_sets, comp) <= len(best):
        return best

    def rec(chosen: list[int], cand: list[int]):
        nonlocal best
        budget[0] -= 1
        if budget[0] < 0:
            raise SearchBudgetExceeded("dispersed-tuple search budget exhausted")
        if len(chosen) > len(best):
            best = list(chosen)
            if len(best) >= need:
                return True
        if not cand or len(chosen) + len(cand) <= len(best):
            return False
        if len(chosen) + _clique_cover_bound(adj_sets, cand) <= len(best):
            return False
        for idx, v in enumerate(cand):
            rest = [u for u in cand[idx + 1:] if u not in adj_sets[v]]
            if len(chosen) + 1 + len(rest) <= len(best):
                continue
            if rec(chosen + [v], rest):
                return True
        return False

    rec([], list(comp))
    return best[:need] if len(best) >= need else best


def find_dispersed_tuple(g: Graph, s, t: int, sep: int, budget: int = 2_000_000) -> np.ndarray | None:
    """``t`` members of ``s`` pairwise at distance ``>= sep``, or ``None`` if none exist.

    Greedy ascending-id selection is tried first; on shortfall an exact search
    runs per component of the conflict graph.  Raises
    :class:`SearchBudgetExceeded` rather than guessing.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    s = as_vertex_set(s)
    g.check_ids(s)
    if s.size < t:
        return None
    adj = _conflicts(g, s, sep)
    chosen = _greedy(adj, list(range(s.size)))
    if len(chosen) >= t:
        return s[np.asarray(chosen[:t])]
    adj_sets = [set(a) for a in adj]
    comp_of = [-1] * s.size
    comps: list[list[int]] = []
    for i in range(s.size):
        if comp_of[i] >= 0:
            continue
        stack = [i]
        comp_of[i] = len(comps)
        members = []
        while stack:
            x = stack.pop()
            members.append(x)
            for y in adj[x]:
                if comp_of[y] < 0:
                    comp_of[y] = len(comps)
                    stack.append(y)
        comps.append(sorted(members))
    left = [budget]
    picked: list[list[int]] = []
    for comp in comps:
        picked.append(_max_independent(adj_sets, comp, t, left))
    total = sum(len(p) for p in picked)
    if total < t:
        return None
    out: list[int] = []
    for p in picked:
        out.extend(p)
    return np.sort(s[np.asarray(sorted(out)[:t])]) if len(out) >= t else None


# ------------------------------------------------------------------ lemmas

def _check_connected(g: Graph, vs: np.ndarray, name: str) -> None:
    if not is_connected_set(g, vs):
        raise PreconditionError(f"{name} is not connected")


def theta_from_dispersion(q: DispersionQuery, hint=None) -> AuditOutcome:
    """Search ``ball(X, k) & Y`` for a ``3k``-dispersed ``t``-tuple and build the Theta_t model.

    ``hint`` lets a caller supply the tuple it already extracted; it is
    validated before use.
    """
    g, k, t = q.host, q.k, q.t
    x = as_vertex_set(q.x_set)
    y = as_vertex_set(q.y_set)
    _check_connected(g, x, "X")
    _check_connected(g, y, "Y")
    if np.intersect1d(x, y).size:
        raise PreconditionError("X and Y intersect")
    dxy = distance_sets(g, x, y)
    if dxy < k:
        raise PreconditionError(f"d(X, Y) = {dxy} < k = {k}")
    dist_x = distances_from(g, x)
    cand = y[(dist_x[y] >= 0) & (dist_x[y] <= k)]
    if hint is not None:
        tup = as_vertex_set(hint)
        ok = (tup.size == t and np.all(np.isin(tup, cand))
              and find_dispersed_tuple(g, tup, t, 3 * k) is not None)
        if not ok:
            raise PreconditionError("supplied tuple is not a dispersed subset of ball(X, k) & Y")
    else:
        tup = find_dispersed_tuple(g, cand, t, 3 * k)
    if tup is None:
        return Confirmation({"candidates": int(cand.size), "t": t, "separation": 3 * k})
    paths = [shortest_path_to_sources(g, dist_x, int(u)) for u in tup]
    model = FatModel(PatternGraph.theta(t), [y, x], paths, k)
    return Witness(model, "dispersion", {"tuple": tup.tolist()})


def _component_check(g: Graph, x: np.ndarray, k: int, c: np.ndarray) -> np.ndarray:
    inner = ball(g, x, k - 1)
    inside = mask_of(g, inner)
    if c.size == 0 or np.any(inside[c]):
        raise PreconditionError("C meets ball(X, k-1)")
    if not is_connected_set(g, c):
        raise PreconditionError("C is not connected")
    if np.any(~inside[neighbourhood(g, c)]):
        raise PreconditionError("C is not a full component of G - ball(X, k-1)")
    return inner


def audit_boundary(g: Graph, x_set, k: int, c, t: int) -> AuditOutcome:
    """Bound the ``3k``-near-components of the boundary of ``C`` or return a fat Theta_t."""
    if k < 1:
        raise ValueError("k must be positive")
    if t < 2:
        raise ValueError("t must be >= 2")
    x = as_vertex_set(x_set)
    c = as_vertex_set(c)
    _check_connected(g, x, "X")
    _component_check(g, x, k, c)
    bnd = boundary(g, c)
    fam = near_components(g, bnd, 3 * k)
    query = DispersionQuery(g, x, c, t, k)
    if len(fam) >= t:
        reps = [int(cls[0]) for cls in fam.classes[:t]]
        out = theta_from_dispersion(query, hint=reps)
        out.source = "boundary:count"
        return out
    limit = 6 * k * (t - 1)
    diams = []
    for cls in fam.classes:
        far_pair = None
        diam = 0
        for w in cls:
            d = _kernels.bfs(g.indptr, g.indices, np.array([w]), None, limit - 1)[cls]
            if np.any(d < 0):
                far_pair = (int(w), int(cls[np.flatnonzero(d < 0)[0]]))
                break
            diam = max(diam, int(d.max()))
        if far_pair is not None:
            tup = _waypoints(g, cls, far_pair, k, t)
            out = theta_from_dispersion(query, hint=tup)
            out.source = "boundary:diameter"
            out.detail["endpoints"] = list(far_pair)
            return out
        diams.append(diam)
    return Confirmation({"near_components": len(fam), "diameters": diams,
                         "count_limit": t - 1, "diameter_limit": limit})


def _waypoints(g: Graph, cls: np.ndarray, pair: tuple[int, int], k: int, t: int) -> list[int]:
    """Follow the near path between ``pair`` and snap ``t`` far-apart walk vertices to it."""
    u, v = pair
    hops = near_path(g, cls, u, v, 3 * k)
    walk: list[tuple[int, int]] = []     # (vertex, index of the near-path vertex it snaps to)
    for i in range(len(hops) - 1):
        seg = shortest_path_to_sources(g, distances_from(g, [hops[i + 1]]), hops[i])
        half = (len(seg) - 1) // 2
        for pos, w in enumerate(seg[:-1] if i + 1 < len(hops) - 1 else seg):
            walk.append((w, i if pos <= half else i + 1))
    du = distances_from(g, [u])
    chosen = []
    for j in range(t):
        need = 6 * k * j
        for w, snap in walk:
            if du[w] >= need:
                chosen.append(hops[snap])
                break
    return chosen


def audit_attachments(g: Graph, x_sets, k: int, t: int) -> AuditOutcome:
    """Bound dispersed boundary vertices of components bridging several balls, or return a fat Theta_t."""
    if t < 3:
        raise ValueError("t must be >= 3")
    if k < 1:
        raise ValueError("k must be positive")
    xs = [as_vertex_set(x) for x in x_sets]
    if len(xs) > t - 1:
        raise PreconditionError(f"{len(xs)} sets given, at most t-1 = {t - 1} allowed")
    for i, x in enumerate(xs):
        _check_connected(g, x, f"X{i}")
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            dij = distance_sets(g, xs[i], xs[j])
            if dij < 3 * k:
                raise PreconditionError(f"X{i} and X{j} at distance {dij} < {3 * k}")
    balls = [ball(g, x, k - 1) for x in xs]
    ball_id = np.full(g.n, -1, dtype=np.int64)
    for i, b in enumerate(balls):
        ball_id[b] = i
    removed = ball_id >= 0
    bridging = []
    for comp in components(g, ~removed):
        nb = neighbourhood(g, comp)
        touched = sorted(set(int(i) for i in ball_id[nb]))
        if len(touched) >= 2:
            bridging.append((comp, touched))
    counts = {"bridging_components": len(bridging)}
    if not bridging:
        counts["dispersed_found"] = 0
        return Confirmation(counts)
    comp_of = np.full(g.n, -1, dtype=np.int64)
    for idx, (comp, _) in enumerate(bridging):
        comp_of[comp] = idx
    union = np.concatenate([boundary(g, comp) for comp, _ in bridging])
    need = (t - 1) ** 3 * (t - 2) + 1
    tup = find_dispersed_tuple(g, union, need, 3 * k)
    counts["boundary_vertices"] = int(union.size)
    counts["required"] = need
    if tup is None:
        return Confirmation(counts)

    def ball_nbrs(u):
        return set(int(i) for i in ball_id[g.neighbors(u)] if i >= 0)

    tally = [sum(1 for u in tup if i in ball_nbrs(u)) for i in range(len(xs))]
    i = int(np.argmax(tally))
    u1 = [int(u) for u in tup if i in ball_nbrs(u)]
    tally_j = []
    for j in range(len(xs)):
        tally_j.append(-1 if j == i else sum(1 for u in u1 if j in bridging[comp_of[u]][1]))
    j = int(np.argmax(tally_j))
    u2 = [u for u in u1 if j in bridging[comp_of[u]][1]]
    for u in u2:
        sub = theta_from_dispersion(DispersionQuery(g, xs[i], bridging[comp_of[u]][0], t, k))
        if sub.is_witness:
            sub.source = "attachments:dispersion"
            sub.detail.update({"i": i, "component_of": u})
            return sub
    w = []
    used = set()
    for u in u2:
        if comp_of[u] not in used:
            used.add(int(comp_of[u]))
            w.append(u)
        if len(w) == t:
            break
    if len(w) < t:
        raise RuntimeError("pigeonhole chain produced fewer than t distinct components")
    dist_i = distances_from(g, xs[i])
    paths = [shortest_path_to_sources(g, dist_i, u)[::-1] for u in w]
    v2 = np.concatenate([balls[j]] + [bridging[comp_of[u]][0] for u in w])
    model = FatModel(PatternGraph.theta(t), [xs[i], v2], paths, k)
    return Witness(model, "attachments", {"i": i, "j": j, "tuple": w})
