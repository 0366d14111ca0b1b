"""Exhaustive minor oracle: choose one connected vertex set per pattern vertex.

Every ordered tuple of pairwise disjoint connected host subsets is tried, with
no covering, block or symmetry shortcuts, so it shares no logic with the
checker under test.  Hosts are limited to 16 vertices (bitmask encoding).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _connected_masks(adj, n):
    out = []
    for s in range(1, 1 << n):
        low = s & -s
        seen = low
        frontier = low
        while frontier:
            b = frontier & -frontier
            frontier ^= b
            v = 0
            while (1 << v) != b:
                v += 1
            new = adj[v] & s & ~seen
            seen |= new
            frontier |= new
        if seen == s:
            out.append(s)
    return np.array(out, dtype=np.int64)


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _edges_between(adj, n, s, t):
    c = 0
    for v in range(n):
        if (s >> v) & 1:
            c += _popcount(adj[v] & t)
    return c


@njit(cache=True)
def _search(adj, n, masks, need):
    p = need.shape[0]
    m = masks.shape[0]
    choice = np.full(p, -1, dtype=np.int64)
    chosen = np.zeros(p, dtype=np.int64)
    used = np.zeros(p + 1, dtype=np.int64)
    level = 0
    while level >= 0:
        choice[level] += 1
        if choice[level] >= m:
            choice[level] = -1
            level -= 1
            continue
        s = masks[choice[level]]
        if s & used[level]:
            continue
        ok = True
        for j in range(level):
            if need[level, j] > 0 and _edges_between(adj, n, s, chosen[j]) < need[level, j]:
                ok = False
                break
        if not ok:
            continue
        chosen[level] = s
        if level == p - 1:
            return True
        used[level + 1] = used[level] | s
        level += 1
    return False


def pattern_needs(pattern):
    need = np.zeros((pattern.n, pattern.n), dtype=np.int64)
    for x, y in pattern.edges:
        need[x, y] += 1
        need[y, x] += 1
    return need


def host_masks(n, edges):
    adj = np.zeros(max(n, 1), dtype=np.int64)
    for a, b in edges:
        adj[a] |= 1 << b
        adj[b] |= 1 << a
    return adj, _connected_masks(adj, n)


def is_minor(n, edges, pattern, prepared=None):
    if pattern.n > n:
        return False
    adj, masks = prepared if prepared is not None else host_masks(n, edges)
    return bool(_search(adj, n, masks, pattern_needs(pattern)))
