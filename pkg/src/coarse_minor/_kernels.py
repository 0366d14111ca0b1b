"""BFS kernels over CSR adjacency.

Two interchangeable backends compute the same distance arrays: a numba
queue BFS and a level-synchronous numpy BFS.  Set the environment variable
``COARSE_MINOR_BACKEND=numpy`` (or ``COARSE_MINOR_NO_NUMBA=1``) before import
to force the numpy path.
"""
from __future__ import annotations

import os

import numpy as np

UNREACHED = -1

_FORCE_NUMPY = (
    os.environ.get("COARSE_MINOR_BACKEND", "").lower() == "numpy"
    or os.environ.get("COARSE_MINOR_NO_NUMBA", "") not in ("", "0")
)

try:
    if _FORCE_NUMPY:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _bfs_numpy(indptr, indices, sources, allowed, max_depth):
    n = indptr.shape[0] - 1
    dist = np.full(n, UNREACHED, dtype=np.int64)
    frontier = np.unique(sources)
    if allowed is not None:
        frontier = frontier[allowed[frontier]]
    if frontier.size == 0:
        return dist
    dist[frontier] = 0
    depth = 0
    while frontier.size and (max_depth < 0 or depth < max_depth):
        starts = indptr[frontier]
        lens = indptr[frontier + 1] - starts
        total = int(lens.sum())
        if total == 0:
            break
        offs = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(total)
        nbrs = indices[offs]
        nbrs = nbrs[dist[nbrs] == UNREACHED]
        if allowed is not None:
            nbrs = nbrs[allowed[nbrs]]
        frontier = np.unique(nbrs)
        depth += 1
        dist[frontier] = depth
    return dist


if HAVE_NUMBA:

    @njit(cache=True)
    def _bfs_numba(indptr, indices, sources, allowed, use_mask, max_depth):
        n = indptr.shape[0] - 1
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        head = 0
        tail = 0
        for s in sources:
            if dist[s] == -1 and (not use_mask or allowed[s]):
                dist[s] = 0
                queue[tail] = s
                tail += 1
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            if max_depth >= 0 and du >= max_depth:
                continue
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if dist[w] == -1 and (not use_mask or allowed[w]):
                    dist[w] = du + 1
                    queue[tail] = w
                    tail += 1
        return dist

    @njit(cache=True)
    def _min_parent_numba(indptr, indices, dist, v):
        d = dist[v]
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            if dist[w] == d - 1:
                return w
        return -1


    @njit(cache=True)
    def _reach_numba(indptr, indices, sources, max_depth):
        n = indptr.shape[0] - 1
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        tail = 0
        for s in sources:
            if dist[s] == -1:
                dist[s] = 0
                queue[tail] = s
                tail += 1
        head = 0
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            if max_depth >= 0 and du >= max_depth:
                continue
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if dist[w] == -1:
                    dist[w] = du + 1
                    queue[tail] = w
                    tail += 1
        verts = queue[:tail].copy()
        return verts, dist[verts]

    @njit(cache=True)
    def _set_diameter_numba(indptr, indices, vs, cap):
        n = indptr.shape[0] - 1
        dist = np.full(n, -1, dtype=np.int64)
        member = np.zeros(n, dtype=np.bool_)
        for v in vs:
            member[v] = True
        queue = np.empty(n, dtype=np.int64)
        best = 0
        for s in vs:
            dist[s] = 0
            queue[0] = s
            head = 0
            tail = 1
            found = 1
            while head < tail and found < vs.shape[0]:
                u = queue[head]
                head += 1
                du = dist[u]
                if cap >= 0 and du >= cap:
                    continue
                for p in range(indptr[u], indptr[u + 1]):
                    w = indices[p]
                    if dist[w] == -1:
                        dist[w] = du + 1
                        queue[tail] = w
                        tail += 1
                        if member[w]:
                            found += 1
                            if du + 1 > best:
                                best = du + 1
            for i in range(tail):
                dist[queue[i]] = -1
            if found < vs.shape[0]:
                return -1
        return best


_EMPTY_MASK = np.zeros(1, dtype=np.bool_)


def bfs(indptr, indices, sources, allowed=None, max_depth=-1):
    """Multi-source BFS distances; ``UNREACHED`` marks unreachable vertices.

    ``allowed`` is an optional boolean mask restricting the traversal to an
    induced subgraph; ``max_depth < 0`` means unbounded.
    """
    sources = np.asarray(sources, dtype=np.int64)
    if HAVE_NUMBA:
        if allowed is None:
            return _bfs_numba(indptr, indices, sources, _EMPTY_MASK, False, max_depth)
        return _bfs_numba(indptr, indices, sources, allowed, True, max_depth)
    return _bfs_numpy(indptr, indices, sources, allowed, max_depth)


def min_parent(indptr, indices, dist, v):
    """Lowest-id neighbour of ``v`` one BFS level closer to the sources."""
    if HAVE_NUMBA:
        return int(_min_parent_numba(indptr, indices, dist, v))
    nb = indices[indptr[v]:indptr[v + 1]]
    hit = nb[dist[nb] == dist[v] - 1]
    return int(hit[0]) if hit.size else -1


def reach(indptr, indices, sources, max_depth=-1):
    """Vertices within ``max_depth`` of the sources with their distances, nondecreasing in distance."""
    sources = np.asarray(sources, dtype=np.int64)
    if HAVE_NUMBA:
        return _reach_numba(indptr, indices, sources, max_depth)
    dist = _bfs_numpy(indptr, indices, sources, None, max_depth)
    verts = np.flatnonzero(dist >= 0)
    order = np.argsort(dist[verts], kind="stable")
    return verts[order], dist[verts[order]]


def set_diameter(indptr, indices, vs, cap=-1):
    """Largest distance between two members of ``vs``; ``-1`` if a pair is farther than ``cap``."""
    vs = np.asarray(vs, dtype=np.int64)
    if vs.size <= 1:
        return 0
    if HAVE_NUMBA:
        return int(_set_diameter_numba(indptr, indices, vs, cap))
    best = 0
    for v in vs:
        dv = _bfs_numpy(indptr, indices, np.array([v]), None, cap)[vs]
        if np.any(dv < 0):
            return -1
        best = max(best, int(dv.max()))
    return best


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def _label_components_numpy(indptr, indices, allowed):
    n = indptr.shape[0] - 1
    labels = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for v in range(n):
        if labels[v] != -1 or (allowed is not None and not allowed[v]):
            continue
        dist = _bfs_numpy(indptr, indices, np.array([v]), allowed, -1)
        labels[dist >= 0] = nxt
        nxt += 1
    return labels


if HAVE_NUMBA:

    @njit(cache=True)
    def _label_components_numba(indptr, indices, allowed, use_mask):
        n = indptr.shape[0] - 1
        labels = np.full(n, -1, dtype=np.int64)
        stack = np.empty(n, dtype=np.int64)
        nxt = 0
        for v in range(n):
            if labels[v] != -1 or (use_mask and not allowed[v]):
                continue
            labels[v] = nxt
            top = 0
            stack[top] = v
            top += 1
            while top > 0:
                top -= 1
                u = stack[top]
                for p in range(indptr[u], indptr[u + 1]):
                    w = indices[p]
                    if labels[w] == -1 and (not use_mask or allowed[w]):
                        labels[w] = nxt
                        stack[top] = w
                        top += 1
            nxt += 1
        return labels


def label_components(indptr, indices, allowed=None):
    """Component label per vertex (``-1`` outside ``allowed``).

    Labels are assigned in order of each component's lowest vertex id.
    """
    if HAVE_NUMBA:
        if allowed is None:
            return _label_components_numba(indptr, indices, _EMPTY_MASK, False)
        return _label_components_numba(indptr, indices, allowed, True)
    return _label_components_numpy(indptr, indices, allowed)
