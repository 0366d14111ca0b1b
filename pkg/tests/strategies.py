"""Shared hypothesis strategies and brute-force helpers for the test-suite."""
import itertools

import networkx as nx
import numpy as np
from hypothesis import strategies as st

from coarse_minor.graph import Graph


@st.composite
def graphs(draw, min_n=1, max_n=12, connected=False):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    if connected:
        order = draw(st.permutations(range(n)))
        for i in range(1, n):
            j = draw(st.integers(0, i - 1))
            chosen.append((order[i], order[j]))
    return Graph.from_edges(n, chosen)


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


def all_pairs(g: Graph) -> np.ndarray:
    """Distance matrix by Floyd-Warshall; -1 for unreachable."""
    inf = 10 ** 9
    d = np.full((g.n, g.n), inf, dtype=np.int64)
    np.fill_diagonal(d, 0)
    for u, v in g.edges():
        d[u, v] = d[v, u] = 1
    for k in range(g.n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    d[d >= inf] = -1
    return d
