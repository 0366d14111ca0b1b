"""Regenerate the small-graph corpus used by the minor-checker tests.

    python3 tests/data/make_graphs.py

Writes ``connected_le7.g6`` (every connected graph on 1..7 vertices, from the
networkx atlas) and ``connected_8.g6`` (every connected graph on exactly 8
vertices, obtained by joining a new vertex to each nonempty subset of each
connected 7-vertex graph and removing isomorphic duplicates).

With ``pynauty`` available it also writes ``all_8.g6.gz`` and
``all_9.g6.gz``: every graph (connected or not) on exactly 8 and 9 vertices,
built the same way from all graphs one size smaller and deduplicated by
canonical certificate.  Expected sizes are 12 346 and 274 668.
"""
import gzip
import itertools
from collections import defaultdict
from pathlib import Path

import networkx as nx

HERE = Path(__file__).parent


def connected_up_to_seven():
    return [g for g in nx.graph_atlas_g()[1:] if nx.is_connected(g)]


def connected_eight(seven):
    buckets = defaultdict(list)
    for base in seven:
        if base.number_of_nodes() != 7:
            continue
        for size in range(1, 8):
            for nbrs in itertools.combinations(range(7), size):
                g = base.copy()
                g.add_edges_from((7, v) for v in nbrs)
                key = (g.number_of_edges(), tuple(sorted(d for _, d in g.degree())),
                       nx.weisfeiler_lehman_graph_hash(g, iterations=3))
                if not any(nx.is_isomorphic(g, h) for h in buckets[key]):
                    buckets[key].append(g)
    return [g for group in buckets.values() for g in group]


def write(graphs, name):
    with open(HERE / name, "w") as fh:
        for g in graphs:
            fh.write(nx.to_graph6_bytes(nx.convert_node_labels_to_integers(g),
                                        header=False).decode())


def all_graphs_from(smaller, n):
    """Every graph on ``n`` vertices, as edge lists, from all graphs on ``n - 1``."""
    import pynauty

    seen = set()
    out = []
    for edges in smaller:
        adj = {v: [] for v in range(n)}
        for a, b in edges:
            adj[a].append(b)
        for mask in range(1 << (n - 1)):
            nbrs = [v for v in range(n - 1) if mask >> v & 1]
            adj[n - 1] = nbrs
            cert = pynauty.certificate(pynauty.Graph(n, adjacency_dict=adj))
            if cert not in seen:
                seen.add(cert)
                out.append(list(edges) + [(v, n - 1) for v in nbrs])
    return out


def write_gz(edge_lists, n, name):
    with gzip.open(HERE / name, "wt") as fh:
        for edges in edge_lists:
            g = nx.Graph()
            g.add_nodes_from(range(n))
            g.add_edges_from(edges)
            fh.write(nx.to_graph6_bytes(g, header=False).decode())


if __name__ == "__main__":
    seven = connected_up_to_seven()
    write(seven, "connected_le7.g6")
    eight = connected_eight(seven)
    write(eight, "connected_8.g6")
    print(len(seven), len(eight))
    try:
        import pynauty  # noqa: F401
    except ImportError:
        raise SystemExit("pynauty not installed; skipping all_8 / all_9")
    base = [sorted(g.edges()) for g in nx.graph_atlas_g() if g.number_of_nodes() == 7]
    all8 = all_graphs_from(base, 8)
    write_gz(all8, 8, "all_8.g6.gz")
    all9 = all_graphs_from(all8, 9)
    write_gz(all9, 9, "all_9.g6.gz")
    print(len(all8), len(all9))
