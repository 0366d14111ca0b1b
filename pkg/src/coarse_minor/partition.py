"""Layered graph-partitions: constants, the layer-by-layer builder, an
independent checker, fat-model extraction, and quasi-isometry certificates.

Bags are balls around their attachment sets taken in the graph minus all
lower layers.  A bag stores the radius it was built with (``height``); the
measured eccentricity can be smaller near the top of the graph.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .fatmodel import FatModel, ModelError, PatternGraph
from .graph import (INF, Graph, as_vertex_set, ball, blocks, boundary_of_mask, diameter_of,
                    mask_of, near_components, shortest_path_to_sources)
from .merging import MergeProblem, merge_partition
from .theta import Confirmation, DispersionQuery, Witness, audit_attachments, theta_from_dispersion

PARTITION_SCHEMA = "coarse-minor/partition/1"


class ProfileError(ValueError):
    """The chosen constants cannot support the bag invariants on this input."""


class DisconnectedGraphError(ValueError):
    pass


# ---------------------------------------------------------------- constants

@dataclass(frozen=True)
class ConstantsProfile:
    mode: str
    t: int
    k: int
    N: int
    L: int
    Lp: int
    R0: int
    R: int
    valid: bool = True

    def to_json(self) -> dict:
        return {"mode": self.mode, "t": self.t, "K": self.k, "N": self.N, "L": self.L,
                "Lp": self.Lp, "R0": self.R0, "R": self.R, "valid": self.valid}

    @classmethod
    def from_json(cls, doc: dict) -> "ConstantsProfile":
        return cls(doc["mode"], doc["t"], doc["K"], doc["N"], doc["L"], doc["Lp"],
                   doc["R0"], doc["R"], doc.get("valid", True))


def paper_N(t: int) -> int:
    return -(-((t - 1) ** 3 * (t - 2)) // 2)


def paper_L(t: int, k: int, n: int | None = None) -> int:
    n = paper_N(t) if n is None else n
    return -(-3 * k // 2) + n * 3 * k


def paper_Lp(t: int, k: int, n: int | None = None, ell: int | None = None) -> int:
    n = paper_N(t) if n is None else n
    ell = paper_L(t, k, n) if ell is None else ell
    return n * (4 * ell + 5 * k) + 2 * ell + 3 * k


def merge_diameter_bound(t: int, k: int, n: int, ell: int) -> int:
    """Diameter bound for the new attachment sets after both merge rounds with ``n`` classes each."""
    r, d = -(-3 * k // 2), 3 * k
    base = 18 * t * k - 12 * k - 2
    d1 = n * base + (n - 1) * (2 * r + n * d)
    r2, d2 = ell + 2 * k, 4 * ell + 5 * k
    return n * d1 + (n - 1) * (2 * r2 + n * d2)


def compute_constants(t: int, k: int, mode: str = "paper", *, N: int | None = None,
                      L: int | None = None, Lp: int | None = None,
                      R0: int | None = None) -> ConstantsProfile:
    """Evaluate the construction constants exactly.

    ``mode="paper"`` uses the closed formulas.  ``mode="scaled"`` lets the
    caller override ``N`` (default 1) and any of ``L``, ``Lp``, ``R0``; missing
    values are derived from the same formulas, with ``R0`` defaulting to the
    merging bound for ``2N`` classes.
    """
    if t < 3:
        raise ValueError("t must be at least 3; smaller t is not supported")
    if k < 1:
        raise ValueError("K must be at least 1")
    if mode == "paper":
        if any(v is not None for v in (N, L, Lp, R0)):
            raise ValueError("overrides are only allowed with the scaled profile")
        n = paper_N(t)
        ell = paper_L(t, k)
        lp = paper_Lp(t, k)
        r0 = 15 * t ** 12 * k + 18 * t ** 9 * k
    elif mode == "scaled":
        n = 1 if N is None else int(N)
        if n < 1:
            raise ValueError("N must be positive")
        ell = paper_L(t, k, n) if L is None else int(L)
        lp = paper_Lp(t, k, n, ell) if Lp is None else int(Lp)
        r0 = merge_diameter_bound(t, k, 2 * n, ell) if R0 is None else int(R0)
    else:
        raise ValueError(f"unknown profile mode {mode!r}")
    valid = ell >= -(-3 * k // 2) and lp >= 2 * ell + 3 * k and r0 >= 0
    return ConstantsProfile(mode, t, k, n, ell, lp, r0, r0 + 2 * lp, valid)


# --------------------------------------------------------------- partitions

@dataclass
class Bag:
    node: int
    layer: int
    vertices: np.ndarray
    attachment: np.ndarray
    height: int
    depth: int
    inner_level: int | None = None
    outer_level: int | None = None

    def to_json(self) -> dict:
        doc = {"vertices": self.vertices.tolist(), "attachment": self.attachment.tolist(),
               "height": self.height, "depth": self.depth, "layer": self.layer}
        if self.inner_level is not None:
            doc["levels"] = [self.inner_level, self.outer_level]
        return doc


@dataclass
class LayeredPartition:
    host: Graph
    bags: list[Bag]
    h_edges: list[tuple[int, int]]
    profile: ConstantsProfile
    root: int = 0

    def bag_of(self) -> np.ndarray:
        out = np.full(self.host.n, -1, dtype=np.int64)
        for b in self.bags:
            out[b.vertices] = b.node
        return out

    def quotient(self) -> Graph:
        return Graph.from_edges(len(self.bags), self.h_edges)

    def layers(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for b in self.bags:
            out.setdefault(b.layer, []).append(b.node)
        return out

    def to_json(self) -> dict:
        return {"schema": PARTITION_SCHEMA, "root": self.root,
                "root_vertex": int(self.bags[self.root].attachment[0]),
                "H_edges": [list(e) for e in self.h_edges],
                "bags": {str(b.node): b.to_json() for b in self.bags},
                "profile": self.profile.to_json()}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict, host: Graph) -> "LayeredPartition":
        bags = []
        for key in sorted(doc["bags"], key=int):
            b = doc["bags"][key]
            lv = b.get("levels", [None, None])
            bags.append(Bag(int(key), int(b["layer"]), as_vertex_set(b["vertices"]),
                            as_vertex_set(b["attachment"]), int(b["height"]), int(b["depth"]),
                            lv[0], lv[1]))
        return cls(host, bags, [tuple(e) for e in doc["H_edges"]],
                   ConstantsProfile.from_json(doc["profile"]), int(doc.get("root", 0)))


@dataclass
class BuildOutcome:
    partition: LayeredPartition | None = None
    witness: FatModel | None = None
    source: str = ""
    step: int = -1
    merges: list[dict] = field(default_factory=list)

    @property
    def is_witness(self) -> bool:
        return self.witness is not None


def _upper(g: Graph, attach: np.ndarray, radius: int, below: np.ndarray) -> np.ndarray:
    """Ball of ``radius`` around ``attach`` avoiding the vertices flagged in ``below``."""
    if radius < 0:
        return np.zeros(0, dtype=np.int64)
    return ball(g, attach, radius, ~below)


def _lower(g: Graph, attach: np.ndarray, radius: int, below: np.ndarray) -> np.ndarray:
    if radius <= 0:
        return np.zeros(0, dtype=np.int64)
    return np.setdiff1d(ball(g, attach, radius), _upper(g, attach, radius, below))


def _close_pairs(g: Graph, sets: list[np.ndarray], cap: int, allowed=None) -> np.ndarray:
    """Boolean matrix: sets ``i`` and ``j`` lie closer than ``cap``."""
    n = len(sets)
    owner = np.full(g.n, -1, dtype=np.int64)
    for i, s in enumerate(sets):
        owner[s] = i
    out = np.zeros((n, n), dtype=np.bool_)
    if cap <= 0:
        return out
    for i, s in enumerate(sets):
        d = _kernels.bfs(g.indptr, g.indices, s, allowed, cap - 1)
        hit = owner[(d >= 0) & (owner >= 0)]
        out[i, hit] = True
    out |= out.T
    np.fill_diagonal(out, False)
    return out


def _boundary_audit(g: Graph, x_set: np.ndarray, k: int, t: int, comp: np.ndarray,
                    bnd: np.ndarray):
    """Near-component audit of one component whose shape the builder already guarantees."""
    fam = near_components(g, bnd, 3 * k)
    query = DispersionQuery(g, x_set, comp, t, k)
    if len(fam) >= t:
        out = theta_from_dispersion(query, hint=[int(c[0]) for c in fam.classes[:t]])
        out.source = "boundary:count"
        return out, fam
    limit = 6 * k * (t - 1)
    for cls in fam.classes:
        if cls.size > 1 and diameter_of(g, cls, limit - 1) >= INF:
            from .theta import audit_boundary
            out = audit_boundary(g, x_set, k, comp, t)
            return out, fam
    return Confirmation({"near_components": len(fam)}), fam


def build_partition(g: Graph, profile: ConstantsProfile, root: int | None = None) -> BuildOutcome:
    """Run the layer-by-layer construction; returns a partition or a fat Theta_t witness."""
    if not profile.valid:
        raise ProfileError(f"profile {profile.to_json()} cannot keep heights and depths in range")
    if g.n == 0:
        raise ValueError("empty graph")
    labels = _kernels.label_components(g.indptr, g.indices)
    if labels.max() > 0:
        raise DisconnectedGraphError("build_partition needs a connected graph")
    k, t, ell, lp = profile.k, profile.t, profile.L, profile.Lp
    o = 0 if root is None else int(root)
    if not 0 <= o < g.n:
        raise IndexError("root vertex out of range")

    bag_of = np.full(g.n, -1, dtype=np.int64)
    layer_of_bag: list[int] = [0]
    vs = ball(g, [o], lp)
    bags = [Bag(0, 0, vs, np.array([o], dtype=np.int64), lp, 0)]
    bag_of[vs] = 0
    below_prev = np.zeros(g.n, dtype=np.bool_)     # G^{n-1}
    src, dst = g.arc_sources, g.indices
    merges_log: list[dict] = []
    step = 0
    while True:
        inside = bag_of >= 0
        outside = ~inside
        if not outside.any():
            break
        cross = outside[src] & inside[dst]
        if not cross.any():
            break
        comp_lab = _kernels.label_components(g.indptr, g.indices, outside)
        n_comp = int(comp_lab.max()) + 1
        touched: list[set] = [set() for _ in range(n_comp)]
        for c, b in set(zip(comp_lab[src[cross]].tolist(), bag_of[dst[cross]].tolist())):
            touched[c].add(b)
        frontier = np.unique(src[cross])
        order = np.argsort(comp_lab[frontier], kind="stable")
        fr_sorted = frontier[order]
        cuts = np.flatnonzero(np.diff(comp_lab[fr_sorted])) + 1
        bnd_of = np.split(fr_sorted, cuts)
        comp_members = _group(comp_lab, n_comp)

        near_out = _kernels.bfs(g.indptr, g.indices, np.flatnonzero(outside), None, k - 1)
        y_mask = inside & (near_out < 0)
        x_lab = _kernels.label_components(g.indptr, g.indices, y_mask)
        if x_lab[o] < 0:
            raise ProfileError("root vertex lies within K-1 of the unexplored part")
        x_set = np.flatnonzero(x_lab == x_lab[o])

        classes_of: list[list[np.ndarray]] = []
        for c in range(n_comp):
            res, fam = _boundary_audit(g, x_set, k, t, comp_members[c], bnd_of[c])
            if res.is_witness:
                return BuildOutcome(witness=res.model, source=res.source, step=step,
                                    merges=merges_log)
            classes_of.append(fam.classes)

        families: dict[tuple, list[int]] = {}
        zone_lab = None
        if any(len(tb) >= 2 for tb in touched):
            zone_lab = _kernels.label_components(g.indptr, g.indices, ~below_prev)
        for c in range(n_comp):
            if len(touched[c]) >= 2:
                key = ("zone", int(zone_lab[comp_members[c][0]]))
            else:
                key = ("single", c)
            families.setdefault(key, []).append(c)
        fam_list = sorted(families.values(), key=lambda cs: min(int(comp_members[c][0]) for c in cs))

        new_sets: list[tuple[np.ndarray, int, int, int, int]] = []
        for comps in fam_list:
            touched_bags = sorted(set().union(*(touched[c] for c in comps)))
            if len(touched_bags) >= 2:
                if len(touched_bags) > t - 1:
                    raise RuntimeError("a component of the remainder meets more than t-1 bags")
                below = np.zeros(g.n, dtype=np.bool_)
                xs = []
                for h in touched_bags:
                    bg = bags[h]
                    lower_mask = _below_mask(bag_of, layer_of_bag, bg.layer)
                    up = _upper(g, bg.attachment, bg.height - k - 1, lower_mask)
                    dn = _lower(g, bg.attachment, bg.depth, lower_mask)
                    xs.append(np.union1d(up, dn))
                res = audit_attachments(g, xs, k, t)
                if res.is_witness:
                    return BuildOutcome(witness=res.model, source=res.source, step=step,
                                        merges=merges_log)
            b_family = sorted((cls for c in comps for cls in classes_of[c]), key=lambda a: int(a[0]))
            close = _close_pairs(g, b_family, 3 * k)
            chosen: list[int] = []
            for i in range(len(b_family)):
                if not any(close[i, j] for j in chosen):
                    chosen.append(i)
            groups = {i: [i] for i in chosen}
            for i in range(len(b_family)):
                if i not in groups:
                    target = min(j for j in chosen if close[i, j])
                    groups[target].append(i)
            b2 = [np.sort(np.concatenate([b_family[i] for i in groups[j]])) for j in chosen]
            p1 = MergeProblem(g, b2, 3 * k, -(-3 * k // 2))
            m1 = merge_partition(p1)
            p2 = MergeProblem(g, m1.p_family, 4 * ell + 5 * k, ell + 2 * k, allowed=outside)
            m2 = merge_partition(p2)
            merges_log.append({"step": step, "components": [int(comp_members[c][0]) for c in comps],
                               "first": m1.to_json(), "second": m2.to_json()})
            r_a = m1.level
            big_r = m2.level + ell + k
            if r_a > ell or big_r > lp:
                raise ProfileError(f"step {step}: depth {r_a} > {ell} or height {big_r} > {lp}; "
                                   f"{len(b2)} classes exceed the profile")
            for a in m2.p_family:
                new_sets.append((a, big_r, r_a, m1.level, m2.level))

        new_sets.sort(key=lambda item: int(item[0][0]))
        layer = step + 1
        fresh = np.zeros(g.n, dtype=np.bool_)
        for a, big_r, r_a, lv1, lv2 in new_sets:
            if diameter_of(g, a, profile.R0) > profile.R0:
                raise ProfileError(f"attachment set at {int(a[0])} has diameter above R0={profile.R0}")
            vs = ball(g, a, big_r, outside)
            if np.any(fresh[vs]):
                raise RuntimeError("new bags overlap; merging separation failed")
            fresh[vs] = True
            node = len(bags)
            bags.append(Bag(node, layer, vs, a, big_r, r_a, lv1, lv2))
            layer_of_bag.append(layer)
            bag_of[vs] = node
        below_prev = inside
        step += 1

    e = g.edge_array()
    bu, bv = bag_of[e[:, 0]], bag_of[e[:, 1]]
    diff = bu != bv
    pairs = np.unique(np.sort(np.stack([bu[diff], bv[diff]], axis=1), axis=1), axis=0)
    lp_out = LayeredPartition(g, bags, [tuple(map(int, p)) for p in pairs], profile, 0)
    return BuildOutcome(partition=lp_out, step=step, merges=merges_log)


def _group(labels: np.ndarray, count: int) -> list[np.ndarray]:
    valid = np.flatnonzero(labels >= 0)
    order = np.argsort(labels[valid], kind="stable")
    verts = valid[order]
    cuts = np.flatnonzero(np.diff(labels[verts])) + 1
    parts = np.split(verts, cuts)
    assert len(parts) == count
    return parts


def _below_mask(bag_of: np.ndarray, layer_of_bag: Sequence[int], layer: int) -> np.ndarray:
    """Vertices of all bags in layers strictly below ``layer``."""
    lay = np.asarray(layer_of_bag, dtype=np.int64)
    inside = bag_of >= 0
    out = np.zeros(bag_of.size, dtype=np.bool_)
    out[inside] = lay[bag_of[inside]] < layer
    return out


# ----------------------------------------------------------------- checking

@dataclass
class PartitionReport:
    valid: bool
    violations: list[str]
    measured: dict

    def to_json(self) -> dict:
        return {"valid": self.valid, "violations": self.violations, "measured": self.measured}


def verify_partition(lp: LayeredPartition, profile: ConstantsProfile | None = None,
                     k: int | None = None, ell: int | None = None) -> PartitionReport:
    """Re-check every structural property from scratch and list what fails.

    ``k`` and ``ell`` default to the profile values; the extraction step uses
    this with a smaller ``k`` and a correspondingly larger ``ell``.
    """
    prof = profile or lp.profile
    k = prof.k if k is None else k
    ell = prof.L if ell is None else ell
    g = lp.host
    fails: list[str] = []
    measured: dict = {}
    nb = len(lp.bags)

    bag_of = np.full(g.n, -1, dtype=np.int64)
    for idx, b in enumerate(lp.bags):
        if b.node != idx:
            fails.append(f"bag at position {idx} carries node id {b.node}")
        if b.vertices.size == 0:
            fails.append(f"bag {idx} is empty")
        if np.any(bag_of[b.vertices] >= 0):
            fails.append(f"bag {idx} overlaps an earlier bag")
        bag_of[b.vertices] = idx
    if np.any(bag_of < 0):
        fails.append(f"{int(np.sum(bag_of < 0))} vertices are in no bag")
        return PartitionReport(False, fails, measured)

    e = g.edge_array()
    bu, bv = bag_of[e[:, 0]], bag_of[e[:, 1]]
    diff = bu != bv
    real = set(map(tuple, np.unique(np.sort(np.stack([bu[diff], bv[diff]], 1), 1), axis=0).tolist()))
    claimed = set((min(a, b), max(a, b)) for a, b in lp.h_edges)
    for pair in sorted(real - claimed):
        fails.append(f"G-edge between bags {pair} has no H-edge")
    for pair in sorted(claimed - real):
        fails.append(f"H-edge {pair} is not realised by a G-edge (dishonest)")
    h = Graph.from_edges(nb, sorted(claimed))

    hd = _kernels.bfs(h.indptr, h.indices, np.array([lp.root]), None, -1)
    for b in lp.bags:
        if hd[b.node] != b.layer:
            fails.append(f"bag {b.node} declares layer {b.layer} but sits at H-distance {hd[b.node]}")
    for a, c in claimed:
        if lp.bags[a].layer == lp.bags[c].layer:
            fails.append(f"H-edge {a}-{c} inside layer {lp.bags[a].layer}")

    lay = np.array([b.layer for b in lp.bags], dtype=np.int64)
    vlayer = lay[bag_of]
    for b in lp.bags:
        below = vlayer < b.layer
        if b.node == lp.root:
            if b.attachment.size != 1:
                fails.append("root attachment must be a single vertex")
            expect = ball(g, b.attachment, b.height)
            if b.depth != 0:
                fails.append(f"root depth {b.depth} != 0")
        else:
            touching = mask_of(g, boundary_of_mask(g, ~below))
            real_att = b.vertices[touching[b.vertices]]
            if not np.array_equal(real_att, b.attachment):
                fails.append(f"bag {b.node}: stored attachment differs from the vertices touching lower layers")
            if b.attachment.size == 0:
                fails.append(f"bag {b.node}: empty attachment")
                continue
            expect = _upper(g, b.attachment, b.height, below)
            if not 0 < b.depth <= ell:
                fails.append(f"bag {b.node}: depth {b.depth} outside (0, {ell}]")
            if b.height < 2 * ell + 3 * k and ell == prof.L and k == prof.k:
                fails.append(f"bag {b.node}: height {b.height} < 2l+3K = {2 * ell + 3 * k}")
            if b.height > prof.Lp:
                fails.append(f"bag {b.node}: height {b.height} > L' = {prof.Lp}")
        if b.height < ell + k:
            fails.append(f"bag {b.node}: height {b.height} < l+K = {ell + k}")
        if not np.array_equal(expect, b.vertices):
            fails.append(f"bag {b.node} is not level: ball has {expect.size} vertices, bag has {b.vertices.size}")
            continue
        up = _upper(g, b.attachment, b.height - ell - k, below)
        dn = _lower(g, b.attachment, b.depth, below)
        core = np.union1d(up, dn)
        if core.size == 0 or not _connected(g, core):
            fails.append(f"bag {b.node}: upper core plus undergrowth is not connected")

    fails.extend(_check_separation(g, lp, bag_of, h, claimed, k))
    fails.extend(_check_component_contacts(g, lp, bag_of, lay, prof.t))

    worst = 0
    for b in lp.bags:
        cap = prof.R
        shortcut = 2 * b.height + diameter_of(g, b.attachment, cap + 1)
        if shortcut <= prof.R:
            continue
        dm = diameter_of(g, b.vertices, cap + 1)
        worst = max(worst, dm)
        if dm > prof.R:
            fails.append(f"bag {b.node}: diameter above R = {prof.R}")
    measured["bags"] = nb
    measured["layers"] = int(lay.max()) + 1 if nb else 0
    return PartitionReport(not fails, fails, measured)


def _connected(g: Graph, vs: np.ndarray) -> bool:
    d = _kernels.bfs(g.indptr, g.indices, vs[:1], mask_of(g, vs), -1)
    return bool(np.all(d[vs] >= 0))


def _check_separation(g, lp, bag_of, h, claimed, k) -> list[str]:
    """Non-adjacent bags are far apart or separated in G by a third bag."""
    out = []
    reach = 2 * max(b.depth for b in lp.bags) + 3 * k
    for b in lp.bags:
        d = _kernels.bfs(g.indptr, g.indices, b.vertices, None, reach - 1)
        hit = np.flatnonzero(d >= 0)
        near_bags = np.unique(bag_of[hit])
        for other in near_bags:
            other = int(other)
            if other <= b.node or (b.node, other) in claimed:
                continue
            c = lp.bags[other]
            need = 2 * max(b.depth, c.depth) + 3 * k
            dist = int(d[c.vertices][d[c.vertices] >= 0].min())
            if dist >= need:
                continue
            if not _separated(g, bag_of, b, c, [int(x) for x in near_bags]):
                out.append(f"bags {b.node},{other} at distance {dist} < {need} with no separating bag")
    return out


def _separated(g, bag_of, b, c, candidates) -> bool:
    for x in candidates:
        if x in (b.node, c.node):
            continue
        allowed = bag_of != x
        d = _kernels.bfs(g.indptr, g.indices, b.vertices, allowed, -1)
        if np.all(d[c.vertices] < 0):
            return True
    return False


def _check_component_contacts(g, lp, bag_of, lay, t) -> list[str]:
    out = []
    vlayer = lay[bag_of]
    for n in range(int(lay.max()) + 1):
        lab = _kernels.label_components(g.indptr, g.indices, vlayer >= n)
        sel = vlayer == n
        pairs = np.unique(np.stack([lab[sel], bag_of[sel]], 1), axis=0)
        comp_ids, counts = np.unique(pairs[:, 0], return_counts=True)
        for cid, cnt in zip(comp_ids, counts):
            if cnt > t - 1:
                out.append(f"a component of G minus layers < {n} meets {cnt} > t-1 bags of layer {n}")
    return out


# --------------------------------------------------------------- extraction

def _is_two_connected(nodes: list[int], edges: list[tuple[int, int]]) -> bool:
    if len(nodes) < 3:
        return False
    pos = {v: i for i, v in enumerate(nodes)}
    sub = Graph.from_edges(len(nodes), [(pos[a], pos[b]) for a, b in edges])
    parts = blocks(sub)
    return len(parts) == 1 and parts[0].size == len(nodes)


def extract_fat_model(lp: LayeredPartition, j_edges: Sequence[tuple[int, int]], k: int | None = None,
                      ell: int | None = None) -> FatModel:
    """Turn a 2-connected subgraph of the quotient into a ``k``-fat model in the host.

    For ``k`` below the build fatness the buffer grows to ``ell = L + (K_build - k)``,
    which keeps every hypothesis of the extraction argument satisfied.
    """
    prof = lp.profile
    k = prof.k if k is None else int(k)
    if k < 1:
        raise ModelError("extraction needs k >= 1")
    if k > prof.k and ell is None:
        raise ModelError(f"k={k} exceeds the fatness {prof.k} the partition was built for")
    ell = prof.L + (prof.k - k) if ell is None else int(ell)
    g = lp.host
    edges = sorted({(min(a, b), max(a, b)) for a, b in j_edges})
    claimed = {(min(a, b), max(a, b)) for a, b in lp.h_edges}
    for e in edges:
        if e not in claimed:
            raise ModelError(f"{e} is not an edge of the quotient graph")
    nodes = sorted({v for e in edges for v in e})
    if not _is_two_connected(nodes, edges):
        raise ModelError("the chosen subgraph is not 2-connected")

    bag_of = lp.bag_of()
    lay = np.array([b.layer for b in lp.bags], dtype=np.int64)
    vlayer = lay[bag_of]
    below_cache: dict[int, np.ndarray] = {}

    def below_layer(x):
        layer = lp.bags[x].layer
        if layer not in below_cache:
            below_cache[layer] = vlayer < layer
        return below_cache[layer]

    index = {x: i for i, x in enumerate(nodes)}
    sets = {}
    for x in nodes:
        b = lp.bags[x]
        up = _upper(g, b.attachment, b.height - ell - k, below_layer(x))
        dn = _lower(g, b.attachment, b.depth, below_layer(x))
        sets[x] = [up, dn]

    # first host arc (in CSR order) from each bag to each bag of the next layer
    src = g.arc_sources
    bs, bt = bag_of[src], bag_of[g.indices]
    cross = np.flatnonzero(lay[bt] == lay[bs] + 1)
    keys = bs[cross] * len(lp.bags) + bt[cross]
    uniq, first = np.unique(keys, return_index=True)
    contact = dict(zip(uniq.tolist(), cross[first].tolist()))

    paths = []
    pattern_edges = []
    for a, c in edges:
        lo, hi = (a, c) if lay[a] < lay[c] else (c, a)
        if lay[hi] != lay[lo] + 1:
            raise ModelError(f"edge {a}-{c} does not join consecutive layers")
        blo, bhi = lp.bags[lo], lp.bags[hi]
        pick = contact.get(lo * len(lp.bags) + hi)
        if pick is None:
            raise ModelError(f"no host edge realises {lo}-{hi}")
        u, v = int(src[pick]), int(g.indices[pick])
        dist = _kernels.bfs(g.indptr, g.indices, blo.attachment, ~below_layer(lo), blo.height)
        if dist[u] != blo.height:
            raise ModelError(f"bag {lo} is not level at the contact vertex {u}")
        q = [v] + shortest_path_to_sources(g, dist, u)
        r_hi = bhi.depth
        if r_hi + k > ell + k + 1 or ell + k + 1 >= len(q):
            raise ModelError("bag heights and depths do not leave room for a branch path")
        paths.append(q[r_hi:r_hi + k + 1])
        sets[lo].append(np.asarray(q[r_hi + k:ell + k + 2], dtype=np.int64))
        pattern_edges.append((index[hi], index[lo]))

    branch = [np.unique(np.concatenate(sets[x])) for x in nodes]
    pattern = PatternGraph.from_edges(pattern_edges, len(nodes), "quotient-subgraph")
    return FatModel(pattern, branch, paths, k)


def compose_with_minor(inner: FatModel, node_ids: Sequence[int], minor: FatModel,
                       quotient_edges: Sequence[tuple[int, int]]) -> FatModel:
    """Push a minor model living on quotient nodes through a fat model of that quotient subgraph.

    ``inner`` models the subgraph whose vertices are ``node_ids`` (in order)
    and whose edges are ``quotient_edges`` (in the pattern-edge order of
    ``inner``).  ``minor`` is a plain model of some pattern inside that subgraph.
    """
    pos = {int(x): i for i, x in enumerate(node_ids)}
    edge_index = {}
    for e, (a, b) in enumerate(quotient_edges):
        edge_index[(min(a, b), max(a, b))] = e
    owner = {}
    for p, s in enumerate(minor.branch_sets):
        for x in s.tolist():
            owner[x] = p
    branch = []
    for p, s in enumerate(minor.branch_sets):
        parts = [inner.branch_sets[pos[x]] for x in s.tolist()]
        for (a, b), e in edge_index.items():
            if owner.get(a) == p and owner.get(b) == p:
                parts.append(np.asarray(inner.branch_paths[e], dtype=np.int64))
        branch.append(np.unique(np.concatenate(parts)))
    paths = []
    for (x, y), path in zip(minor.pattern.edges, minor.branch_paths):
        a, b = path[0], path[-1]
        if a == b:
            raise ModelError("minor model must realise pattern edges by host edges")
        e = edge_index[(min(a, b), max(a, b))]
        hp = list(inner.branch_paths[e])
        first_owner = inner.pattern.edges[e][0]
        if node_ids[first_owner] != a:
            hp = hp[::-1]
        paths.append(hp)
    return FatModel(minor.pattern, branch, paths, inner.fatness)


# --------------------------------------------------------- quasi-isometries

@dataclass
class QIReport:
    mapping: np.ndarray
    claimed: tuple[float, float]
    bound: int
    pairs_checked: int
    exhaustive: bool
    violations: list[dict]
    worst_contraction: float
    worst_expansion: float
    m_measured: float
    surjective: bool

    @property
    def valid(self) -> bool:
        return not self.violations and self.surjective

    def to_json(self) -> dict:
        return {"schema": "coarse-minor/qi-report/1", "claimed": list(self.claimed),
                "bound": self.bound, "pairs_checked": self.pairs_checked,
                "exhaustive": self.exhaustive, "violations": self.violations[:50],
                "violation_count": len(self.violations),
                "worst_contraction": self.worst_contraction,
                "worst_expansion": self.worst_expansion, "M_measured": self.m_measured,
                "surjective": self.surjective, "valid": self.valid}


def bag_diameter_bound(lp: LayeredPartition) -> int:
    return max(diameter_of(lp.host, b.vertices) for b in lp.bags)


def quasi_isometry(lp: LayeredPartition, mapping: np.ndarray | None = None,
                   exhaustive_limit: int = 3000, samples: int = 100_000,
                   seed: int = 0) -> QIReport:
    """Check both distance inequalities of the bag map on all or sampled vertex pairs."""
    g = lp.host
    h = lp.quotient()
    phi = lp.bag_of() if mapping is None else np.asarray(mapping, dtype=np.int64)
    bound = bag_diameter_bound(lp)
    a_add = bound / (bound + 1)
    surjective = bool(np.unique(phi).size == h.n)
    exhaustive = g.n <= exhaustive_limit
    rng = np.random.default_rng(seed)
    if exhaustive:
        sources = np.arange(g.n)
        per = None
    else:
        n_src = max(1, min(g.n, int(math.isqrt(samples))))
        sources = np.sort(rng.choice(g.n, size=n_src, replace=False))
        per = max(1, samples // n_src)
    hdist_cache: dict[int, np.ndarray] = {}
    violations = []
    checked = 0
    worst_c = 0.0
    worst_e = 0.0
    m_meas = 1.0
    for s in sources:
        dg = _kernels.bfs(g.indptr, g.indices, np.array([s]), None, -1)
        hs = int(phi[s])
        if hs not in hdist_cache:
            hdist_cache[hs] = _kernels.bfs(h.indptr, h.indices, np.array([hs]), None, -1)
        dh_all = hdist_cache[hs]
        targets = np.arange(s + 1, g.n) if per is None else rng.integers(0, g.n, size=per)
        targets = targets[targets != s]
        dgt = dg[targets]
        dht = dh_all[phi[targets]]
        checked += targets.size
        bad1 = dht > dgt
        bad2 = dgt > (bound + 1) * dht + bound
        for idx in np.flatnonzero(bad1 | bad2)[:20]:
            violations.append({"u": int(s), "v": int(targets[idx]), "d_G": int(dgt[idx]),
                               "d_H": int(dht[idx]),
                               "inequality": "d_H <= d_G" if bad1[idx] else "d_G <= (R+1) d_H + R"})
        pos = dgt > 0
        if pos.any():
            worst_e = max(worst_e, float((dht[pos] / dgt[pos]).max()))
            worst_c = max(worst_c, float((dgt[pos] / np.maximum(dht[pos], 1)).max()))
            m_meas = max(m_meas, float((dgt[pos] / (dht[pos] + a_add)).max()))
    return QIReport(phi, (bound + 1, a_add), bound, int(checked), exhaustive, violations,
                    worst_c, worst_e, m_meas, surjective)
