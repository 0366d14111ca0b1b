import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarse_minor.fatmodel import ModelError, verify_fat_model
from coarse_minor.generators import comb, cycle, grid, path, random_tree, theta
from coarse_minor.graph import Graph
from coarse_minor.partition import (Bag, ConstantsProfile, DisconnectedGraphError,
                                    LayeredPartition, ProfileError, build_partition,
                                    compute_constants, extract_fat_model, quasi_isometry,
                                    verify_partition)
from constants_oracle import constants


# ---------------------------------------------------------------- constants

def test_constants_for_three_and_one():
    p = compute_constants(3, 1)
    assert (p.N, p.L, p.Lp, p.R0, p.R) == (4, 14, 275, 8_325_909, 8_326_459)


@pytest.mark.parametrize("t,k", [(3, 1), (3, 7), (4, 1), (5, 3), (9, 2)])
def test_constants_match_rational_oracle(t, k):
    p = compute_constants(t, k)
    assert {"N": p.N, "L": p.L, "Lp": p.Lp, "R0": p.R0, "R": p.R} == constants(t, k)


def test_constants_for_four():
    assert compute_constants(4, 1).N == 27


@given(st.integers(3, 8), st.integers(1, 50))
def test_inner_radius_below_level(t, k):
    assert -(-3 * k // 2) <= compute_constants(t, k).L


def test_constants_reject_small_t_and_bad_overrides():
    with pytest.raises(ValueError):
        compute_constants(2, 1)
    with pytest.raises(ValueError):
        compute_constants(3, 0)
    with pytest.raises(ValueError):
        compute_constants(3, 1, "paper", N=1)
    assert not compute_constants(3, 1, "scaled", L=1).valid


def test_scaled_profile_defaults():
    p = compute_constants(3, 1, "scaled")
    assert p.N == 1 and p.L == 5 and p.Lp == 38 and p.valid
    assert ConstantsProfile.from_json(p.to_json()) == p


# ------------------------------------------------------------------ builder

def test_short_path_is_one_bag():
    out = build_partition(path(100), compute_constants(3, 1))
    assert len(out.partition.bags) == 1 and out.partition.h_edges == []


def test_long_path_interval_bags():
    g = path(1000)
    lp = build_partition(g, compute_constants(3, 1)).partition
    bags = [b.vertices.tolist() for b in lp.bags]
    assert bags[0] == list(range(276))
    start = 276
    for b in lp.bags[1:]:
        size = min(32, 1000 - start)
        assert b.vertices.tolist() == list(range(start, start + size))
        assert (b.height, b.depth) == (31, 2)
        start += size
    assert start == 1000
    assert sorted(lp.h_edges) == [(i, i + 1) for i in range(len(bags) - 1)]
    assert verify_partition(lp).valid


def test_comb_gives_theta_witness():
    g = comb(600, 60, 20)
    prof = compute_constants(3, 1, "scaled")
    out = build_partition(g, prof)
    assert out.is_witness and out.witness.pattern.name == "theta:3"
    assert verify_fat_model(g, out.witness, prof.k).valid


def test_disconnected_and_invalid_inputs():
    with pytest.raises(DisconnectedGraphError):
        build_partition(Graph.from_edges(4, [(0, 1), (2, 3)]), compute_constants(3, 1))
    with pytest.raises(ProfileError):
        build_partition(path(5), compute_constants(3, 1, "scaled", L=1))


def test_root_override():
    g = path(1000)
    lp = build_partition(g, compute_constants(3, 1), root=999).partition
    assert lp.bags[0].vertices.tolist() == list(range(724, 1000))
    assert verify_partition(lp).valid


def test_partition_json_round_trip():
    g = cycle(1000)
    lp = build_partition(g, compute_constants(3, 1)).partition
    doc = json.loads(lp.dumps())
    assert doc["schema"] == "coarse-minor/partition/1"
    back = LayeredPartition.from_json(doc, g)
    assert back.dumps() == lp.dumps()


@settings(max_examples=25)
@given(st.sampled_from(["path", "tree", "cycle", "grid"]), st.integers(20, 500),
       st.integers(0, 1000))
def test_builder_outputs_always_verify(family, n, seed):
    g = {"path": lambda: path(n), "tree": lambda: random_tree(n, seed),
         "cycle": lambda: cycle(n), "grid": lambda: grid(max(1, n // 20), 20)}[family]()
    prof = compute_constants(3, 1, "scaled")
    out = build_partition(g, prof)
    if out.is_witness:
        assert verify_fat_model(g, out.witness, prof.k).valid
    else:
        assert verify_partition(out.partition).valid


# ----------------------------------------------------------------- verifier

def identity_partition(g, root=0):
    dist = np.asarray(__import__("coarse_minor").distances_from(g, [root]))
    bags = [Bag(v, int(dist[v]), np.array([v]), np.array([v]), 0, 0 if v == root else 1)
            for v in range(g.n)]
    return LayeredPartition(g, bags, [tuple(e) for e in g.edges()], compute_constants(3, 1), root)


def test_identity_partition_fails_height_bound():
    rep = verify_partition(identity_partition(path(10)))
    assert not rep.valid
    assert any("height 0 < l+K = 15" in v for v in rep.violations)


def test_moved_vertex_breaks_levelness():
    g = path(1000)
    lp = build_partition(g, compute_constants(3, 1)).partition
    b1, b2 = lp.bags[1], lp.bags[2]
    moved = int(b1.vertices[-1])
    b1.vertices = b1.vertices[:-1]
    b2.vertices = np.sort(np.append(b2.vertices, moved))
    rep = verify_partition(lp)
    assert any("not level" in v for v in rep.violations)


def test_dishonest_edge_is_reported():
    g = path(1000)
    lp = build_partition(g, compute_constants(3, 1)).partition
    lp.h_edges = lp.h_edges + [(0, 5)]
    rep = verify_partition(lp)
    assert any("dishonest" in v for v in rep.violations)


# --------------------------------------------------------------- extraction

@pytest.fixture(scope="module")
def cycle_partition():
    g = cycle(1000)
    return g, build_partition(g, compute_constants(3, 1)).partition


def test_extraction_on_cycle_quotient(cycle_partition):
    g, lp = cycle_partition
    assert len(lp.bags) >= 3
    m = extract_fat_model(lp, lp.h_edges, 1)
    assert verify_fat_model(g, m, 1).valid


def test_extraction_below_build_fatness():
    g = cycle(3000)
    lp = build_partition(g, compute_constants(3, 3, "scaled")).partition
    for k in (1, 2, 3):
        assert verify_fat_model(g, extract_fat_model(lp, lp.h_edges, k), k).valid
    with pytest.raises(ModelError):
        extract_fat_model(lp, lp.h_edges, 4)


def test_extraction_rejects_non_biconnected(cycle_partition):
    _, lp = cycle_partition
    with pytest.raises(ModelError, match="2-connected"):
        extract_fat_model(lp, lp.h_edges[:1])
    a, b = lp.h_edges[0]
    two = [e for e in lp.h_edges if b in e][:2]
    with pytest.raises(ModelError, match="2-connected"):
        extract_fat_model(lp, two)


# ---------------------------------------------------------- quasi-isometry

def test_identity_partition_is_isometric():
    rep = quasi_isometry(identity_partition(grid(4, 5)))
    assert rep.valid and rep.claimed == (1, 0.0)
    assert rep.worst_contraction == 1.0 and rep.worst_expansion == 1.0


def test_long_path_quasi_isometry():
    lp = build_partition(path(1000), compute_constants(3, 1)).partition
    rep = quasi_isometry(lp)
    assert rep.valid and rep.exhaustive
    assert rep.bound == 275 and rep.m_measured <= 276


def test_swapped_images_are_caught():
    lp = build_partition(path(1000), compute_constants(3, 1)).partition
    phi = lp.bag_of()
    phi[[0, 999]] = phi[[999, 0]]
    rep = quasi_isometry(lp, phi)
    assert not rep.valid and rep.violations


def test_sampled_mode():
    lp = build_partition(path(5000), compute_constants(3, 1, "scaled")).partition
    rep = quasi_isometry(lp, samples=2000)
    assert not rep.exhaustive and rep.valid and rep.pairs_checked > 1000
