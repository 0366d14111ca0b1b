import json

import numpy as np
import pytest

from coarse_minor import distortion
from coarse_minor.distortion import (ProfilePolicy, approximate_distortion, check_embedding,
                                     minimal_minor_subgraph, star_augment, _witness_from_quotient)
from coarse_minor.fatmodel import PatternGraph, verify_fat_model
from coarse_minor.generators import cycle, path, theta
from coarse_minor.graph import Graph, ball
from coarse_minor.minor import MinorResult, has_minor
from coarse_minor.partition import build_partition, compute_constants

SCALED = ProfilePolicy("scaled")


@pytest.fixture(scope="module")
def theta_report():
    return approximate_distortion(theta(3, 600), 3, SCALED, paranoid=True)


def test_short_path_succeeds_immediately():
    rep = approximate_distortion(path(100), 3, paranoid=True)
    assert rep.k_min == 1 and rep.paranoid["valid"]
    assert len(rep.success.partition.bags) == 1
    assert rep.lower_bound_witness is None


def test_cycle_succeeds_immediately():
    rep = approximate_distortion(cycle(50), 3, paranoid=True)
    assert rep.k_min == 1 and rep.paranoid["valid"]


def test_theta_needs_larger_fatness(theta_report):
    rep = theta_report
    assert rep.k_min >= 2
    # frozen from a run: the boundary audit fires up to K = 5
    assert rep.k_min == 6
    w = rep.lower_bound_witness
    assert w.pattern.edges == PatternGraph.k2t(3).edges
    assert verify_fat_model(theta(3, 600), w, rep.k_min - 1).valid
    assert has_minor(rep.success.partition.quotient(), PatternGraph.k2t(3)).answer is False
    assert rep.paranoid["valid"]


def test_schedule_doubles_then_bisects(theta_report):
    assert sorted(theta_report.attempts) == [1, 2, 4, 5, 6, 8]


def test_exhaustive_loop_agrees(theta_report):
    rep = approximate_distortion(theta(3, 600), 3, SCALED, exhaustive=True)
    assert rep.k_min == theta_report.k_min
    assert sorted(rep.attempts) == list(range(1, rep.k_min + 1))


def test_parallel_attempts_agree(theta_report):
    rep = approximate_distortion(theta(3, 600), 3, SCALED, jobs=2, exhaustive=True)
    assert rep.k_min == theta_report.k_min


def test_report_is_deterministic():
    a = approximate_distortion(theta(3, 200), 3, SCALED).to_json()
    b = approximate_distortion(theta(3, 200), 3, SCALED).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["schema"] == "coarse-minor/distortion-report/1"


def test_input_errors():
    with pytest.raises(ValueError):
        approximate_distortion(path(10), 2)
    with pytest.raises(ValueError):
        approximate_distortion(Graph.from_edges(4, [(0, 1), (2, 3)]), 3)


def test_unknown_minor_checks_are_not_successes(monkeypatch):
    monkeypatch.setattr(distortion, "has_minor", lambda *a, **k: MinorResult(None, None, 7))
    rep = approximate_distortion(path(40), 3)
    assert rep.k_min is None
    assert all(a.outcome == "unknown" for a in rep.attempts.values())
    assert rep.warnings and "unknown" in rep.warnings[0]


# --------------------------------------------------------- quotient witness

def test_quotient_minor_becomes_fat_witness():
    g = cycle(3000)
    for k in (1, 2):
        lp = build_partition(g, compute_constants(3, 3 * k, "scaled")).partition
        pattern = PatternGraph.k2t(2)
        res = has_minor(lp.quotient(), pattern)
        assert res.answer is True
        w = _witness_from_quotient(lp, res.certificate, k, 10 ** 6)
        assert verify_fat_model(g, w, k).valid


def test_minimal_subgraph_is_biconnected():
    g = Graph.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4), (4, 5)])
    edges, model = minimal_minor_subgraph(g, PatternGraph.theta(2), list(g.edges()), 10 ** 5)
    nodes = sorted({v for e in edges for v in e})
    assert len(edges) == 3 and len(nodes) == 3
    assert verify_fat_model(Graph.from_edges(6, edges), model, 0).valid


# --------------------------------------------------------------- star trick

def test_star_augment_identity_for_injective_map():
    h = path(5)
    h2, phi2 = star_augment(h, np.arange(5))
    assert h2 == h and phi2.tolist() == list(range(5))


def test_star_augment_two_to_one():
    h = path(2)
    h2, phi2 = star_augment(h, np.array([0, 1, 1]))
    assert h2.n == 3 and h2.has_edge(1, 2)
    assert phi2.tolist() == [0, 1, 2]


def test_star_augment_on_long_path_map():
    g = path(1000)
    lp = build_partition(g, compute_constants(3, 1)).partition
    h2, phi2 = star_augment(lp.quotient(), lp.bag_of())
    assert np.unique(phi2).size == g.n
    for start in (0, 5, 20):
        window = ball(h2, [start], 2)[:40]
        sub, _ = h2.induced(window)
        assert sub.n <= 40
        assert has_minor(sub, PatternGraph.k2t(3)).answer is False
    chk = check_embedding(g, h2, phi2, 275, exhaustive_limit=0, samples=5000)
    assert chk.violations == 0 and chk.max_expansion <= 3
