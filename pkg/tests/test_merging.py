import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarse_minor.generators import grid, path, random_tree
from coarse_minor.merging import MergeError, MergeProblem, check_merge_result, merge_partition
from merge_oracle import check, merge_loop


def test_no_merge_at_exact_threshold():
    res = merge_partition(MergeProblem(path(200), [[0], [5], [100]], d=3, r=1))
    assert [a.tolist() for a in res.p_family] == [[0], [5], [100]]
    assert res.level == 1


def test_single_merge_raises_level():
    res = merge_partition(MergeProblem(path(200), [[0], [4], [100]], d=3, r=1))
    assert [a.tolist() for a in res.p_family] == [[0, 4], [100]]
    assert res.level == 2
    assert res.provenance == [[0, 1], [2]]


def test_singleton_family():
    res = merge_partition(MergeProblem(path(10), [[3, 4]], d=5, r=2))
    assert res.level == 2 and len(res.p_family) == 1


def test_overlapping_family_is_rejected():
    with pytest.raises(MergeError):
        merge_partition(MergeProblem(path(10), [[1, 2], [2, 3]], d=1, r=1))


def test_json_has_schema():
    res = merge_partition(MergeProblem(path(200), [[0], [4], [100]], d=3, r=1))
    doc = json.loads(res.dumps())
    assert doc["schema"] == "coarse-minor/merge-result/1" and doc["level"] == 2


def test_allowed_mask_changes_distances():
    g = grid(3, 9)
    allowed = np.ones(g.n, dtype=bool)
    allowed[[4, 13]] = False           # cut the two upper rows in column 4
    a, b = [0], [8]
    free = merge_partition(MergeProblem(g, [a, b], d=5, r=1))
    masked = merge_partition(MergeProblem(g, [a, b], d=5, r=1, allowed=allowed))
    assert len(free.p_family) == 2 and len(masked.p_family) == 2
    near = merge_partition(MergeProblem(g, [[3], [5]], d=1, r=1))
    far = merge_partition(MergeProblem(g, [[3], [5]], d=1, r=1, allowed=allowed))
    assert len(near.p_family) == 1 and len(far.p_family) == 2


@st.composite
def problems(draw):
    n_vertices = draw(st.integers(5, 120))
    seed = draw(st.integers(0, 10 ** 6))
    g = draw(st.sampled_from([path(n_vertices), random_tree(n_vertices, seed),
                              grid(max(1, n_vertices // 10), 10)]))
    verts = draw(st.permutations(range(g.n)))
    n = draw(st.integers(1, min(8, g.n)))
    fam, pos = [], 0
    for _ in range(n):
        size = draw(st.integers(1, 3))
        chunk = list(verts[pos:pos + size])
        if not chunk:
            break
        fam.append(chunk)
        pos += size
    return g, fam, draw(st.integers(0, 6)), draw(st.integers(0, 4))


@given(problems())
def test_merge_matches_reference_loop(prob):
    g, fam, d, r = prob
    res = merge_partition(MergeProblem(g, fam, d=d, r=r))
    ref, level = merge_loop(g, fam, r, d)
    assert [a.tolist() for a in res.p_family] == ref
    assert res.level == level


@given(problems())
def test_merge_postconditions(prob):
    g, fam, d, r = prob
    prob_ = MergeProblem(g, fam, d=d, r=r)
    res = merge_partition(prob_)
    assert check(g, prob_.q_family, r, d, res) == []
    assert check_merge_result(prob_, res) == []
    assert len(res.trace) <= len(fam) - 1


@given(problems(), st.randoms(use_true_random=False))
def test_merge_ignores_input_order(prob, rnd):
    g, fam, d, r = prob
    shuffled = list(fam)
    rnd.shuffle(shuffled)
    a = merge_partition(MergeProblem(g, fam, d=d, r=r))
    b = merge_partition(MergeProblem(g, shuffled, d=d, r=r))
    assert [x.tolist() for x in a.p_family] == [x.tolist() for x in b.p_family]
