import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbcluster.paths import (CapExceeded, canonical_saw_decomposition, check_decomposition,
                             classify_edges, enumerate_nb_paths, enumerate_saw_paths,
                             exact_edge_expectation, exact_path_expectation, is_tangle_free,
                             segment_weight_closed_form, nb_matrix_bruteforce, nb_path_array, nb_sum_bruteforce,
                             path_edge_counts, path_weight, saw_sum_bruteforce, tangle_count,
                             weight_matrix)
from nbcluster.sbm import LabelledGraph, SbmParams, sample_sbm


def complete(n):
    return LabelledGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


# -- classification ---------------------------------------------------------------


@pytest.mark.parametrize("path,counts", [
    ((0, 1, 2, 3), (3, 0, 0, 0)),
    ((0, 1, 0), (1, 1, 0, 1)),
    ((0, 1, 2, 0), (2, 0, 1, 0)),
    ((1, 2, 3, 1, 4), (3, 0, 1, 0)),
    ((0, 1, 2, 0, 1), (2, 1, 1, 0)),
])
def test_classify_examples(path, counts):
    rec = classify_edges(path)
    assert (rec.k_n, rec.k_o, rec.k_r, rec.backtracks) == counts


def test_classify_rejects_bad_paths():
    with pytest.raises(ValueError):
        classify_edges(())
    with pytest.raises(ValueError):
        classify_edges((0, 0, 1))


def test_vertex_and_edge_counts_on_all_short_paths():
    n = 6
    for k in range(1, 6):
        for row in nb_path_array(n, k):
            rec = classify_edges(row)
            assert rec.k_n + rec.k_o + rec.k_r == k
            assert rec.num_vertices == rec.k_n + 1
            assert rec.num_edges == rec.k_n + rec.k_r


# -- enumeration ---------------------------------------------------------------------


def test_nb_path_counts_in_complete_graph():
    # n choices for the start, n-1 for the first step, n-2 afterwards
    for n in (3, 5, 7):
        for k in range(0, 5):
            want = n if k == 0 else n * (n - 1) * (n - 2) ** (k - 1)
            assert nb_path_array(n, k).shape == (want, k + 1)


def test_enumeration_examples():
    assert enumerate_nb_paths(3, 2, 0, 2) == [(0, 1, 2)]
    assert enumerate_nb_paths(3, 2, 0, 0) == []
    assert sorted(enumerate_nb_paths(4, 2, 0, 3)) == [(0, 1, 3), (0, 2, 3)]
    assert len(enumerate_saw_paths(5, 3, 0, 4)) == 3 * 2
    assert enumerate_saw_paths(4, 4, 0, 1) == []
    assert enumerate_saw_paths(4, 0, 2, 2) == [(2,)]
    with pytest.raises(CapExceeded):
        nb_path_array(20, 3)


def test_weights_on_a_single_edge():
    g = LabelledGraph.from_edges(4, [(0, 1)])
    W = weight_matrix(g, 2.0)
    assert W[0, 1] == 0.5 and W[0, 2] == -0.5 and W[1, 1] == 0.0
    assert path_weight(g, 2.0, (0, 1, 2)) == 0.5 * -0.5
    assert path_weight(g, 2.0, (0, 1), n_ref=8) == 0.75


def test_saw_sum_examples():
    K4 = complete(4)
    assert saw_sum_bruteforce(K4, 2.0, 2, 0, 1) == pytest.approx(0.5)
    assert saw_sum_bruteforce(K4, 2.0, 4, 0, 1) == 0.0
    assert saw_sum_bruteforce(K4, 2.0, 1, 0, 1) == nb_sum_bruteforce(K4, 2.0, 1, 0, 1)
    with pytest.raises(ValueError):
        saw_sum_bruteforce(K4, 2.0, 2, 1, 1)


def test_matrix_and_pointwise_sums_agree():
    g = sample_sbm(SbmParams(7, 3.0, 1.0), 4)
    N = nb_matrix_bruteforce(g, 2.0, 4)
    for u, v in [(0, 0), (0, 3), (5, 2)]:
        assert N[u, v] == pytest.approx(nb_sum_bruteforce(g, 2.0, 4, u, v), rel=1e-12, abs=1e-14)


# -- SAW decompositions ----------------------------------------------------------------

GOLDEN = [
    ((1, 2, 3, 1, 4), [((1, 2, 3, 1), 1), ((1, 4), 1)], {1, 4}),
    ((0, 1, 2, 3), [((0, 1, 2, 3), 1)], {0, 3}),
    ((0, 1, 2, 1, 0), [((0, 1, 2), 2)], {0, 2}),
    ((0, 1, 0), [((0, 1), 2)], {0, 1}),
    ((0, 1, 2, 0), [((0, 1, 2, 0), 1)], {0}),
    ((0, 1, 2, 0, 1), [((0, 1), 2), ((1, 2, 0), 1)], {0, 1}),
    ((0, 1, 2, 0, 1, 2), [((0, 1, 2), 2), ((2, 0), 1)], {0, 2}),
    ((0, 1, 2, 3, 1, 0), [((0, 1), 2), ((1, 2, 3, 1), 1)], {0, 1}),
    ((0, 1, 2, 3, 4, 2, 1), [((0, 1), 1), ((1, 2), 2), ((2, 3, 4, 2), 1)], {0, 1, 2}),
    ((0, 1, 2, 3, 0, 4, 5, 0), [((0, 1, 2, 3, 0), 1), ((0, 4, 5, 0), 1)], {0}),
    ((0, 1, 2, 0, 3, 4, 0, 5), [((0, 1, 2, 0), 1), ((0, 3, 4, 0), 1), ((0, 5), 1)], {0, 5}),
    ((0, 1, 2, 1, 3), [((0, 1), 1), ((1, 2), 2), ((1, 3), 1)], {0, 1, 2, 3}),
    ((0, 1, 2, 3, 2, 4), [((0, 1, 2), 1), ((2, 3), 2), ((2, 4), 1)], {0, 2, 3, 4}),
    ((0, 1, 0, 1, 0), [((0, 1), 4)], {0, 1}),
    ((0, 1, 2, 3, 1, 2, 3, 1), [((0, 1), 1), ((1, 2, 3, 1), 2)], {0, 1}),
    ((0, 1, 2, 3, 4, 1, 2, 5), [((0, 1), 1), ((1, 2), 2), ((2, 3, 4, 1), 1), ((2, 5), 1)], {0, 1, 2, 5}),
    ((0, 1, 2, 1, 2, 3), [((0, 1), 1), ((1, 2), 3), ((2, 3), 1)], {0, 1, 2, 3}),
    ((1, 0, 2, 3, 0, 4), [((1, 0), 1), ((0, 2, 3, 0), 1), ((0, 4), 1)], {0, 1, 4}),
    ((0, 1, 2, 3, 4, 0), [((0, 1, 2, 3, 4, 0), 1)], {0}),
    ((0, 1, 2, 3, 1, 4, 5, 3), [((0, 1), 1), ((1, 2, 3), 1), ((3, 1), 1), ((1, 4, 5, 3), 1)], {0, 1, 3}),
]


@pytest.mark.parametrize("path,segments,ends", GOLDEN, ids=[str(g[0]) for g in GOLDEN])
def test_golden_decompositions(path, segments, ends):
    dec = canonical_saw_decomposition(path)
    assert list(zip(dec.segments, dec.multiplicities)) == segments
    assert dec.endpoints == frozenset(ends)
    check_decomposition(path, dec)


def test_extra_cut_set_splits_segments():
    dec = canonical_saw_decomposition((0, 1, 2, 3), U={2})
    assert dec.segments == ((0, 1, 2), (2, 3))
    assert canonical_saw_decomposition((4,)).r == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=9), st.sets(st.integers(0, 5), max_size=2))
def test_decomposition_reproduces_edges(raw, U):
    path = [raw[0]]
    for x in raw[1:]:
        if x != path[-1]:
            path.append(x)
    dec = canonical_saw_decomposition(path, U)
    if len(path) >= 2:
        check_decomposition(path, dec)
        assert sum(m * (len(s) - 1) for s, m in zip(dec.segments, dec.multiplicities)) == len(path) - 1


# -- tangles ---------------------------------------------------------------------------


def test_tangle_free_examples():
    tree = LabelledGraph.from_edges(6, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5)])
    cycle = LabelledGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    bowtie = LabelledGraph.from_edges(5, [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4), (0, 4)])
    for ell in (1, 3):
        assert is_tangle_free(tree, ell).is_tangle_free
        assert is_tangle_free(cycle, ell).is_tangle_free
    rep = is_tangle_free(bowtie, 1)
    assert not rep.is_tangle_free and rep.witness[0] == 0
    with pytest.raises(ValueError):
        is_tangle_free(tree, 0)


def test_tangle_count_examples():
    assert tangle_count((0, 1, 2, 3), 3) == 0
    assert tangle_count((0, 1, 2, 0, 3, 4, 0), 5) == 1
    # loop 0-1-2 crossed twice, loop 0-3-4 once: cut the cheaper loop
    assert tangle_count((0, 1, 2, 0, 1, 2, 0, 3, 4, 0), 5) == 1
    # both loops crossed twice
    assert tangle_count((0, 1, 2, 0, 1, 2, 0, 3, 4, 0, 3, 4, 0), 5) == 2


# -- exact expectations ----------------------------------------------------------------


@pytest.mark.parametrize("su,sv", [(1, 1), (1, -1), (-1, -1)])
def test_single_edge_expectations(su, sv):
    p = SbmParams(10, 3.0, 1.0)
    n, d, s = p.n, p.d, p.s
    assert exact_edge_expectation(p, {(0, 1): 1}, {0: su, 1: sv}) == pytest.approx(su * sv * s / n, abs=1e-15)
    q = (d + su * sv * s) / n
    two = (1 - d / n) ** 2 * q + (d / n) ** 2 * (1 - q)
    assert exact_edge_expectation(p, {(0, 1): 2}, {0: su, 1: sv}) == pytest.approx(two, rel=1e-12)
    assert two == pytest.approx(segment_weight_closed_form(p, 1, 2, su, sv), rel=2 * d / n)


def test_self_avoiding_segment_expectation():
    p = SbmParams(8, 2.0 + 1.8, 2.0 - 1.8)
    dec = canonical_saw_decomposition((0, 1, 2, 3))
    for su, sv in [(1, 1), (1, -1)]:
        got = exact_path_expectation(p, dec, {0: su, 3: sv})
        assert got == pytest.approx(su * sv * p.s**3 / p.n**3, abs=1e-15)
        assert got == pytest.approx(segment_weight_closed_form(p, 3, 1, su, sv), abs=1e-15)


def test_exact_expectation_matches_monte_carlo():
    p = SbmParams(6, 3.0, 1.0)
    edges = {(0, 1): 1, (1, 2): 2}
    exact = exact_edge_expectation(p, edges, {})
    vals = []
    for seed in range(40_000):
        g = sample_sbm(p, seed)
        w = 1.0
        for (x, y), m in edges.items():
            w *= ((1.0 if g.has_edge(x, y) else 0.0) - p.d / p.n) ** m
        vals.append(w)
    vals = np.array(vals)
    assert abs(vals.mean() - exact) < 4 * vals.std() / math.sqrt(vals.size)


def test_expectation_cap():
    p = SbmParams(40, 3.0, 1.0)
    with pytest.raises(CapExceeded):
        exact_edge_expectation(p, {(i, i + 1): 1 for i in range(20)}, {}, max_free=10)
