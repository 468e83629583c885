"""Complete hosts, lifted instances, balance analysis, pattern library."""

from fractions import Fraction

import numpy as np
import pytest

from conftest import edge_lists, random_hypergraph
from hyperboot.builders import (SizeGuardError, bootstrap_lift,
                                complete_uniform, enumerate_copies,
                                k_balance_analysis, lift_regular_degree,
                                load_pattern, pattern_names)
from hyperboot.hypergraph import build_hypergraph
from oracles import kbalance_oracle

K3 = build_hypergraph(3, 2, [[0, 1], [0, 2], [1, 2]])
PATH3 = build_hypergraph(3, 2, [[0, 1], [1, 2]])


def test_complete_4_3_shape():
    H = complete_uniform(4, 3)
    assert H.num_edges == 4
    assert all(H.degree(v) == 3 for v in range(4))


def test_complete_6_3_pair_codegrees():
    H = complete_uniform(6, 3)
    assert H.num_edges == 20
    for u in range(6):
        for v in range(u + 1, 6):
            assert H.codegree([u, v]) == 4


def test_complete_rejects_bad_parameters():
    with pytest.raises(ValueError):
        complete_uniform(3, 1)
    with pytest.raises(ValueError):
        complete_uniform(2, 3)


def test_triangle_lift_of_k4():
    H = bootstrap_lift(complete_uniform(4, 2), K3)
    assert (H.n, H.num_edges) == (6, 4)
    assert all(H.degree(v) == 2 for v in range(H.n))


def test_triangle_lift_of_k5():
    H = bootstrap_lift(complete_uniform(5, 2), K3)
    assert (H.n, H.num_edges) == (10, 10)
    assert all(H.degree(v) == 3 for v in range(H.n))


def test_triangle_lift_fast_path_matches_generic():
    # the complete-host shortcut must agree with copy enumeration
    G = complete_uniform(7, 2)
    fast = bootstrap_lift(G, K3)
    copies = {frozenset(c) for c in enumerate_copies(G, K3)}
    assert fast.num_edges == len(copies)
    assert {frozenset(e) for e in fast.edges()} == copies


def test_lift_with_overlapping_triples_pattern():
    G = complete_uniform(5, 3)
    F = build_hypergraph(4, 3, [[0, 1, 2], [1, 2, 3]])
    H = bootstrap_lift(G, F)
    copies = {frozenset(c) for c in enumerate_copies(G, F)}
    assert H.n == G.num_edges
    assert {frozenset(e) for e in H.edges()} == copies
    # each copy is a pair of triples sharing exactly two vertices
    assert all(len(c) == 2 for c in copies)


def test_lift_regular_degree_examples():
    assert lift_regular_degree(complete_uniform(4, 2), K3) == 2
    assert lift_regular_degree(complete_uniform(20, 2), K3) == 18
    assert lift_regular_degree(complete_uniform(5, 2), PATH3) == 6


def test_lift_of_complete_graph_is_regular():
    for n in (4, 9, 17, 33, 60):
        G = complete_uniform(n, 2)
        H = bootstrap_lift(G, K3)
        degs = H.degrees()
        assert degs.min() == degs.max() == n - 2
        assert lift_regular_degree(G, K3) == n - 2


def test_lift_rejects_uniformity_below_three():
    # a single-edge pattern would produce a 1-uniform lift
    F = build_hypergraph(2, 2, [[0, 1]])
    with pytest.raises(ValueError):
        bootstrap_lift(complete_uniform(5, 2), F)


def test_generic_lift_size_guard():
    G = complete_uniform(1100, 2)   # 604450 host edges, over the generic limit
    F = build_hypergraph(4, 2, [[0, 1], [1, 2], [2, 3]])
    with pytest.raises(SizeGuardError):
        bootstrap_lift(G, F)


def test_balance_quartet():
    r_k3 = k_balance_analysis(load_pattern("k3"))
    assert (r_k3.density, r_k3.strictly_balanced) == (Fraction(2), True)

    r_k4 = k_balance_analysis(load_pattern("k4"))
    assert (r_k4.density, r_k4.strictly_balanced) == (Fraction(5, 2), True)

    r_tp = k_balance_analysis(load_pattern("triangle_pendant"))
    assert r_tp.density == Fraction(3, 2)
    assert not r_tp.strictly_balanced
    assert r_tp.witness_density == Fraction(2)
    witness = {frozenset(e) for e in r_tp.witness_edges}
    assert witness == {frozenset(e) for e in K3.edges()}

    r_lt = k_balance_analysis(load_pattern("loose_triangle_3"))
    assert (r_lt.density, r_lt.strictly_balanced) == (Fraction(2, 3), True)


def test_balance_default_k_is_uniformity():
    assert k_balance_analysis(load_pattern("loose_triangle_3")).k == 3
    assert k_balance_analysis(load_pattern("k3")).k == 2


def test_balance_matches_subset_enumeration():
    rng = np.random.default_rng(41)
    checked = 0
    while checked < 25:
        n = int(rng.integers(4, 8))
        m = int(rng.integers(2, 7))
        F = random_hypergraph(rng, n, 2, m)
        if F.num_edges < 2:
            continue
        spanned = set()
        for e in F.edges():
            spanned.update(e)
        if len(spanned) <= 2:
            continue
        report = k_balance_analysis(F, k=2)
        density, strict, worst = kbalance_oracle(edge_lists(F), 2)
        assert report.density == density
        assert report.strictly_balanced == strict
        if not strict:
            assert report.witness_density == worst
        checked += 1


def test_balance_guards():
    with pytest.raises(ValueError):
        k_balance_analysis(build_hypergraph(3, 2, [[0, 1]]))
    big = complete_uniform(8, 2)   # 28 edges > analysis limit
    with pytest.raises(SizeGuardError):
        k_balance_analysis(big)


def test_pattern_library_round_trip():
    names = pattern_names()
    assert names == sorted(names)
    assert {"k3", "k4", "c4", "triangle_pendant", "loose_triangle_3"} <= set(names)
    for name in names:
        F = load_pattern(name)
        assert F.num_edges >= 2
    with pytest.raises(ValueError):
        load_pattern("nonesuch")
