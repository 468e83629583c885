"""Deterministic closure and the incremental infection state."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import edge_lists, random_hypergraph
from hyperboot.builders import complete_uniform
from hyperboot.engine import (InfectionState, closure, percolates,
                              sample_edge_set, sample_vertex_set)
from hyperboot.hypergraph import build_hypergraph
from oracles import closure_oracle, open_by_vertex_oracle, open_edges_oracle

PATH_HOST = build_hypergraph(5, 3, [[0, 1, 2], [0, 2, 3], [0, 3, 4]])


def test_closure_complete_4_3():
    H = complete_uniform(4, 3)
    assert closure(H, [0, 1]) == {0, 1, 2, 3}
    assert closure(H, [0]) == {0}
    assert closure(H, []) == set()


def test_closure_cascades_along_path_host():
    assert closure(PATH_HOST, [1, 2]) == {0, 1, 2, 3, 4}


def test_percolates_wrapper():
    H = complete_uniform(4, 3)
    assert percolates(H, [2, 3])
    assert not percolates(H, [3])


def test_closure_respects_active_subset():
    H = complete_uniform(4, 3)
    # with only one live edge the cascade stops after a single infection
    assert closure(H, [0, 1], active=[0]) == {0, 1, 2}
    assert closure(H, [0, 1], active=[]) == {0, 1}


def test_closure_idempotent_and_monotone():
    rng = np.random.default_rng(3)
    for _ in range(20):
        H = random_hypergraph(rng, 10, 3, 16)
        small = set(int(v) for v in rng.choice(10, size=3, replace=False))
        big = small | {int(rng.integers(10))}
        cs = closure(H, small)
        assert closure(H, cs) == cs
        assert cs <= closure(H, big)


@settings(max_examples=80, deadline=None)
@given(data=st.data())
def test_closure_matches_rescan_oracle(data):
    n = data.draw(st.integers(3, 12))
    m = data.draw(st.integers(0, 20))
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    H = random_hypergraph(rng, n, 3, m) if m else build_hypergraph(n, 3, [])
    k = data.draw(st.integers(0, n))
    infected0 = sorted(int(v) for v in rng.choice(n, size=k, replace=False))
    edges = edge_lists(H)
    assert closure(H, infected0) == closure_oracle(edges, infected0)
    if H.num_edges:
        keep = [i for i in range(H.num_edges) if rng.random() < 0.5]
        assert (closure(H, infected0, active=keep)
                == closure_oracle(edges, infected0, keep))


def test_initial_open_set_example():
    st0 = InfectionState(PATH_HOST, [1, 2])
    assert st0.open_edges() == [0]
    assert st0.unique_healthy_vertex(0) == 0
    assert st0.open_at(0) == {0}


def test_infect_opens_downstream_edge():
    st0 = InfectionState(PATH_HOST, [1, 2])
    st0.infect(0)
    assert set(st0.open_edges()) == {1}
    assert st0.unique_healthy_vertex(1) == 3
    assert st0.open_at(3) == {1}


def test_infect_rejects_repeat_and_remove_rejects_dead():
    st0 = InfectionState(PATH_HOST, [1, 2])
    with pytest.raises(ValueError):
        st0.infect(1)
    st0.remove_edge(0)
    with pytest.raises(ValueError):
        st0.remove_edge(0)


def _assert_state_matches_scratch(st0: InfectionState, edges) -> None:
    infected = {int(v) for v in np.flatnonzero(st0.infected)}
    live = [int(e) for e in np.flatnonzero(st0.live)]
    want_open = open_edges_oracle(edges, infected, live)
    assert set(st0.open_edges()) == want_open
    assert st0.open_count == len(want_open)
    by_vertex = open_by_vertex_oracle(edges, infected, live)
    got = {v: set(s) for v, s in st0.per_vertex_open.items()}
    assert got == by_vertex
    assert st0.infected_count == len(infected)
    for e in live:
        healthy = len(set(edges[e]) - infected)
        assert st0.healthy_count[e] == healthy


def test_incremental_state_equals_scratch_recomputation():
    rng = np.random.default_rng(11)
    for trial in range(30):
        n = int(rng.integers(5, 21))
        H = random_hypergraph(rng, n, 3, int(rng.integers(5, 40)))
        edges = edge_lists(H)
        k = int(rng.integers(0, n // 2 + 1))
        st0 = InfectionState(H, sorted(int(v) for v in
                                       rng.choice(n, size=k, replace=False)))
        _assert_state_matches_scratch(st0, edges)
        for _ in range(40):
            healthy = np.flatnonzero(~st0.infected)
            live = np.flatnonzero(st0.live)
            moves = []
            if len(healthy):
                moves.append("infect")
            if len(live):
                moves.append("remove")
            if not moves:
                break
            move = moves[int(rng.integers(len(moves)))]
            if move == "infect":
                st0.infect(int(healthy[int(rng.integers(len(healthy)))]))
            else:
                st0.remove_edge(int(live[int(rng.integers(len(live)))]))
            _assert_state_matches_scratch(st0, edges)


def test_closure_accepts_numpy_and_duplicate_ids():
    H = complete_uniform(4, 3)
    assert closure(H, np.array([0, 1, 1])) == {0, 1, 2, 3}


def test_samplers_degenerate_and_deterministic():
    H = complete_uniform(5, 3)
    rng = np.random.default_rng(7)
    assert len(sample_vertex_set(H, 0.0, rng)) == 0
    assert len(sample_vertex_set(H, 1.0, rng)) == H.n
    assert not sample_edge_set(H, 0.0, rng).any()
    assert sample_edge_set(H, 1.0, rng).all()
    a = sample_vertex_set(H, 0.4, np.random.default_rng(99))
    b = sample_vertex_set(H, 0.4, np.random.default_rng(99))
    assert np.array_equal(a, b)
