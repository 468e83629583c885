"""Two-phase revelation processes, coin coupling, trace contract."""

import io
import math

import numpy as np
import pytest

from conftest import edge_lists, random_hypergraph
from hyperboot import rng as rng_mod
from hyperboot.builders import bootstrap_lift, complete_uniform, load_pattern
from hyperboot.engine import closure
from hyperboot.hypergraph import build_hypergraph
from hyperboot.processes import (PHASE1, PHASE2_SUB, PHASE2_SUPER, QUIESCENT,
                                 TRACE_HEADER, CoinOracle, ProcessState,
                                 drain, full_pipeline, phase1_run,
                                 run_to_quiescence, saturation_threshold,
                                 subcritical_round, supercritical_budget,
                                 supercritical_round, write_trace_csv)
from hyperboot.theory import ModelParams
from oracles import open_by_vertex_oracle, open_edges_oracle

TWO_EDGE = build_hypergraph(5, 3, [[0, 1, 2], [2, 3, 4]])


def _coins(q, seed=0):
    return CoinOracle(q, seed, rng_mod.EDGE_COIN)


def _choice(seed=0):
    return rng_mod.substream(seed, rng_mod.PROCESS_CHOICE)


def test_coin_oracle_is_a_pure_function_of_seed_and_edge():
    a = _coins(0.4, seed=5)
    b = _coins(0.4, seed=5)
    # draw in different orders; outcomes must agree edge by edge
    left = [a.outcome(e) for e in range(40)]
    right = [b.outcome(e) for e in reversed(range(40))][::-1]
    assert left == right
    assert list(a.success_mask(40)) == left
    assert _coins(0.0).success_mask(30).sum() == 0
    assert _coins(1.0).success_mask(30).sum() == 30


def test_coin_oracle_rejects_bad_probability():
    with pytest.raises(ValueError):
        _coins(1.5)


def test_phase1_with_dead_coins_only_removes_edges():
    H = bootstrap_lift(complete_uniform(10, 2), load_pattern("k3"))
    infected0 = [0, 1, 2, 3]
    # budget below the initial open count: exactly that many removals
    ps = ProcessState(H, infected0, _coins(0.0, 11), _choice(11))
    q0 = ps.state.open_count
    assert q0 > 3
    went_quiet = phase1_run(ps, 3)
    assert not went_quiet
    assert len(ps.sampled) == 3 and ps.m == 3
    assert ps.state.infected_count == len(infected0)
    # budget above: stops at quiescence after q0 removals
    ps2 = ProcessState(H, infected0, _coins(0.0, 11), _choice(11))
    went_quiet = phase1_run(ps2, 10 ** 6, trace_stride=50)
    assert went_quiet
    assert len(ps2.sampled) == q0 and ps2.m == q0
    assert ps2.state.infected_count == len(infected0)
    assert ps2.trace[-1].phase == QUIESCENT


def test_phase1_with_sure_coins_reaches_closure():
    rng = np.random.default_rng(2)
    for _ in range(10):
        H = random_hypergraph(rng, 12, 3, 25)
        infected0 = sorted(int(v) for v in rng.choice(12, 3, replace=False))
        ps = ProcessState(H, infected0, _coins(1.0), _choice())
        phase1_run(ps, 10 ** 6)
        assert ps.state.infected_set() == closure(H, infected0)


def test_subcritical_round_on_empty_open_set_is_noop():
    ps = ProcessState(complete_uniform(4, 3), [], _coins(1.0))
    hits = subcritical_round(ps)
    assert hits == 0
    assert ps.state.infected_count == 0
    assert ps.sampled == []


def test_subcritical_round_reveals_snapshot_simultaneously():
    # both edges are open at vertex 2 and get revealed in the same round
    st0 = ProcessState(TWO_EDGE, [0, 1, 3, 4], _coins(1.0))
    assert set(st0.state.open_edges()) == {0, 1}
    assert st0.state.unique_healthy_vertex(0) == 2
    assert st0.state.unique_healthy_vertex(1) == 2
    hits = subcritical_round(st0)
    assert hits == 2
    assert st0.state.infected_count == 5
    assert st0.state.open_count == 0


def test_subcritical_rounds_have_disjoint_open_sets():
    rng = np.random.default_rng(8)
    for _ in range(10):
        H = random_hypergraph(rng, 14, 3, 40)
        infected0 = sorted(int(v) for v in rng.choice(14, 4, replace=False))
        ps = ProcessState(H, infected0, _coins(0.6, int(rng.integers(2**32))))
        seen_before = set()
        for _ in range(6):
            snapshot = set(ps.state.open_edges())
            assert snapshot.isdisjoint(seen_before)
            subcritical_round(ps)
            seen_before |= snapshot
            if not ps.state.open_count:
                break


def test_supercritical_budget_example():
    n = int(round(math.e ** 10))
    assert supercritical_budget(n, 2) == 178
    with pytest.raises(ValueError):
        supercritical_budget(n, 0)


def test_saturation_threshold_example():
    params = ModelParams(r=3, c=0.5, alpha=1.0, d=10_000.0)
    assert saturation_threshold(params) == 252


def test_supercritical_round_zero_reveals_whole_open_set():
    params = ModelParams(r=3, c=0.5, alpha=1.0, d=3.0)
    ps = ProcessState(TWO_EDGE, [0, 1, 3, 4], _coins(1.0), params=params)
    supercritical_round(ps)
    assert ps.rounds == 1
    assert ps.state.infected_count == 5
    assert ps.state.open_count == 0


def test_supercritical_round_respects_budget_prefix():
    # two healthy vertices with open degrees between the round budget and
    # the saturation threshold; round 1 takes each one's lowest-id prefix
    n = 60
    edges = [[0, a, a + 1] for a in range(1, 24, 2)]          # 12 at vertex 0
    edges += [[b, b + 1, 59] for b in range(25, 35, 2)]       # 5 at vertex 59
    H = build_hypergraph(n, 3, edges)
    infected0 = [v for v in range(1, 59)]
    params = ModelParams(r=3, c=0.5, alpha=1.0, d=64.0).bind(n)
    budget = supercritical_budget(n, 1)
    threshold = saturation_threshold(params)
    assert budget == 9 and threshold == 13
    ps = ProcessState(H, infected0, _coins(0.0, 3), params=params)
    ps.rounds = 1   # skip the full reveal of round zero
    open_at_0 = sorted(ps.state.open_at(0))
    open_at_59 = sorted(ps.state.open_at(59))
    assert len(open_at_0) == 12 and len(open_at_59) == 5
    supercritical_round(ps)
    assert ps.sampled == open_at_0[:budget] + open_at_59
    assert sorted(ps.state.open_at(0)) == open_at_0[budget:]


def test_run_to_quiescence_equals_closure_under_success_set():
    rng = np.random.default_rng(21)
    for trial in range(25):
        n = int(rng.integers(6, 16))
        H = random_hypergraph(rng, n, 3, int(rng.integers(5, 35)))
        k = int(rng.integers(0, n // 2 + 1))
        infected0 = sorted(int(v) for v in rng.choice(n, k, replace=False))
        coins = _coins(float(rng.random()), int(rng.integers(2 ** 32)))
        got = run_to_quiescence(H, infected0, coins)
        succ = [e for e in range(H.num_edges) if coins.outcome(e)]
        assert got == closure(H, infected0, succ)


def test_run_to_quiescence_with_dead_coins_is_initial_set():
    H = complete_uniform(5, 3)
    assert run_to_quiescence(H, [1, 4], _coins(0.0)) == {1, 4}


def test_pipeline_saturated_density_percolates():
    H = bootstrap_lift(complete_uniform(8, 2), load_pattern("k3"))
    d = 6.0
    params = ModelParams(r=3, c=d ** 0.5, alpha=1.0, d=d)   # p = 1 exactly
    for seed in (0, 1, 2):
        res = full_pipeline(H, params, seed)
        assert res.percolated
        assert res.infected_count == H.n
        assert len(res.initial_infected) == H.n


def test_pipeline_vanishing_density_dies():
    H = bootstrap_lift(complete_uniform(8, 2), load_pattern("k3"))
    params = ModelParams(r=3, c=0.0, alpha=1.0, d=6.0)   # p = 0 exactly
    for seed in (0, 1, 2):
        res = full_pipeline(H, params, seed)
        assert not res.percolated
        assert res.infected_count == 0
        assert res.trace[-1].phase == QUIESCENT


def test_pipeline_final_state_matches_coin_closure():
    H = bootstrap_lift(complete_uniform(30, 2), load_pattern("k3"))
    for c, seed in [(0.1, 0), (0.5, 1), (0.9, 2), (1.5, 3)]:
        params = ModelParams(r=3, c=c, alpha=1.0, d=28.0)
        res = full_pipeline(H, params, seed)
        succ = np.flatnonzero(res.coins.success_mask(H.num_edges))
        want = closure(H, res.initial_infected, succ)
        assert res.infected_count == len(want)
        assert res.percolated == (len(want) == H.n)


def test_pipeline_subcritical_lift_rarely_percolates():
    H = bootstrap_lift(complete_uniform(100, 2), load_pattern("k3"))
    params = ModelParams(r=3, c=0.1, alpha=1.0, d=98.0)
    hits = 0
    fractions = []
    for seed in range(30):
        res = full_pipeline(H, params, seed)
        hits += res.percolated
        fractions.append(res.infected_count / H.n)
    assert hits / 30 <= 0.2
    assert sum(fractions) / len(fractions) <= 0.2


def test_pipeline_validates_inputs():
    H = complete_uniform(4, 3)
    with pytest.raises(ValueError):
        full_pipeline(H, ModelParams(r=4, c=0.5, alpha=1.0, d=3.0), 0)
    with pytest.raises(ValueError):
        # c so large the initial density leaves [0, 1]
        full_pipeline(H, ModelParams(r=3, c=10.0, alpha=1.0, d=3.0), 0)
    with pytest.raises(ValueError):
        full_pipeline(H, ModelParams(r=3, c=0.5, alpha=10.0, d=3.0), 0)


def test_trace_rows_are_consistent():
    H = bootstrap_lift(complete_uniform(40, 2), load_pattern("k3"))
    for c in (0.1, 0.9):
        params = ModelParams(r=3, c=c, alpha=1.0, d=38.0)
        res = full_pipeline(H, params, 5)
        rows = res.trace
        assert rows[0].m == 0
        assert rows[0].gamma_pred == pytest.approx(c ** 2 * H.n)
        order = {PHASE1: 0, PHASE2_SUB: 1, PHASE2_SUPER: 1, QUIESCENT: 2}
        ranks = [order[row.phase] for row in rows]
        assert ranks == sorted(ranks)
        infected = [row.infected_count for row in rows]
        assert infected == sorted(infected)
        for row in rows:
            assert row.t == row.m / H.n
        assert rows[-1].phase == QUIESCENT
        assert rows[-1].open_count == 0
        assert rows[-1].infected_count == res.infected_count


def test_trace_csv_round_trip():
    H = bootstrap_lift(complete_uniform(20, 2), load_pattern("k3"))
    params = ModelParams(r=3, c=0.4, alpha=1.0, d=18.0)
    res = full_pipeline(H, params, 9)
    buf = io.StringIO()
    write_trace_csv(res.trace, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == TRACE_HEADER == "m,t,Q,I,gamma_pred,phase"
    assert len(lines) == len(res.trace) + 1
    for line, row in zip(lines[1:], res.trace):
        m, t, q, i, gp, phase = line.split(",")
        assert int(m) == row.m
        assert float(t) == row.t            # 17 digits survive the round trip
        assert int(q) == row.open_count
        assert int(i) == row.infected_count
        assert float(gp) == row.gamma_pred
        assert phase == row.phase


def test_open_set_bookkeeping_during_process_run():
    rng = np.random.default_rng(33)
    H = random_hypergraph(rng, 15, 3, 45)
    edges = edge_lists(H)
    ps = ProcessState(H, [0, 1, 2, 3], _coins(0.5, 7), _choice(7))
    checks = 0
    while ps.state.open_count:
        k = int(ps.choice.integers(ps.state.open_count))
        ps._reveal(ps.state.open_list[k])
        infected = {int(v) for v in np.flatnonzero(ps.state.infected)}
        live = [int(e) for e in np.flatnonzero(ps.state.live)]
        assert set(ps.state.open_edges()) == open_edges_oracle(
            edges, infected, live)
        assert ({v: set(s) for v, s in ps.state.per_vertex_open.items()}
                == open_by_vertex_oracle(edges, infected, live))
        checks += 1
    assert checks > 0


def test_drain_reaches_quiescence():
    H = complete_uniform(6, 3)
    ps = ProcessState(H, [0, 1], _coins(1.0))
    drain(ps)
    assert ps.state.open_count == 0
    assert ps.state.infected_count == 6
