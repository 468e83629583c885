"""Randomized revelation processes driving the infection dynamics.

Each hyperedge carries a single Bernoulli(q) coin that is revealed at most
once, when the edge is first sampled; the coin's value is a pure function of
(seed, edge id), so no schedule can change it.  Phase 1 reveals one uniformly
random open edge per step, stopping if the open set empties; the state is
then absorbing.  Phase 2 reveals in rounds: subcritically every
open edge at once, supercritically a per-vertex budgeted prefix followed by
saturation sweeps.  Because coins are per-edge, the final infected set of any
schedule that exhausts the open set equals the deterministic closure under
the coin success set; that coupling is the central correctness oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import log
from typing import Iterable, Optional

import numpy as np

from . import rng as rng_mod
from .engine import InfectionState
from .hypergraph import Hypergraph
from .theory import (Criticality, DerivedConstants, ModelParams,
                     derive_constants, open_edge_density)

PHASE1 = "phase1"
PHASE2_SUB = "phase2_sub"
PHASE2_SUPER = "phase2_super"
QUIESCENT = "quiescent"

TRACE_HEADER = "m,t,Q,I,gamma_pred,phase"


class CoinOracle:
    """Lazy memoized per-edge Bernoulli(q) coins on a counter-based stream.

    outcome(e) is deterministic in (key, e) alone; drawn records every coin
    revealed so far.  success_mask forces all coins, which is how the closure
    oracle recovers the exact edge subset the process was coupled to.
    """

    def __init__(self, q: float, master_seed: int, *path: int):
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"probability q={q} outside [0, 1]")
        self.q = q
        self._key = rng_mod.stream_key(master_seed, *path)
        self.drawn: dict = {}

    def outcome(self, e: int) -> bool:
        got = self.drawn.get(e)
        if got is None:
            got = rng_mod.value_at(self._key, e) < self.q
            self.drawn[e] = got
        return got

    def success_mask(self, num_edges: int) -> np.ndarray:
        return np.fromiter((self.outcome(e) for e in range(num_edges)),
                           dtype=bool, count=num_edges)


@dataclass
class TraceRow:
    m: int
    t: float
    open_count: int
    infected_count: int
    gamma_pred: float
    phase: str
    extra: Optional[dict] = None   # configuration-count samples, not in CSV


def write_trace_csv(rows: Iterable[TraceRow], fh) -> None:
    """Trace CSV: header m,t,Q,I,gamma_pred,phase; floats at 17 sig digits."""
    fh.write(TRACE_HEADER + "\n")
    for row in rows:
        fh.write(f"{row.m},{row.t:.17g},{row.open_count},{row.infected_count},"
                 f"{row.gamma_pred:.17g},{row.phase}\n")


class ProcessState:
    """An InfectionState plus the process bookkeeping around it."""

    def __init__(self, H: Hypergraph, infected0, coins: CoinOracle,
                 choice: Optional[np.random.Generator] = None,
                 params: Optional[ModelParams] = None, active=None):
        self.H = H
        self.state = InfectionState(H, infected0, active)
        self.coins = coins
        self.choice = choice
        self.params = params
        self.m = 0          # phase-1 steps taken
        self.rounds = 0     # phase-2 rounds taken
        self.sampled: list = []
        self.trace: list = []

    def _gamma_pred(self, t: float) -> float:
        if self.params is None:
            return float("nan")
        return open_edge_density(t, self.params) * self.H.n

    def record(self, phase: str) -> None:
        t = self.m / self.H.n
        self.trace.append(TraceRow(self.m, t, self.state.open_count,
                                   self.state.infected_count,
                                   self._gamma_pred(t), phase))

    def _reveal(self, e: int) -> bool:
        """Sample one live edge: reveal its coin, remove it, infect on success."""
        success = self.coins.outcome(e)
        u = (self.state.unique_healthy_vertex(e)
             if self.state.open_pos[e] >= 0 else None)
        self.state.remove_edge(e)
        self.sampled.append(e)
        if success and u is not None and not self.state.infected[u]:
            self.state.infect(u)
        return success


def phase1_run(ps: ProcessState, steps: int,
               trace_stride: Optional[int] = None) -> bool:
    """Reveal one uniform open edge per step, for at most `steps` steps.

    Stops early, recording quiescence, the moment the open set empties; an
    empty open set is absorbing, so nothing after it could act.  Trace rows
    are emitted at step 0, every `trace_stride` steps, and at the end.
    Returns True when the run went quiescent before exhausting its budget.
    """
    if ps.choice is None:
        raise ValueError("phase 1 needs a choice stream")
    if trace_stride is not None:
        if ps.m == 0:
            ps.record(PHASE1)
    for _ in range(steps):
        if not ps.state.open_count:
            if trace_stride is not None:
                ps.record(QUIESCENT)
            return True
        k = int(ps.choice.integers(ps.state.open_count))
        e = ps.state.open_list[k]
        ps._reveal(e)
        ps.m += 1
        if trace_stride is not None and ps.m % trace_stride == 0:
            ps.record(PHASE1)
    if trace_stride is not None and ps.m % trace_stride != 0:
        ps.record(PHASE1)
    return False


def subcritical_round(ps: ProcessState) -> int:
    """One simultaneous round: reveal every open edge, then apply infections.

    The open set is snapshotted first, so infections triggered by this
    round's successes do not feed back into it; every snapshotted edge is
    removed, which forces the next open set to be disjoint from this one.
    Returns the number of successful reveals.
    """
    snapshot = sorted(ps.state.open_list)
    hits = []
    for e in snapshot:
        u = ps.state.unique_healthy_vertex(e)
        if ps.coins.outcome(e):
            hits.append(u)
        ps.state.remove_edge(e)
        ps.sampled.append(e)
    for u in hits:
        if not ps.state.infected[u]:
            ps.state.infect(u)
    ps.rounds += 1
    return len(hits)


def supercritical_budget(n_vertices: int, round_index: int) -> int:
    """Per-vertex reveal budget ceil((log N)^((3/2)^m)) for round m >= 1."""
    if round_index < 1:
        raise ValueError("budget applies from round 1 on")
    return int(math.ceil(log(n_vertices) ** (1.5 ** round_index)))


def saturation_threshold(params: ModelParams) -> int:
    """Open-degree level ceil(d^(1/(r-1) + 1/10)) that triggers a full sweep."""
    return int(math.ceil(params.d ** (1.0 / (params.r - 1) + 0.1)))


def supercritical_round(ps: ProcessState) -> None:
    """One budgeted round followed by saturation sweeps.

    Round 0 reveals the whole open set.  Later rounds reveal, per healthy
    vertex, the lowest-id prefix of its open edges up to the doubling budget,
    simultaneously.  Afterwards, any healthy vertex holding at least the
    saturation threshold of open edges gets its entire open set revealed,
    repeatedly, until no vertex qualifies.
    """
    if ps.params is None:
        raise ValueError("supercritical rounds need model params")
    st = ps.state
    if ps.rounds == 0:
        chosen = sorted(st.open_list)
    else:
        budget = supercritical_budget(ps.H.n, ps.rounds)
        chosen = []
        for v in sorted(st.per_vertex_open):
            edges = sorted(st.per_vertex_open[v])
            chosen.extend(edges[:budget])
    hits = []
    for e in chosen:
        u = st.unique_healthy_vertex(e)
        if ps.coins.outcome(e):
            hits.append(u)
        st.remove_edge(e)
        ps.sampled.append(e)
    for u in hits:
        if not st.infected[u]:
            st.infect(u)
    # saturation sweeps
    threshold = saturation_threshold(ps.params)
    while True:
        v = None
        for u in sorted(st.per_vertex_open):
            if len(st.per_vertex_open[u]) >= threshold:
                v = u
                break
        if v is None:
            break
        edges = sorted(st.per_vertex_open[v])
        success = False
        for e in edges:
            if ps.coins.outcome(e):
                success = True
            st.remove_edge(e)
            ps.sampled.append(e)
        if success:
            st.infect(v)
    ps.rounds += 1


def drain(ps: ProcessState) -> None:
    """Reveal open edges (deterministic order) until none remain."""
    st = ps.state
    while st.open_count:
        ps._reveal(st.open_list[-1])


def run_to_quiescence(H: Hypergraph, infected0, coins: CoinOracle,
                      active=None) -> set:
    """Final infected set of a schedule that exhausts the open set.

    Equals closure(H, infected0, coin success set) restricted to the active
    edges; which open edge is revealed first cannot matter because coins are
    per-edge.
    """
    ps = ProcessState(H, infected0, coins, active=active)
    drain(ps)
    return ps.state.infected_set()


@dataclass
class PipelineResult:
    percolated: bool
    trace: list
    infected_count: int
    initial_infected: np.ndarray
    constants: DerivedConstants
    coins: CoinOracle
    sampled_count: int

    @property
    def infected_fraction(self) -> float:
        return self.infected_count / self.constants.params.n_vertices


def full_pipeline(H: Hypergraph, params: ModelParams, seed: int,
                  trace_stride: Optional[int] = None) -> PipelineResult:
    """Draw the initial infection, run both phases, then drain to a verdict.

    Phase lengths come from the derived constants of the bound parameters;
    the regime picks the round type.  The terminal drain makes percolation
    decidable at any scale: it cannot create infections the round phase
    would not eventually have found, by the per-edge-coin coupling.
    """
    if H.r != params.r:
        raise ValueError(f"hypergraph uniformity {H.r} != params.r {params.r}")
    if H.r < 3:
        raise ValueError("pipeline needs uniformity at least 3")
    bound = params.bind(H.n)
    if bound.p > 1.0:
        raise ValueError(f"initial density p={bound.p:.4g} exceeds 1")
    if bound.q > 1.0:
        raise ValueError(f"edge probability q={bound.q:.4g} exceeds 1")
    constants = derive_constants(bound)
    vertex_stream = rng_mod.substream(seed, rng_mod.VERTEX_DRAW)
    choice_stream = rng_mod.substream(seed, rng_mod.PROCESS_CHOICE)
    coins = CoinOracle(bound.q, seed, rng_mod.EDGE_COIN)
    init = np.flatnonzero(vertex_stream.random(H.n) < bound.p).astype(np.int64)
    ps = ProcessState(H, init, coins, choice_stream, bound)
    if trace_stride is None:
        trace_stride = max(1, constants.phases.steps // 50)
    quiet = phase1_run(ps, constants.phases.steps, trace_stride)
    if not quiet:
        round_fn = (subcritical_round
                    if constants.criticality is Criticality.SUBCRITICAL
                    else supercritical_round)
        phase_tag = (PHASE2_SUB
                     if constants.criticality is Criticality.SUBCRITICAL
                     else PHASE2_SUPER)
        for _ in range(constants.phases.rounds):
            round_fn(ps)
            ps.record(phase_tag)
            if not ps.state.open_count:
                break
        drain(ps)
        ps.record(QUIESCENT)
    return PipelineResult(
        percolated=ps.state.infected_count == H.n,
        trace=ps.trace,
        infected_count=ps.state.infected_count,
        initial_infected=init,
        constants=constants,
        coins=coins,
        sampled_count=len(ps.sampled))
