"""Deterministic closure and the mutable infection state for process runs.

closure() computes the least fixed point of the infection rule: a healthy
vertex becomes infected as soon as some (active) edge has it as its unique
healthy vertex.  InfectionState supports the incremental operations the
revelation processes need: O(1) uniform sampling from the open-edge set
(swap-remove array plus position index), per-vertex open-edge lookup, and
infect/remove updates proportional to the degree of the touched vertex.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

import numpy as np

from .hypergraph import Hypergraph


def _normalize_active(H: Hypergraph, active) -> Optional[np.ndarray]:
    """Coerce an edge filter (mask, id list, or None) to an id array or None."""
    if active is None:
        return None
    if isinstance(active, (set, frozenset)):
        active = sorted(active)
    arr = np.asarray(active)
    if arr.dtype == bool:
        if arr.shape != (H.num_edges,):
            raise ValueError("boolean edge mask has wrong length")
        return np.flatnonzero(arr).astype(np.int64)
    ids = np.unique(arr.astype(np.int64))
    if ids.size and (ids[0] < 0 or ids[-1] >= H.num_edges):
        raise ValueError("edge id outside 0..m-1 in active filter")
    return ids


def closure(H: Hypergraph, infected0: Iterable[int], active=None) -> set:
    """Infected set after exhausting the infection rule over active edges.

    active restricts the rule to a sub-edge-set (mask or id list); edges
    outside it are ignored entirely.  Runs on a compacted copy of the active
    edges so sparse filters cost what they select, not what exists.
    """
    ids = _normalize_active(H, active)
    E = H.edges_array if ids is None else H.edges_array[ids]
    n = H.n
    infected = np.zeros(n, dtype=bool)
    init = list(infected0)
    for v in init:
        if not 0 <= v < n:
            raise ValueError(f"vertex {v} outside 0..{n - 1}")
    infected[init] = True
    if E.shape[0] == 0:
        return set(int(v) for v in np.flatnonzero(infected))
    counts = (H.r - infected[E].sum(axis=1)).astype(np.int64).tolist()
    rows = E.tolist()
    inc: list = [[] for _ in range(n)]
    for i, row in enumerate(rows):
        for x in row:
            inc[x].append(i)
    inf = infected.tolist()
    queue = deque(i for i, c in enumerate(counts) if c == 1)
    while queue:
        i = queue.popleft()
        if counts[i] != 1:
            continue
        u = -1
        for x in rows[i]:
            if not inf[x]:
                u = x
                break
        if u < 0:
            continue
        inf[u] = True
        for j in inc[u]:
            counts[j] -= 1
            if counts[j] == 1:
                queue.append(j)
    return set(i for i, f in enumerate(inf) if f)


def percolates(H: Hypergraph, infected0: Iterable[int], active=None) -> bool:
    return len(closure(H, infected0, active)) == H.n


def sample_vertex_set(H: Hypergraph, p: float, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli(p) vertex sample, ascending ids; one uniform per vertex."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"density p={p} outside [0, 1]")
    return np.flatnonzero(rng.random(H.n) < p).astype(np.int64)


def sample_edge_set(H: Hypergraph, q: float, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli(q) edge sample as a boolean mask over edge ids."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability q={q} outside [0, 1]")
    return rng.random(H.num_edges) < q


class InfectionState:
    """Incrementally maintained infection/open-edge state over a fixed H.

    An edge is live until explicitly removed; it is open when it is live and
    has exactly one healthy vertex.  The open set supports O(1) uniform
    sampling; per_vertex_open partitions it by the healthy vertex.  An edge
    whose healthy count reaches 0 stays live (closed) unless removed.
    """

    def __init__(self, H: Hypergraph, infected0: Iterable[int], active=None):
        self.H = H
        n, m = H.n, H.num_edges
        ids = _normalize_active(H, active)
        self.live = np.zeros(m, dtype=bool)
        if ids is None:
            self.live[:] = True
        else:
            self.live[ids] = True
        infected = np.zeros(n, dtype=bool)
        init = list(infected0)
        for v in init:
            if not 0 <= v < n:
                raise ValueError(f"vertex {v} outside 0..{n - 1}")
        infected[init] = True
        counts = (H.r - infected[H.edges_array].sum(axis=1)).astype(np.int32)
        counts[~self.live] = -1
        self.infected = infected
        self.healthy_count = counts
        self.infected_count = int(infected.sum())
        self.open_list: list = []
        self.open_pos = np.full(m, -1, dtype=np.int64)
        self.per_vertex_open: dict = {}
        self._rows = H.edges_array
        for e in np.flatnonzero((counts == 1) & self.live):
            self._open_add(int(e), self._healthy_vertex(int(e)))

    # healthy-vertex scan; only valid when the edge has exactly one
    def _healthy_vertex(self, e: int) -> int:
        for x in self._rows[e]:
            if not self.infected[x]:
                return int(x)
        raise AssertionError(f"edge {e} has no healthy vertex")

    def _open_add(self, e: int, u: int) -> None:
        self.open_pos[e] = len(self.open_list)
        self.open_list.append(e)
        self.per_vertex_open.setdefault(u, set()).add(e)

    def _open_discard(self, e: int, u: int) -> None:
        pos = self.open_pos[e]
        if pos < 0:
            return
        last = self.open_list[-1]
        self.open_list[pos] = last
        self.open_pos[last] = pos
        self.open_list.pop()
        self.open_pos[e] = -1
        s = self.per_vertex_open.get(u)
        if s is not None:
            s.discard(e)
            if not s:
                del self.per_vertex_open[u]

    @property
    def open_count(self) -> int:
        return len(self.open_list)

    def open_edges(self) -> list:
        """Current open-edge ids (sampling order, not sorted)."""
        return list(self.open_list)

    def open_at(self, v: int) -> set:
        """Open edges whose unique healthy vertex is v."""
        return set(self.per_vertex_open.get(v, ()))

    def unique_healthy_vertex(self, e: int) -> int:
        if self.open_pos[e] < 0:
            raise ValueError(f"edge {e} is not open")
        return self._healthy_vertex(e)

    def infect(self, v: int) -> None:
        """Infect a healthy vertex and update all live edges containing it."""
        if self.infected[v]:
            raise ValueError(f"vertex {v} is already infected")
        self.infected[v] = True
        self.infected_count += 1
        counts = self.healthy_count
        for e in self.H.incident_edges(v):
            e = int(e)
            if not self.live[e]:
                continue
            c = counts[e]
            counts[e] = c - 1
            if c == 1:
                # v was the unique healthy vertex, the edge closes
                self._open_discard(e, v)
            elif c == 2:
                self._open_add(e, self._healthy_vertex(e))

    def remove_edge(self, e: int) -> None:
        """Delete a live edge (consumed by sampling)."""
        if not self.live[e]:
            raise ValueError(f"edge {e} is not live")
        self.live[e] = False
        if self.open_pos[e] >= 0:
            self._open_discard(e, self._healthy_vertex(e))
        self.healthy_count[e] = -1

    def infected_set(self) -> set:
        return set(int(v) for v in np.flatnonzero(self.infected))
