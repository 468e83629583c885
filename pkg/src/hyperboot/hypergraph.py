"""r-uniform hypergraphs with the degree/codegree queries used everywhere else.

Edges are stored as a dense (m, r) int32 array whose rows are sorted
ascending and whose row order is lexicographic, so the representation of a
given hypergraph is unique.  Incidence (vertex -> edge ids) is kept in CSR
form.  The pair-codegree index is built lazily because it is only the
regularity checker and the link queries that need it.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Optional

import numpy as np


class Hypergraph:
    """Immutable r-uniform hypergraph on vertex set {0..n-1}."""

    __slots__ = ("n", "r", "_edges", "_indptr", "_incident", "_pair_index",
                 "_max_codegree_cache", "_link_map", "_hash")

    def __init__(self, n: int, r: int, edges: np.ndarray, indptr: np.ndarray,
                 incident: np.ndarray):
        self.n = int(n)
        self.r = int(r)
        self._edges = edges
        self._edges.setflags(write=False)
        self._indptr = indptr
        self._incident = incident
        self._pair_index: Optional[dict] = None
        self._max_codegree_cache: dict = {}
        self._link_map: Optional[dict] = None
        self._hash: Optional[int] = None

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_rows(n: int, r: int, rows: np.ndarray, *, canonical: bool = False
                  ) -> "Hypergraph":
        """Build from an (m, r) array of vertex ids.

        With canonical=True the caller asserts rows are already sorted within
        rows, lexicographically ordered, and duplicate-free; only cheap range
        checks run.  Builders that generate edges in canonical order use this
        to skip an O(m log m) sort on multi-million-edge instances.
        """
        if r < 2:
            raise ValueError(f"uniformity r={r} must be at least 2")
        if n < 0:
            raise ValueError(f"vertex count n={n} must be nonnegative")
        rows = np.ascontiguousarray(rows, dtype=np.int32)
        if rows.ndim != 2 or (rows.shape[0] and rows.shape[1] != r):
            raise ValueError(f"edge array must have shape (m, {r})")
        if rows.shape[0] == 0:
            rows = rows.reshape(0, r)
        if rows.size:
            if rows.min() < 0 or rows.max() >= n:
                bad = int(np.flatnonzero((rows < 0).any(axis=1)
                                         | (rows >= n).any(axis=1))[0])
                raise ValueError(
                    f"edge {rows[bad].tolist()} has a vertex outside 0..{n - 1}")
        if not canonical and rows.size:
            rows = np.sort(rows, axis=1)
            if not (np.diff(rows, axis=1) > 0).all():
                bad = int(np.flatnonzero((np.diff(rows, axis=1) <= 0).any(axis=1))[0])
                raise ValueError(f"edge {rows[bad].tolist()} repeats a vertex")
            order = np.lexsort(rows.T[::-1])
            rows = rows[order]
            if rows.shape[0] > 1:
                keep = np.ones(rows.shape[0], dtype=bool)
                keep[1:] = (np.diff(rows.view(np.int32).reshape(rows.shape), axis=0)
                            != 0).any(axis=1)
                rows = rows[keep]
        indptr, incident = _csr_incidence(n, rows)
        return Hypergraph(n, r, rows, indptr, incident)

    # -- basic queries -----------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self._edges.shape[0]

    @property
    def edges_array(self) -> np.ndarray:
        """(m, r) int32 view; rows sorted, lexicographic order."""
        return self._edges

    def edge(self, i: int) -> tuple:
        return tuple(int(x) for x in self._edges[i])

    def edges(self) -> Iterable[tuple]:
        for row in self._edges:
            yield tuple(int(x) for x in row)

    def incident_edges(self, v: int) -> np.ndarray:
        """Edge ids containing v, ascending."""
        self._check_vertex(v)
        return self._incident[self._indptr[v]:self._indptr[v + 1]]

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return int(self._indptr[v + 1] - self._indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def min_degree(self) -> int:
        if self.n == 0:
            raise ValueError("min_degree undefined on empty vertex set")
        return int(self.degrees().min())

    def max_degree(self) -> int:
        if self.n == 0:
            raise ValueError("max_degree undefined on empty vertex set")
        return int(self.degrees().max())

    def codegree(self, S: Iterable[int]) -> int:
        """Number of edges containing every vertex of S."""
        s = sorted(set(int(v) for v in S))
        for v in s:
            self._check_vertex(v)
        if len(s) > self.r:
            raise ValueError(f"codegree set size {len(s)} exceeds uniformity {self.r}")
        if not s:
            return self.num_edges
        if len(s) == 1:
            return self.degree(s[0])
        if len(s) == 2 and self._pair_index is not None:
            return self._pair_index.get((s[0], s[1]), 0)
        ids = self.incident_edges(s[0])
        for v in s[1:]:
            ids = np.intersect1d(ids, self.incident_edges(v), assume_unique=True)
            if ids.size == 0:
                return 0
        return int(ids.size)

    def edges_containing(self, S: Iterable[int]) -> np.ndarray:
        """Edge ids of all edges containing every vertex of S, ascending."""
        s = sorted(set(int(v) for v in S))
        if not s:
            return np.arange(self.num_edges, dtype=np.int32)
        ids = self.incident_edges(s[0])
        for v in s[1:]:
            ids = np.intersect1d(ids, self.incident_edges(v), assume_unique=True)
            if ids.size == 0:
                break
        return ids

    def max_codegree(self, l: int) -> int:
        """Max codegree over l-subsets; subsets inside no edge contribute 0."""
        return self.max_codegree_witness(l)[0]

    def max_codegree_witness(self, l: int):
        """(max codegree over l-subsets of edges, witness subset)."""
        if not 1 <= l <= self.r:
            raise ValueError(f"subset size l={l} must be in 1..{self.r}")
        if l in self._max_codegree_cache:
            return self._max_codegree_cache[l]
        if self.num_edges == 0:
            result = (0, None)
        elif l == 1:
            degs = self.degrees()
            v = int(degs.argmax())
            result = (int(degs[v]), (v,))
        elif l == 2:
            idx = self.pair_codegree_index()
            if not idx:
                result = (0, None)
            else:
                pair = max(idx, key=idx.get)
                result = (idx[pair], pair)
        else:
            counts: dict = {}
            for row in self._edges:
                t = tuple(int(x) for x in row)
                for sub in combinations(t, l):
                    counts[sub] = counts.get(sub, 0) + 1
            sub = max(counts, key=counts.get)
            result = (counts[sub], sub)
        self._max_codegree_cache[l] = result
        return result

    def pair_codegree_index(self) -> dict:
        """Lazy {(u, v): codegree} over pairs that appear inside some edge."""
        if self._pair_index is None:
            idx: dict = {}
            for row in self._edges:
                t = tuple(int(x) for x in row)
                for pair in combinations(t, 2):
                    idx[pair] = idx.get(pair, 0) + 1
            self._pair_index = idx
        return self._pair_index

    # -- link queries ------------------------------------------------------

    def link(self, v: int) -> set:
        """The link of v: the set of (r-1)-sets e \\ {v} over edges e containing v."""
        self._check_vertex(v)
        out = set()
        for i in self.incident_edges(v):
            row = self._edges[i]
            out.add(tuple(int(x) for x in row if x != v))
        return out

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} outside 0..{self.n - 1}")

    def __eq__(self, other) -> bool:
        return (isinstance(other, Hypergraph) and self.n == other.n
                and self.r == other.r
                and self._edges.shape == other._edges.shape
                and bool((self._edges == other._edges).all()))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, self.r, self._edges.tobytes()))
        return self._hash

    def __repr__(self) -> str:
        return f"Hypergraph(n={self.n}, r={self.r}, m={self.num_edges})"


def _csr_incidence(n: int, rows: np.ndarray):
    flat = rows.ravel()
    counts = np.bincount(flat, minlength=n) if flat.size else np.zeros(n, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    # stable argsort of the flattened vertex column keeps edge ids ascending
    # within each vertex bucket
    order = np.argsort(flat, kind="stable")
    incident = (order // rows.shape[1]).astype(np.int32) if flat.size else \
        np.zeros(0, dtype=np.int32)
    return indptr, incident


def build_hypergraph(n: int, r: int, raw_edges) -> Hypergraph:
    """Validate, canonicalize and index an edge list.

    Accepts any iterable of r-element vertex collections (or an (m, r)
    array).  Rows are sorted, duplicate edges dropped, vertices checked
    against 0..n-1.  Error messages name the offending edge.
    """
    if isinstance(raw_edges, np.ndarray):
        return Hypergraph.from_rows(n, r, raw_edges)
    rows = []
    for e in raw_edges:
        t = tuple(int(x) for x in e)
        if len(t) != r:
            raise ValueError(f"edge {list(t)} has {len(t)} vertices, expected {r}")
        rows.append(t)
    arr = np.array(rows, dtype=np.int32) if rows else np.zeros((0, r), dtype=np.int32)
    return Hypergraph.from_rows(n, r, arr)


def neighbourhood_intersection_size(H: Hypergraph, u: int, v: int) -> int:
    """|N(u) ∩ N(v)| where N(x) is the link of x (a set of (r-1)-sets)."""
    if u == v:
        raise ValueError("neighbourhood intersection needs two distinct vertices")
    lu = H.link(u)
    lv = H.link(v)
    if len(lv) < len(lu):
        lu, lv = lv, lu
    return sum(1 for t in lu if t in lv)


def max_neighbourhood_intersection(H: Hypergraph):
    """(max over vertex pairs of |N(u) ∩ N(v)|, witness pair).

    Computed through the shared-link multimap: an (r-1)-set T contributes to
    the pair (u, v) exactly when both T ∪ {u} and T ∪ {v} are edges, so only
    (r-1)-sets of codegree >= 2 matter.
    """
    if H.num_edges == 0 or H.n < 2:
        return 0, None
    links: dict = {}
    for row in H.edges_array:
        t = tuple(int(x) for x in row)
        for k in range(H.r):
            key = t[:k] + t[k + 1:]
            links.setdefault(key, []).append(t[k])
    pair_counts: dict = {}
    best = 0
    best_pair = None
    for ext in links.values():
        if len(ext) < 2:
            continue
        ext.sort()
        for a, b in combinations(ext, 2):
            key = (a, b)
            c = pair_counts.get(key, 0) + 1
            pair_counts[key] = c
            if c > best:
                best = c
                best_pair = key
    return best, best_pair


# -- regularity report -----------------------------------------------------

# non-strict bounds are checked with this relative dead-band so that an
# exactly-on-the-boundary instance (bound an irrational like rho*sqrt(d)
# that only misses in the last ulp) is not rejected by rounding
BOUND_REL_TOL = 1e-12


def _le(measured: float, bound: float) -> bool:
    return measured <= bound + BOUND_REL_TOL * max(abs(measured), abs(bound))


@dataclass
class ConditionResult:
    name: str
    measured: float
    bound: float
    ok: bool
    witness: Optional[tuple] = None


@dataclass
class WellBehavedReport:
    passes: bool
    d: float
    rho: float
    nu: float
    conditions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passes": self.passes,
            "d": self.d,
            "rho": self.rho,
            "nu": self.nu,
            "conditions": [
                {"name": c.name, "measured": c.measured, "bound": c.bound,
                 "ok": c.ok,
                 "witness": list(c.witness) if c.witness is not None else None}
                for c in self.conditions
            ],
        }


def check_well_behaved(H: Hypergraph, d: float, rho: float, nu: float
                       ) -> WellBehavedReport:
    """Audit the five degree-regularity conditions at scale (d, rho, nu).

    (a) max degree <= d
    (b) min degree >= d(1 - rho)
    (c) max codegree of l-sets <= rho * d^(1 - (l-1)/(r-1)) for 2 <= l <= r-1
    (d) every pair of vertices shares at most rho*d link elements
    (e) at most nu vertices

    Bounds are non-strict; measured values and witnesses are reported for
    every condition so a failure names its offender.
    """
    if d <= 0:
        raise ValueError(f"degree scale d={d} must be positive")
    if rho < 0:
        raise ValueError(f"codegree slack rho={rho} must be nonnegative")
    if nu <= 0:
        raise ValueError(f"size cap nu={nu} must be positive")
    if H.n == 0:
        raise ValueError("regularity check needs a nonempty vertex set")

    conds = []
    degs = H.degrees()
    vmax = int(degs.argmax())
    vmin = int(degs.argmin())
    conds.append(ConditionResult(
        "a:max_degree", float(degs[vmax]), float(d),
        _le(float(degs[vmax]), d), (vmax,)))
    conds.append(ConditionResult(
        "b:min_degree", float(degs[vmin]), float(d * (1 - rho)),
        _le(d * (1 - rho), float(degs[vmin])), (vmin,)))
    for l in range(2, H.r):
        value, witness = H.max_codegree_witness(l)
        bound = rho * d ** (1 - (l - 1) / (H.r - 1))
        conds.append(ConditionResult(
            f"c:codegree_l{l}", float(value), float(bound),
            _le(float(value), bound), witness))
    shared, pair = max_neighbourhood_intersection(H)
    conds.append(ConditionResult(
        "d:link_intersection", float(shared), float(rho * d),
        _le(float(shared), rho * d), pair))
    conds.append(ConditionResult(
        "e:vertex_count", float(H.n), float(nu), _le(float(H.n), nu), None))
    return WellBehavedReport(all(c.ok for c in conds), float(d), float(rho),
                             float(nu), conds)


# -- serialization ---------------------------------------------------------

def to_json(H: Hypergraph) -> str:
    """Canonical JSON: keys n, r, edges; edges in canonical order; newline end."""
    buf = io.StringIO()
    buf.write(f'{{"n": {H.n}, "r": {H.r}, "edges": [')
    first = True
    for row in H.edges_array:
        if not first:
            buf.write(", ")
        buf.write("[" + ", ".join(str(int(x)) for x in row) + "]")
        first = False
    buf.write("]}\n")
    return buf.getvalue()


def from_json(text: str) -> Hypergraph:
    obj = json.loads(text)
    for key in ("n", "r", "edges"):
        if key not in obj:
            raise ValueError(f"hypergraph JSON missing key {key!r}")
    return build_hypergraph(int(obj["n"]), int(obj["r"]), obj["edges"])


def to_text(H: Hypergraph) -> str:
    """Plain text: header 'r n m', then one edge per line."""
    lines = [f"{H.r} {H.n} {H.num_edges}"]
    for row in H.edges_array:
        lines.append(" ".join(str(int(x)) for x in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Hypergraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty hypergraph text")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"header {lines[0]!r} is not 'r n m'")
    r, n, m = (int(x) for x in head)
    if len(lines) - 1 != m:
        raise ValueError(f"header promises {m} edges, found {len(lines) - 1}")
    edges = [[int(x) for x in ln.split()] for ln in lines[1:]]
    return build_hypergraph(n, r, edges)


def loads(text: str) -> Hypergraph:
    """Parse either serialization, autodetected by the first non-space byte."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return from_json(text)
    return from_text(text)
