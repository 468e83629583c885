"""Configuration censuses: rooted copy counts inside a partially infected host.

A configuration is a pattern hypergraph with disjoint root and marked vertex
sets (everything else neutral).  A copy of it in a host H, rooted at S, is a
subhypergraph F' for which some isomorphism maps the pattern onto F', the
roots exactly onto S, and every marked vertex into the infected set; each
qualifying subhypergraph is counted once, no matter how many witness
isomorphisms it has.  Neutral vertices are unconstrained: their images may
or may not be infected.

Besides the generic counter there are direct counters for the three pattern
families the trajectory theory tracks: single saturated edges, pendant stars
(disjoint pendants touching the central edge once), and general stars
(pendants may overlap anywhere except at the attachment points).  The
enumerate_secondary generator lists the small overlap patterns whose counts
must stay subdominant for the trajectory to concentrate.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Iterable, Optional

import numpy as np

from .hypergraph import Hypergraph, build_hypergraph

SECONDARY_MIN_R = 3
SECONDARY_MAX_R = 6


@dataclass(frozen=True)
class Configuration:
    """Pattern with roles: roots are pinned, marked must land on infected."""
    pattern: Hypergraph
    roots: frozenset
    marked: frozenset

    def __post_init__(self):
        F = self.pattern
        covered = set()
        for e in F.edges():
            covered.update(e)
        if covered != set(range(F.n)):
            raise ValueError("every pattern vertex must lie in some edge")
        for v in self.roots | self.marked:
            if not 0 <= v < F.n:
                raise ValueError(f"role vertex {v} outside pattern")
        if self.roots & self.marked:
            raise ValueError("roots and marked must be disjoint")

    @property
    def neutral(self) -> frozenset:
        return frozenset(range(self.pattern.n)) - self.roots - self.marked

    def to_dict(self) -> dict:
        return {
            "pattern": {"n": self.pattern.n, "r": self.pattern.r,
                        "edges": [list(e) for e in self.pattern.edges()]},
            "roots": sorted(self.roots),
            "marked": sorted(self.marked),
        }

    @staticmethod
    def from_dict(obj: dict) -> "Configuration":
        pat = obj["pattern"]
        return Configuration(
            build_hypergraph(int(pat["n"]), int(pat["r"]), pat["edges"]),
            frozenset(int(v) for v in obj["roots"]),
            frozenset(int(v) for v in obj["marked"]))


def _infected_mask(H: Hypergraph, infected) -> np.ndarray:
    if isinstance(infected, (set, frozenset)):
        infected = sorted(infected)
    arr = np.asarray(infected)
    if arr.dtype == bool:
        if arr.shape != (H.n,):
            raise ValueError("infected mask has wrong length")
        return arr
    mask = np.zeros(H.n, dtype=bool)
    ids = arr.astype(np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= H.n):
        raise ValueError("infected vertex outside 0..n-1")
    mask[ids] = True
    return mask


def _active_mask(H: Hypergraph, active) -> Optional[np.ndarray]:
    if active is None:
        return None
    if isinstance(active, (set, frozenset)):
        active = sorted(active)
    arr = np.asarray(active)
    if arr.dtype == bool:
        if arr.shape != (H.num_edges,):
            raise ValueError("active mask has wrong length")
        return arr
    mask = np.zeros(H.num_edges, dtype=bool)
    mask[arr.astype(np.int64)] = True
    return mask


def _config_edge_order(F: Hypergraph, roots: frozenset) -> list:
    """Process root edges first, then greedily by overlap with covered."""
    remaining = list(range(F.num_edges))
    order = []
    covered = set(roots)
    while remaining:
        best = max(remaining,
                   key=lambda i: (len(covered.intersection(F.edge(i))), -i))
        order.append(best)
        covered.update(F.edge(best))
        remaining.remove(best)
    return order


def rooted_copies(H: Hypergraph, infected, config: Configuration,
                  root_images: Iterable[int], active=None) -> set:
    """The set of copies, each a sorted tuple of host edge ids.

    Backtracks over the pattern's edges in connectivity order, starting from
    every bijection of roots onto the requested images; copies found through
    different witnesses collapse because the result is a set.
    """
    F = config.pattern
    if F.r != H.r:
        raise ValueError(f"pattern uniformity {F.r} != host uniformity {H.r}")
    inf = _infected_mask(H, infected)
    act = _active_mask(H, active)
    S = sorted(set(int(v) for v in root_images))
    for v in S:
        if not 0 <= v < H.n:
            raise ValueError(f"root image {v} outside host")
    if len(S) != len(config.roots):
        raise ValueError(
            f"{len(S)} root images for {len(config.roots)} roots")
    root_list = sorted(config.roots)
    marked = config.marked
    order = _config_edge_order(F, config.roots)
    f_edges = [F.edge(i) for i in order]
    s_set = set(S)
    found: set = set()

    def ok_image(x: int, y: int) -> bool:
        if y in s_set:
            return False          # injectivity: non-roots avoid root images
        if x in marked and not inf[y]:
            return False
        return True

    def assign(pos: int, phi: dict, used: set, chosen: list):
        if pos == len(f_edges):
            found.add(tuple(sorted(chosen)))
            return
        fe = f_edges[pos]
        anchored_img = [phi[x] for x in fe if x in phi]
        free = [x for x in fe if x not in phi]
        if anchored_img:
            cand = H.edges_containing(anchored_img)
        else:
            cand = range(H.num_edges)
        anchor_set = set(anchored_img)
        for gid in cand:
            gid = int(gid)
            if act is not None and not act[gid]:
                continue
            if gid in chosen:
                continue
            g = H.edge(gid)
            rem = [y for y in g if y not in anchor_set]
            if len(rem) != len(free) or any(y in used for y in rem):
                continue
            for perm in permutations(rem):
                if not all(ok_image(x, y) for x, y in zip(free, perm)):
                    continue
                for x, y in zip(free, perm):
                    phi[x] = y
                    used.add(y)
                chosen.append(gid)
                assign(pos + 1, phi, used, chosen)
                chosen.pop()
                for x in free:
                    used.discard(phi.pop(x))

    for images in permutations(S):
        phi = dict(zip(root_list, images))
        assign(0, phi, set(images), [])
    return found


def count_rooted_copies(H: Hypergraph, infected, config: Configuration,
                        root_images: Iterable[int], active=None) -> int:
    return len(rooted_copies(H, infected, config, root_images, active))


# -- specialized counters ----------------------------------------------------

def count_saturated_edges(H: Hypergraph, infected, S: Iterable[int],
                          active=None) -> int:
    """Edges containing S whose remaining vertices are all infected."""
    inf = _infected_mask(H, infected)
    act = _active_mask(H, active)
    s = set(int(v) for v in S)
    for v in s:
        if not 0 <= v < H.n:
            raise ValueError(f"vertex {v} outside host")
    if len(s) > H.r:
        raise ValueError(f"root set size {len(s)} exceeds uniformity {H.r}")
    total = 0
    for eid in H.edges_containing(sorted(s)):
        eid = int(eid)
        if act is not None and not act[eid]:
            continue
        if all(inf[x] for x in H.edge(eid) if x not in s):
            total += 1
    return total


def _check_star_indices(H: Hypergraph, v: int, i: int, j: int) -> None:
    if not 0 <= v < H.n:
        raise ValueError(f"vertex {v} outside host")
    if not 0 <= i <= H.r - 1:
        raise ValueError(f"marked count i={i} outside 0..{H.r - 1}")
    if not 0 <= j <= H.r - 1 - i:
        raise ValueError(f"pendant count j={j} outside 0..{H.r - 1 - i}")


def count_pendant_stars(H: Hypergraph, infected, v: int, i: int, j: int,
                        active=None) -> int:
    """Stars at v: a central edge with i marked vertices and j pairwise
    disjoint pendant edges, each meeting the central edge in one neutral
    attachment vertex and otherwise fully infected.

    With j=0 this is the number of (active) edges at v carrying at least i
    infected vertices besides v; the i condition is a lower bound because a
    copy may contain infected vertices beyond the images of marked ones.
    """
    inf = _infected_mask(H, infected)
    act = _active_mask(H, active)
    _check_star_indices(H, v, i, j)
    total = 0
    for eid in H.incident_edges(v):
        eid = int(eid)
        if act is not None and not act[eid]:
            continue
        e = H.edge(eid)
        others = [x for x in e if x != v]
        if j == 0:
            if sum(1 for x in others if inf[x]) >= i:
                total += 1
            continue
        e_set = set(e)
        pend = {}
        for w in others:
            cands = []
            for fid in H.incident_edges(w):
                fid = int(fid)
                if fid == eid or (act is not None and not act[fid]):
                    continue
                f = H.edge(fid)
                if sum(1 for y in f if y in e_set) != 1:
                    continue
                if all(inf[y] for y in f if y != w):
                    cands.append((fid, f))
            if cands:
                pend[w] = cands
        for W in combinations([w for w in others if w in pend], j):
            w_set = set(W)
            if sum(1 for x in others if inf[x] and x not in w_set) < i:
                continue
            total += _count_disjoint_selections(W, pend, 0, set())
    return total


def _count_disjoint_selections(W, pend, k, used_vertices) -> int:
    if k == len(W):
        return 1
    total = 0
    for fid, f in pend[W[k]]:
        if any(y in used_vertices for y in f):
            continue
        total += _count_disjoint_selections(W, pend, k + 1,
                                            used_vertices | set(f))
    return total


def count_general_stars(H: Hypergraph, infected, v: int, i: int, j: int,
                        active=None) -> int:
    """Stars at v whose pendants may overlap each other and the central edge.

    Each pendant is fully infected except at its attachment vertex, which
    lies on the central edge and in no other pendant; overlap vertices on the
    central edge count toward its marked budget of exactly i, so a copy needs
    the overlap to fit inside i and at least i infected non-attachment
    vertices on the central edge.  Counted at the subhypergraph level: an
    edge set reachable through several attachment choices counts once.
    """
    inf = _infected_mask(H, infected)
    act = _active_mask(H, active)
    _check_star_indices(H, v, i, j)
    total = 0
    for eid in H.incident_edges(v):
        eid = int(eid)
        if act is not None and not act[eid]:
            continue
        e = H.edge(eid)
        others = [x for x in e if x != v]
        if j == 0:
            if sum(1 for x in others if inf[x]) >= i:
                total += 1
            continue
        e_set = set(e)
        pend = {}
        for w in others:
            cands = []
            for fid in H.incident_edges(w):
                fid = int(fid)
                if fid == eid or (act is not None and not act[fid]):
                    continue
                f = H.edge(fid)
                if v in f:
                    continue
                if all(inf[y] for y in f if y != w):
                    cands.append((fid, f))
            if cands:
                pend[w] = cands
        seen: set = set()
        for W in combinations([w for w in others if w in pend], j):
            w_set = set(W)
            free_infected = sum(1 for x in others if inf[x] and x not in w_set)
            if free_infected < i:
                continue
            _general_star_rec(W, pend, 0, w_set, [], e_set, i, seen)
        total += len(seen)
    return total


def _general_star_rec(W, pend, k, w_set, picked, e_set, i, seen) -> None:
    if k == len(W):
        overlap = set()
        for fid, f in picked:
            for y in f:
                if y in e_set and y not in w_set:
                    overlap.add(y)
        if len(overlap) <= i:
            seen.add(frozenset(fid for fid, _ in picked))
        return
    w = W[k]
    taken = {fid for fid, _ in picked}
    for fid, f in pend[w]:
        if fid in taken:
            continue
        if w not in f:
            continue
        if any(y in w_set and y != w for y in f):
            continue
        picked.append((fid, f))
        _general_star_rec(W, pend, k + 1, w_set, picked, e_set, i, seen)
        picked.pop()


# -- named configurations ----------------------------------------------------

def saturated_edge_config(r: int, i: int) -> Configuration:
    """Single edge with i roots; the other r-i vertices marked."""
    if not 0 <= i <= r:
        raise ValueError(f"root count i={i} outside 0..{r}")
    F = build_hypergraph(r, r, [list(range(r))])
    return Configuration(F, frozenset(range(i)), frozenset(range(i, r)))


def pendant_star_config(r: int, i: int, j: int) -> Configuration:
    """Central edge (one root, i marked) with j disjoint pendant edges.

    Pendant k attaches at the k-th neutral vertex of the central edge; its
    other r-1 vertices are fresh and marked.
    """
    if not 0 <= i <= r - 1:
        raise ValueError(f"marked count i={i} outside 0..{r - 1}")
    if not 0 <= j <= r - 1 - i:
        raise ValueError(f"pendant count j={j} outside 0..{r - 1 - i}")
    edges = [list(range(r))]          # 0 root, 1..i marked, i+1..r-1 neutral
    marked = set(range(1, i + 1))
    nxt = r
    for k in range(j):
        attach = i + 1 + k
        body = list(range(nxt, nxt + r - 1))
        marked.update(body)
        nxt += r - 1
        edges.append([attach] + body)
    F = build_hypergraph(nxt, r, edges)
    return Configuration(F, frozenset([0]), frozenset(marked))


def general_star_family(r: int, i: int, j: int) -> list:
    """All isomorphism classes of general stars with parameters (r, i, j).

    Each member has a central edge (one root, exactly i marked) and j
    pendant edges with exactly r-1 marked vertices whose unique neutral
    vertex sits on the central edge; pendants may share marked vertices
    with the central edge and with each other.  The list is what the fast
    general-star counter implicitly sums over (as a union of copy sets).
    """
    if not 0 <= i <= r - 1:
        raise ValueError(f"marked count i={i} outside 0..{r - 1}")
    if not 0 <= j <= r - 1 - i:
        raise ValueError(f"pendant count j={j} outside 0..{r - 1 - i}")
    central = list(range(r))          # 0 root, 1..i marked, i+1..r-1 neutral
    central_marked = list(range(1, i + 1))
    attaches = [i + 1 + k for k in range(j)]
    shapes: dict = {}

    def rec(k: int, edges: list, marked: set, nxt: int):
        if k == j:
            F = build_hypergraph(nxt, r, edges)
            cfg = Configuration(F, frozenset([0]), frozenset(marked))
            shapes.setdefault(canonical_config_key(cfg), cfg)
            return
        pool = sorted(marked)
        for take in range(0, min(r - 1, len(pool)) + 1):
            for old in combinations(pool, take):
                fresh = list(range(nxt, nxt + (r - 1 - take)))
                body = list(old) + fresh
                rec(k + 1, edges + [[attaches[k]] + body],
                    marked | set(fresh), nxt + len(fresh))

    rec(0, [central], set(central_marked), r)
    return sorted(shapes.values(),
                  key=lambda c: (c.pattern.n, canonical_config_key(c)))


# -- isomorphism-class keys and the secondary family -------------------------

def canonical_config_key(config: Configuration):
    """Complete isomorphism invariant for small configurations.

    A configuration is determined up to isomorphism by the multiset of
    (edge-membership mask, role) vertex signatures, minimized over
    relabelings of the edges; vertices with equal signature are always
    interchangeable.  Exponential in the edge count, intended for patterns
    with at most about six edges.
    """
    F = config.pattern
    k = F.num_edges
    masks = [0] * F.n
    for ei in range(k):
        for x in F.edge(ei):
            masks[x] |= 1 << ei
    role = ["n"] * F.n
    for v in config.roots:
        role[v] = "r"
    for v in config.marked:
        role[v] = "m"
    best = None
    for perm in permutations(range(k)):
        counts: dict = {}
        for v in range(F.n):
            mm = 0
            for ei in range(k):
                if masks[v] >> ei & 1:
                    mm |= 1 << perm[ei]
            key = (mm, role[v])
            counts[key] = counts.get(key, 0) + 1
        item = tuple(sorted((mm, ro, c) for (mm, ro), c in counts.items()))
        if best is None or item < best:
            best = item
    return (k, F.r, best)


def _role_splits(size: int):
    """All (roots, marked, neutral) counts summing to a region size."""
    for nr in range(size + 1):
        for nm in range(size + 1 - nr):
            yield nr, nm, size - nr - nm


def _config_from_regions(r: int, regions: list) -> Configuration:
    """regions: list of (edge-index-set, (nr, nm, nn)); builds vertices."""
    k = max(max(s) for s, _ in regions) + 1
    edges: list = [[] for _ in range(k)]
    roots = []
    marked = []
    nxt = 0
    for edge_set, (nr, nm, nn) in regions:
        for kind, cnt in (("r", nr), ("m", nm), ("n", nn)):
            for _ in range(cnt):
                v = nxt
                nxt += 1
                for ei in edge_set:
                    edges[ei].append(v)
                if kind == "r":
                    roots.append(v)
                elif kind == "m":
                    marked.append(v)
    F = build_hypergraph(nxt, r, edges)
    return Configuration(F, frozenset(roots), frozenset(marked))


def enumerate_secondary(r: int) -> list:
    """All isomorphism classes of secondary configurations with <= 3 edges.

    A configuration is secondary when some central edge e satisfies: e holds
    a root and a neutral vertex; every other edge meets e in a neutral
    vertex; no vertex lies in three edges; and either there are two or more
    roots, or the shape is one of the two sanctioned overlap shapes (two
    edges sharing more than one vertex, or three edges where the two
    non-central ones each touch e once and also touch each other).
    """
    if not SECONDARY_MIN_R <= r <= SECONDARY_MAX_R:
        raise ValueError(
            f"secondary enumeration supports uniformity {SECONDARY_MIN_R}.."
            f"{SECONDARY_MAX_R}, got {r}")
    out: dict = {}

    def add(regions: list):
        cfg = _config_from_regions(r, regions)
        out.setdefault(canonical_config_key(cfg), cfg)

    # one edge: two or more roots, at least one neutral
    for nr in range(2, r):
        for nn in range(1, r - nr + 1):
            add([({0}, (nr, r - nr - nn, nn))])

    # two edges sharing s vertices; edge 0 is the nominated central one
    for s in range(1, r):
        for sp_i in _role_splits(s):
            if sp_i[2] < 1:
                continue           # shared part must offer a neutral
            for sp_a in _role_splits(r - s):
                if sp_i[0] + sp_a[0] < 1:
                    continue       # central needs a root
                if sp_i[2] + sp_a[2] < 1:
                    continue       # central needs a neutral (always true here)
                for sp_b in _role_splits(r - s):
                    total_roots = sp_i[0] + sp_a[0] + sp_b[0]
                    if total_roots < 2 and s < 2:
                        continue
                    add([({0, 1}, sp_i), ({0}, sp_a), ({1}, sp_b)])

    # three edges, no vertex in all three; edge 0 central
    for a in range(1, r):
        for b in range(1, r):
            for cc in range(0, r + 1):
                x0, x1, x2 = r - a - b, r - a - cc, r - b - cc
                if x0 < 0 or x1 < 0 or x2 < 0:
                    continue
                for sp01 in _role_splits(a):
                    if sp01[2] < 1:
                        continue
                    for sp02 in _role_splits(b):
                        if sp02[2] < 1:
                            continue
                        for sp12 in _role_splits(cc):
                            for sp0 in _role_splits(x0):
                                if sp0[0] + sp01[0] + sp02[0] < 1:
                                    continue
                                if sp0[2] + sp01[2] + sp02[2] < 1:
                                    continue
                                for sp1 in _role_splits(x1):
                                    for sp2 in _role_splits(x2):
                                        roots = (sp0[0] + sp1[0] + sp2[0]
                                                 + sp01[0] + sp02[0] + sp12[0])
                                        if roots < 2 and not (
                                                a == 1 and b == 1 and cc >= 1):
                                            continue
                                        add([({0}, sp0), ({1}, sp1),
                                             ({2}, sp2), ({0, 1}, sp01),
                                             ({0, 2}, sp02), ({1, 2}, sp12)])
    return sorted(out.values(),
                  key=lambda c: (c.pattern.num_edges, canonical_config_key(c)))
