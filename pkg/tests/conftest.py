import numpy as np

from hyperboot.hypergraph import Hypergraph, build_hypergraph


def random_hypergraph(rng: np.random.Generator, n: int, r: int,
                      m: int) -> Hypergraph:
    """Random r-uniform instance; duplicate draws collapse on build."""
    rows = [sorted(int(x) for x in rng.choice(n, size=r, replace=False))
            for _ in range(m)]
    return build_hypergraph(n, r, rows)


def edge_lists(H: Hypergraph) -> list:
    return [tuple(int(x) for x in e) for e in H.edges()]
