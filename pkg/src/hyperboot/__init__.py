"""Bootstrap percolation laboratory for random hypergraphs.

Structure, sampling and closure of r-uniform hypergraphs; the randomized
revelation processes that drive infection rounds; configuration censuses;
the closed-form trajectory and threshold layer; and a reproducible
experiment harness with a command line front end.
"""

__version__ = "0.1.0"

from .hypergraph import Hypergraph, build_hypergraph, check_well_behaved

__all__ = ["Hypergraph", "build_hypergraph", "check_well_behaved", "__version__"]
