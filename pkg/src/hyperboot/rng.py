"""Deterministic random streams.

Every random decision in the package is drawn from a named substream of a
single master seed.  Substreams are identified by an integer path; the same
(master seed, path) pair always yields the same stream, independent of how
many other streams were created before it or of the worker that draws from
it.  That is what makes trial-level parallelism bit-reproducible.

Philox is counter-based, so a stream can also be evaluated at an arbitrary
offset without generating the prefix (used by the per-edge coin oracle).
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

# Fixed stream labels.  New labels must be appended, never renumbered,
# or archived seeds stop reproducing.
VERTEX_DRAW = 0
EDGE_COIN = 1
PROCESS_CHOICE = 2
TRIAL = 3
INSTANCE = 4


def substream(master_seed: int, *path: int) -> Generator:
    """Generator for the substream identified by an integer path."""
    return Generator(Philox(SeedSequence(master_seed, spawn_key=tuple(path))))


def stream_key(master_seed: int, *path: int) -> np.ndarray:
    """Raw 128-bit Philox key for a substream.

    Callers that need random access by counter (rather than a sequential
    generator) build their own ``Philox(key=...)`` from this and advance it.
    """
    return SeedSequence(master_seed, spawn_key=tuple(path)).generate_state(2, np.uint64)


def value_at(key: np.ndarray, index: int) -> float:
    """The uniform [0,1) variate at position ``index`` of a keyed stream.

    Pure function of (key, index): evaluation order cannot change it.
    """
    bg = Philox(key=key)
    if index:
        bg.advance(int(index))
    return Generator(bg).random()
