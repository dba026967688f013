"""Deterministic noise streams.

Each (master seed, realization, stream id) triple owns an independent
counter-based Philox stream; a particle's noise is a function of its stream
id only, so ensemble size, realization batching, and thread count cannot
change the noise any given particle sees.  Stream ids default to the
particle slot index and travel with the particle under permutations.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, realization: int, stream_id: int) -> np.random.Generator:
    """Generator for one particle slot of one realization."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(realization), int(stream_id)))
    return np.random.Generator(np.random.Philox(ss))


def substream_block(seed: int, realizations, stream_ids) -> list:
    """Matrix of generators, one row per realization, one column per stream id."""
    return [[substream(seed, r, s) for s in stream_ids] for r in realizations]


def normal_block(gens: list, n_draws: int) -> np.ndarray:
    """Draw n_draws standard normals from every generator in the (R, N) matrix,
    returning shape (R, N, n_draws)."""
    rows = len(gens)
    cols = len(gens[0])
    out = np.empty((rows, cols, n_draws))
    for r in range(rows):
        row = gens[r]
        for i in range(cols):
            out[r, i, :] = row[i].standard_normal(n_draws)
    return out
