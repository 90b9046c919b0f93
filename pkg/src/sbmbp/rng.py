"""Seeded random streams.

Every sampler takes an explicit seed and draws from a Philox-4x64 counter-based
bit generator keyed through numpy's ``SeedSequence``.  Per-trial seeds are
derived from a master seed with a counter scheme::

    derive_seed(master, trial, ...) = SeedSequence(master, spawn_key=(trial, ...))
                                          .generate_state(1, uint64)[0]

so a trial can be re-run in isolation from the integer it records, and
fanning trials out to workers does not change results.
"""

from __future__ import annotations

import numpy as np

SeedLike = int | np.random.SeedSequence | np.random.Generator


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return a Philox-backed generator for ``seed``.

    A ``Generator`` passed in is returned unchanged so helpers can share a
    stream with their caller.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        if int(seed) < 0:
            raise ValueError("seed must be non-negative")
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(master: int, *counters: int) -> int:
    """Child seed for the counter tuple under ``master`` (a 64-bit integer)."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(c) for c in counters))
    return int(ss.generate_state(1, np.uint64)[0])


def child_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 63-bit seed from an existing stream."""
    return int(rng.integers(0, 2**63 - 1))
