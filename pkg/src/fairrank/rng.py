"""Seeded randomness helpers.

All randomized operations in the package accept an explicit ``seed`` (an int,
a ``numpy.random.Generator``, or ``SeedSequence``).  Generators are built on
the counter-based Philox bit generator, so independent streams can be split
off deterministically and runs are reproducible across platforms.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return a Philox-backed Generator for ``seed``.

    Passing an existing Generator returns it unchanged (the caller keeps
    ownership of the stream).  ``None`` draws OS entropy; tests and the
    experiment harness always pass explicit seeds.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def split(seed: SeedLike, n: int) -> list[np.random.Generator]:
    """Split ``n`` independent child generators from ``seed``."""
    if isinstance(seed, np.random.Generator):
        seqs = seed.bit_generator.seed_seq.spawn(n)  # type: ignore[attr-defined]
    elif isinstance(seed, np.random.SeedSequence):
        seqs = seed.spawn(n)
    else:
        seqs = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(s)) for s in seqs]


def derive_seed(base_seed: int, *key: int) -> int:
    """Deterministically derive a 63-bit child seed from a base seed and a
    structured key (e.g. grid index and iteration number).

    Used by the experiment harness so every work unit is reproducible in
    isolation and results are independent of scheduling order.
    """
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
