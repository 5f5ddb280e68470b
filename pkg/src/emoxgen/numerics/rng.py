"""Seeded random streams.

All randomness in the package comes from numpy's ``Philox`` bit generator
(Philox4x64-10, counter based) keyed through ``SeedSequence([seed, stream])``.
Both pieces are platform independent, so a seed reproduces the same stream
bit for bit on any machine running the same numpy release.
"""

import numpy as np


def seeded_rng(seed, stream=0):
    """Deterministic generator for ``(seed, stream)``.

    ``stream`` separates independent consumers (init, shuffling, dropout)
    that derive from one experiment seed.
    """
    if int(seed) < 0 or int(stream) < 0:
        raise ValueError("seed and stream must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def shuffled(seq, rng):
    seq = list(seq)
    return [seq[i] for i in rng.permutation(len(seq))]
