"""Deterministic seed derivation.

Every random decision in the pipeline draws from a generator seeded
through this module, so one master seed reproduces the whole run. The
derivation tree is::

    master
    ├── ("split",)                      train/test permutation
    ├── ("cv", target, *sources)        CV fold shuffling for one model slot
    ├── ("cars", target, source)        master seed of one CARS consensus
    │       └── ("loop", i)             per-loop CARS seed
    └── ("synth", stream)               each synthetic-noise stream

Child seeds are the first 8 bytes of a SHA-256 over the repr of the tag
tuple, so they are stable across platforms and Python versions (repr of
ints and ASCII strings is stable; never pass floats as tags).
"""

import hashlib

import numpy as np


def derive_seed(master_seed: int, *tags) -> int:
    """Return a 64-bit child seed for the given tag path.

    Parameters
    ----------
    master_seed : int
        Root seed of the run.
    *tags : int or str
        Path in the derivation tree, e.g. ``("cars", "vcmax25", "R")``.
    """
    for t in tags:
        if not isinstance(t, (int, str)):
            raise TypeError(f"seed tags must be int or str, got {type(t).__name__}")
    payload = repr((int(master_seed),) + tags).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(master_seed: int, *tags) -> np.random.Generator:
    """Generator seeded at the given point of the derivation tree."""
    return np.random.default_rng(derive_seed(master_seed, *tags))
