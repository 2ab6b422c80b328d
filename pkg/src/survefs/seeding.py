"""Deterministic seed derivation.

Every source of randomness in the package draws from a generator created
here.  Child seeds are derived by hashing an integer tuple through
``numpy.random.SeedSequence``, so the stream consumed by one component
never depends on scheduling order or on how many draws another component
made.
"""

import numpy as np

# Role tags keep derivation paths for different purposes disjoint even
# when the remaining tuple components collide.
ROLE_CV = 1
ROLE_PROBES = 2
ROLE_BOOT = 3
ROLE_TREE = 4
ROLE_PERM = 5
ROLE_SYNTH = 6
ROLE_FOLD = 7
ROLE_ENSEMBLE = 8


def child_seed(*parts: int) -> int:
    """Hash an integer tuple into a single 32-bit seed."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(ss.generate_state(1)[0])


def rng_for(*parts: int) -> np.random.Generator:
    """Generator seeded from the hash of ``parts``."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return np.random.default_rng(ss)
