"""
Counter-based seed derivation.

``derive_seed(master, *keys)`` folds each key into the state with the
SplitMix64 finalizer::

    h = mix(master)
    for k in keys:
        h = mix(h ^ mix(k))

so a trial seed depends only on (master, cell, trial) and not on the order in
which trials happen to run.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(master: int, *keys: int) -> int:
    h = splitmix64(int(master) & _MASK)
    for k in keys:
        h = splitmix64(h ^ splitmix64(int(k) & _MASK))
    return h


# one tag per randomness stream, so streams never share seeds
CALIBRATION = 0xC411
DETECTION = 0xDE7E
ATTACK = 0xA77A
