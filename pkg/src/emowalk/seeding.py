"""Deterministic seed derivation for every randomized stage.

All randomness in the package flows through ``derive_seed``: a stage mixes
its run seed with stable identifiers (participant id, fold index, sample
index) and gets a 63-bit child seed that does not depend on scheduling
order.  The mixer is splitmix64, implemented directly so results are
identical across platforms and numpy versions.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _absorb(state: int, value: int) -> int:
    return _mix64((state + _GAMMA + (value & _MASK64)) & _MASK64)


def derive_seed(*parts: int | str) -> int:
    """Mix integers and strings into a stable seed in [0, 2**63).

    The same parts always give the same seed; any change to any part
    gives an unrelated one.
    """
    state = _mix64(0x6D656D6F77616C6B)  # fixed root
    for part in parts:
        if isinstance(part, bool):
            raise TypeError("seed parts must be int or str, not bool")
        if isinstance(part, int):
            state = _absorb(state, 1)
            state = _absorb(state, part)
        elif isinstance(part, str):
            data = part.encode("utf-8")
            state = _absorb(state, 2)
            state = _absorb(state, len(data))
            for i in range(0, len(data), 8):
                chunk = int.from_bytes(data[i : i + 8], "little")
                state = _absorb(state, chunk)
        else:
            raise TypeError(f"seed parts must be int or str, got {type(part)!r}")
    return state >> 1


def rng_from(*parts: int | str) -> np.random.Generator:
    """A numpy Generator seeded from the derived seed of ``parts``."""
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))


def spawn_tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    """Per-tree seeds: position t equals derive_seed(seed, "tree", t).

    The prefix state of (seed, "tree") is absorbed once, then the final
    two absorptions are vectorized over t with wrapping uint64 math.
    """
    prefix = _mix64(0x6D656D6F77616C6B)
    prefix = _absorb(prefix, 1)
    prefix = _absorb(prefix, seed)
    data = b"tree"
    prefix = _absorb(prefix, 2)
    prefix = _absorb(prefix, len(data))
    prefix = _absorb(prefix, int.from_bytes(data, "little"))
    prefix = _absorb(prefix, 1)

    t = np.arange(n_trees, dtype=np.uint64)
    z = np.uint64((prefix + _GAMMA) & _MASK64) + t
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return z >> np.uint64(1)
