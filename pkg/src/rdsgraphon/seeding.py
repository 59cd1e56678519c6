"""
Stream-seed derivation for reproducible, independent replicates.

A stream seed is ``mix(master_seed, replicate, tag)``: each argument is folded
into a 64-bit state and passed through the splitmix64 finalizer, so nearby
inputs give unrelated seeds and no generator state is shared between streams.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """The splitmix64 output function (a 64-bit avalanche hash)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix(master_seed: int, replicate: int = 0, tag: int = 0) -> int:
    h = splitmix64(int(master_seed) & MASK64)
    h = splitmix64(h ^ (int(replicate) & MASK64))
    return splitmix64(h ^ (int(tag) & MASK64))


def tag_of(label: str) -> int:
    """Stable 64-bit tag for a text label (FNV-1a, then avalanche)."""
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return splitmix64(h)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
