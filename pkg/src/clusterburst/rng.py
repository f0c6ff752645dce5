"""Portable 64-bit pseudo-random generator used everywhere in the engine.

The generator is splitmix64: an additive counter stepped by a fixed odd
constant, with an xorshift-multiply output mix.  It was chosen over a
stateful shift-register variant because the output is a pure function of
(seed, draw index), which makes derived sub-streams trivial and lets the
compiled kernels and this pure-Python module share one specification.

Constants (also listed in docs/FORMATS.md; replays are only portable
across builds that agree on them):

    GAMMA = 0x9E3779B97F4A7C15          # additive step
    MIX1  = 0xBF58476D1CE4E5B9          # multiply after z ^= z >> 30
    MIX2  = 0x94D049BB133111EB          # multiply after z ^= z >> 27
                                        # final: z ^= z >> 31

A draw advances the state by GAMMA and returns mix64(state).  Doubles in
[0, 1) take the top 53 bits: (z >> 11) * 2**-53.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

RNG_TAG = "splitmix64/v1"


def mix64(x: int) -> int:
    """The splitmix64 output mix of a 64-bit word."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def next_u64(state: int) -> tuple[int, int]:
    """Advance the generator; returns (new_state, draw)."""
    state = (state + GAMMA) & MASK64
    return state, mix64(state)


def u64_to_unit(z: int) -> float:
    """Map a 64-bit draw to a double in [0, 1)."""
    return (z >> 11) * 2.0**-53


def derive_seed(seed: int, stream: int) -> int:
    """A decorrelated child seed for an indexed sub-stream.

    Defined as mix64(mix64(seed) + GAMMA * (stream + 1)); batch runners use
    it so per-game streams never overlap the parent stream.
    """
    base = mix64(seed & MASK64)
    return mix64((base + GAMMA * ((stream & MASK64) + 1)) & MASK64)


class SplitMix64:
    """Convenience stateful wrapper over the pure functions above."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, z = next_u64(self.state)
        return z

    def uniform(self) -> float:
        return u64_to_unit(self.next_u64())

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty integer range [{lo}, {hi}]")
        return lo + int(self.uniform() * (hi - lo + 1))

    def choice(self, items):
        if not items:
            raise ValueError("choice from empty sequence")
        return items[self.randint(0, len(items) - 1)]

    def split(self, stream: int) -> "SplitMix64":
        return SplitMix64(derive_seed(self.state, stream))
