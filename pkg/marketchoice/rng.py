"""
SplitMix64 pseudo-random generator.

A fixed, documented 64-bit generator (see docs/PRNG.md) so that generated
instances and sampled solutions are identical across Python and NumPy
versions. Integers in a range are drawn by rejection sampling, never by
plain modulo, so every value is equally likely.
"""

from typing import List, Sequence, TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], both ends included."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        span = high - low + 1
        if span > MASK64:
            raise ValueError("range wider than 64 bits")
        # Reject the top sliver of outputs that would bias the modulo
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return low + x % span

    def coin(self) -> bool:
        return self.randint(0, 1) == 1

    def choice(self, items: Sequence[T]) -> T:
        return items[self.randint(0, len(items) - 1)]

    def shuffled(self, items: Sequence[T]) -> List[T]:
        """Fisher-Yates shuffle into a new list."""
        out = list(items)
        for k in range(len(out) - 1, 0, -1):
            r = self.randint(0, k)
            out[k], out[r] = out[r], out[k]
        return out
