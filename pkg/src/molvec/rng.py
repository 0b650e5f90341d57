"""Deterministic pseudo-random number generation.

splitmix64 expands a user seed into xoshiro256** state; xoshiro256** drives
every random choice in the library (shuffles, sampling, initialization) so
that runs are bit-reproducible across platforms and Python versions.
Algorithms follow the public reference implementations by Blackman & Vigna.
"""

MASK64 = (1 << 64) - 1


def splitmix64_stream(seed, n):
    """Return n 64-bit values from the splitmix64 generator."""
    out = []
    x = seed & MASK64
    for _ in range(n):
        x = (x + 0x9E3779B97F4A7C15) & MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** generator seeded through splitmix64.

    ``stream`` lets callers derive independent substreams (e.g. one per
    epoch) from a master seed without correlated output.
    """

    def __init__(self, seed, stream=0):
        s = splitmix64_stream((seed & MASK64) ^ splitmix64_stream(stream & MASK64, 1)[0], 4)
        self.s = list(s)
        if not any(self.s):  # all-zero state is invalid for xoshiro
            self.s[0] = 1

    def next_u64(self):
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self):
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()

    def randrange(self, n):
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        # draw from the largest multiple of n below 2^64
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items):
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]
