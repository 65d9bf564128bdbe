"""Portable seeded random numbers.

Everything that draws randomness (document sampling, K-Means++ seeding,
reference picking) goes through :class:`XorShift64Star` so that a seed
reproduces the same draws on any platform and in any language that
implements the same three steps:

* state init: ``state = splitmix64(seed)``, replaced by a fixed constant
  if that yields 0;
* step: ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27`` (mod 2**64), output
  ``x * 0x2545F4914F6CDD1D mod 2**64``;
* floats take the top 53 bits of the output, integers below ``n`` use
  rejection sampling on the output modulo ``n``.
"""

MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_FALLBACK_STATE = 0x9E3779B97F4A7C15


def splitmix64(x):
    """One round of the SplitMix64 finalizer; a good 64-bit mixer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed=0):
        state = splitmix64(int(seed) & MASK64)
        self._state = state or _FALLBACK_STATE

    @classmethod
    def derive(cls, seed, stream):
        """Independent generator for sub-stream ``stream`` of ``seed``."""
        return cls(splitmix64((int(seed) & MASK64) ^ splitmix64(int(stream) & MASK64)))

    def next_u64(self):
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & MASK64

    def random(self):
        """Float uniform on [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n):
        """Integer uniform on [0, n), unbiased."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def sample(self, population_size, k):
        """``k`` distinct indices from ``range(population_size)``, in draw order.

        Partial Fisher-Yates shuffle.
        """
        if not 0 <= k <= population_size:
            raise ValueError("sample size out of range")
        pool = list(range(population_size))
        for i in range(k):
            j = i + self.randbelow(population_size - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
