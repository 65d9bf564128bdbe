from collections import Counter

import pytest

from divsumm.rng import XorShift64Star, splitmix64

M = 2**64


def reference_stream(seed, count):
    """Straight transcription of the documented algorithm, kept separate on purpose."""
    z = (seed + 0x9E3779B97F4A7C15) % M
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % M
    x = z ^ (z >> 31)
    out = []
    for _ in range(count):
        x ^= x >> 12
        x ^= (x << 25) % M
        x ^= x >> 27
        out.append((x * 0x2545F4914F6CDD1D) % M)
    return out


@pytest.mark.parametrize("seed", [0, 1, 42, 2**63 + 5])
def test_matches_reference(seed):
    rng = XorShift64Star(seed)
    assert [rng.next_u64() for _ in range(50)] == reference_stream(seed, 50)


def test_splitmix_known_value():
    # first output of SplitMix64 seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_random_in_unit_interval():
    rng = XorShift64Star(3)
    xs = [rng.random() for _ in range(5000)]
    assert all(0.0 <= x < 1.0 for x in xs)
    assert 0.45 < sum(xs) / len(xs) < 0.55


def test_randbelow_uniformish():
    rng = XorShift64Star(9)
    counts = Counter(rng.randbelow(6) for _ in range(6000))
    assert set(counts) == set(range(6))
    assert all(800 < c < 1200 for c in counts.values())


def test_sample_distinct():
    rng = XorShift64Star(5)
    s = rng.sample(10, 10)
    assert sorted(s) == list(range(10))
    with pytest.raises(ValueError):
        rng.sample(3, 4)


def test_derived_streams_differ():
    a = XorShift64Star.derive(7, 0)
    b = XorShift64Star.derive(7, 1)
    assert [a.next_u64() for _ in range(4)] != [b.next_u64() for _ in range(4)]
    c = XorShift64Star.derive(7, 0)
    assert XorShift64Star.derive(7, 0).next_u64() == c.next_u64()
