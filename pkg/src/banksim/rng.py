"""Seeded, portable pseudo-random generator for stochastic draws.

The simulator needs bit-reproducible random streams across platforms and
language ports, so it uses a named algorithm with published reference
constants instead of the host language's default generator:

* state initialisation: splitmix64 (Steele, Lea, Flood 2014)
* stream generation:    xoshiro256** 1.0 (Blackman, Vigna 2018)

Only integer arithmetic is used; every draw is a function of the 64-bit
seed alone.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, (z ^ (z >> 31)) & _MASK64


def derive_subseed(seed: int, index: int) -> int:
    """Deterministic sub-seed for parallel runs (e.g. batch sweep cells).

    Hashes (seed, index) through splitmix64 so neighbouring indices give
    uncorrelated streams.
    """
    state = (seed ^ 0xA0761D6478BD642F) & _MASK64
    state, _ = splitmix64(state)
    state = (state + index) & _MASK64
    _, out = splitmix64(state)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** 1.0 over four 64-bit words seeded via splitmix64."""

    __slots__ = ("_s",)

    def __init__(self, seed: int) -> None:
        state = seed & _MASK64
        words = []
        for _ in range(4):
            state, out = splitmix64(state)
            words.append(out)
        self._s = words

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def bernoulli_permil(self, rate_permil: int) -> bool:
        """One draw with probability rate_permil/1000 (exact threshold test)."""
        if rate_permil <= 0:
            return False
        if rate_permil >= 1000:
            return True
        # threshold = floor(rate/1000 * 2^64); draw < threshold has the exact probability
        return self.next_u64() < (rate_permil << 64) // 1000
