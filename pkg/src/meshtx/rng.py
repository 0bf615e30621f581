"""SplitMix64, threaded as an explicit state value.

Chosen because it is tiny, fully specified, and reproducible in any
language: the state is a 64-bit counter advanced by the golden-gamma
constant and each output is a bijective mix of the new state.
"""

from __future__ import annotations

NAME = "splitmix64"
_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def next_u64(state: int) -> tuple[int, int]:
    state = (state + _GAMMA) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


def uniform_int(state: int, n: int) -> tuple[int, int]:
    """Draw from [0, n). Rejection sampling keeps it unbiased for any n."""
    if n <= 0:
        raise ValueError("n must be positive")
    limit = (1 << 64) - ((1 << 64) % n)
    while True:
        x, state = next_u64(state)
        if x < limit:
            return x % n, state


def derive_seed(seed: int, stream: int) -> int:
    """Independent per-node stream from a scenario seed."""
    x, _ = next_u64((seed ^ (stream * 0xD1B54A32D192ED03)) & _MASK)
    return x
