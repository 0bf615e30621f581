"""Allocation control: NAV + carrier-sense admission, the retry counter,
and binary exponential backoff.

Everything here is a pure function of explicit state; the simulator owns
the clock and runs the backoff countdown.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from . import rng as _rng
from .builder import NavRegister

DEFAULT_THRESHOLD = 10  # dot11rst_threshold


class AccessMode(enum.Enum):
    INITIAL = "initial"  # en_medium
    RETRY = "retry"  # en_retry


class DenyReason(enum.Enum):
    RETRY_EXHAUSTED = "retry-exhausted"


@dataclass(frozen=True)
class Granted:
    pass


@dataclass(frozen=True)
class Denied:
    reason: DenyReason = DenyReason.RETRY_EXHAUSTED


@dataclass(frozen=True)
class Wait:
    backoff_val: int
    cw: int

    def __post_init__(self):
        if not 0 <= self.backoff_val <= self.cw:
            raise ValueError("backoff value outside the contention window")


AccessOutcome = Granted | Denied | Wait


@dataclass(frozen=True)
class RetryCounter:
    attempts: int = 0
    threshold: int = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not 0 <= self.attempts <= self.threshold + 1:
            raise ValueError("attempts must lie in [0, threshold + 1]")

    def increment(self) -> RetryCounter:
        return replace(self, attempts=min(self.attempts + 1, self.threshold + 1))

    def reset(self) -> RetryCounter:
        return replace(self, attempts=0)

    @property
    def exhausted(self) -> bool:
        return self.attempts > self.threshold


def _is_pow2_minus_1(x: int) -> bool:
    return x > 0 and (x + 1) & x == 0


@dataclass(frozen=True)
class BackoffParams:
    cw_min: int = 15
    cw_max: int = 1023
    slot_time: int = 20  # µs
    seed: int = 0

    def __post_init__(self):
        if not (_is_pow2_minus_1(self.cw_min) and _is_pow2_minus_1(self.cw_max)):
            raise ValueError("cw_min and cw_max must both be 2^k - 1")
        if self.cw_min > self.cw_max:
            raise ValueError("cw_min must not exceed cw_max")
        if self.slot_time <= 0:
            raise ValueError("slot_time must be positive")


def contention_window(attempts: int, bp: BackoffParams) -> int:
    return min(bp.cw_max, (bp.cw_min + 1) * 2**attempts - 1)


def backoff_val(attempts: int, bp: BackoffParams, rng_state: int) -> tuple[int, int]:
    """Uniform slot count in [0, CW(attempts)].

    ``attempts=0`` gives the base window ``cw_min``; each further attempt
    doubles it until ``cw_max``.
    """
    if attempts < 0:
        raise ValueError("attempts must be non-negative")
    cw = contention_window(attempts, bp)
    return _rng.uniform_int(rng_state, cw + 1)


def request_access(
    mode: AccessMode,
    nav: NavRegister,
    carrier_sense: int,
    rc: RetryCounter,
    bp: BackoffParams,
    rng_state: int,
) -> tuple[AccessOutcome, RetryCounter, int]:
    if mode is AccessMode.RETRY:
        rc = rc.increment()
    if rc.exhausted:
        return Denied(), rc, rng_state
    if nav.value == 0 and not carrier_sense:
        return Granted(), rc, rng_state
    # busy, either virtually (NAV) or physically: both cost an attempt
    rc = rc.increment()
    if rc.exhausted:
        return Denied(), rc, rng_state
    window = rc.attempts - 1
    slots, rng_state = backoff_val(window, bp, rng_state)
    return Wait(slots, contention_window(window, bp)), rc, rng_state


@dataclass(frozen=True)
class NavTimer:
    """NAV held as an absolute expiry time (µs)."""

    expiry: int = 0

    def remaining(self, now: int) -> int:
        return max(0, self.expiry - now)

    def register(self, now: int) -> NavRegister:
        return NavRegister(min(self.remaining(now), 0xFFFF))


def update_nav(nav: NavTimer, overheard_did: int, now: int) -> NavTimer:
    if now + overheard_did > nav.expiry:
        return NavTimer(now + overheard_did)
    return nav
