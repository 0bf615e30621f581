import itertools
from collections import Counter

import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from meshtx import rng
from meshtx.access import (
    AccessMode,
    BackoffParams,
    Denied,
    DenyReason,
    Granted,
    NavTimer,
    RetryCounter,
    Wait,
    backoff_val,
    contention_window,
    request_access,
    update_nav,
)
from meshtx.builder import NavRegister

from oracles import SPLITMIX64_1234567

BP = BackoffParams()


def _request(mode, nav, cs, attempts, threshold=10, seed=7):
    return request_access(mode, NavRegister(nav), cs, RetryCounter(attempts, threshold), BP, seed)


def test_idle_medium_granted():
    outcome, rc, _ = _request(AccessMode.INITIAL, 0, 0, 0)
    assert outcome == Granted() and rc.attempts == 0


def test_busy_at_threshold_denied():
    outcome, rc, _ = _request(AccessMode.INITIAL, 0, 1, 10)
    assert outcome == Denied(DenyReason.RETRY_EXHAUSTED)
    assert rc.attempts == 11


def test_first_busy_draws_from_base_window():
    outcome, rc, _ = _request(AccessMode.INITIAL, 0, 1, 0)
    assert isinstance(outcome, Wait) and 0 <= outcome.backoff_val <= BP.cw_min
    assert outcome.cw == BP.cw_min and rc.attempts == 1


def test_first_busy_matches_modular_oracle():
    # rejection never fires for n=16 (2^64 is a multiple), so the draw is
    # the plain splitmix output mod 16
    seen = Counter()
    for seed in range(10_000):
        outcome, _, _ = _request(AccessMode.INITIAL, 0, 1, 0, seed=seed)
        x, _ = rng.next_u64(seed)
        assert outcome.backoff_val == x % (BP.cw_min + 1)
        seen[outcome.backoff_val] += 1
    assert set(seen) == set(range(BP.cw_min + 1))
    assert chisquare([seen[i] for i in range(16)]).pvalue > 0.01


def test_nav_busy_consumes_attempt():
    outcome, rc, _ = _request(AccessMode.INITIAL, 5, 0, 3)
    assert isinstance(outcome, Wait) and rc.attempts == 4


def test_retry_increments_before_checking():
    outcome, rc, _ = _request(AccessMode.RETRY, 0, 0, 2)
    assert outcome == Granted() and rc.attempts == 3
    outcome, rc, _ = _request(AccessMode.RETRY, 0, 0, 10)
    assert outcome == Denied() and rc.attempts == 11


@pytest.mark.parametrize("nav, cs, attempts, mode", list(itertools.product(
    (0, 1, 5), (0, 1), range(13), AccessMode)))
def test_admission_exhaustive(nav, cs, attempts, mode):
    threshold = 10
    if attempts > threshold + 1:
        with pytest.raises(ValueError):
            RetryCounter(attempts, threshold)
        return
    outcome, rc, _ = _request(mode, nav, cs, attempts, threshold)
    busy = nav != 0 or cs == 1
    if busy:
        assert not isinstance(outcome, Granted)
    # Denied iff the post-increment count passes the threshold
    after = attempts + (mode is AccessMode.RETRY)
    if after <= threshold:
        after += busy
    after = min(after, threshold + 1)
    assert rc.attempts == after
    assert isinstance(outcome, Denied) == (after > threshold)
    if not busy and after <= threshold:
        assert outcome == Granted()


@pytest.mark.parametrize("attempts, cw", [
    (0, 15), (1, 31), (2, 63), (3, 127), (4, 255), (5, 511), (6, 1023), (7, 1023), (20, 1023),
])
def test_contention_window_doubles_then_clamps(attempts, cw):
    assert contention_window(attempts, BP) == cw


def test_backoff_bounds_seed_sweep():
    for seed in range(4096):
        v, _ = backoff_val(1, BP, seed)
        assert 0 <= v <= 31
        v, _ = backoff_val(20, BP, seed)
        assert 0 <= v <= 1023


def test_backoff_rejects_negative_attempts():
    with pytest.raises(ValueError):
        backoff_val(-1, BP, 0)


@given(st.integers(0, 2**64 - 1), st.integers(0, 30))
def test_backoff_deterministic(seed, attempts):
    assert backoff_val(attempts, BP, seed) == backoff_val(attempts, BP, seed)


def test_outcome_sequence_deterministic():
    def run(seed):
        rc, state, out = RetryCounter(), seed, []
        for nav, cs in [(0, 1), (3, 0), (0, 1), (0, 0)]:
            outcome, rc, state = request_access(AccessMode.INITIAL, NavRegister(nav), cs, rc, BP, state)
            out.append(outcome)
        return out
    assert run(99) == run(99)


def test_backoff_params_validation():
    with pytest.raises(ValueError):
        BackoffParams(cw_min=16)
    with pytest.raises(ValueError):
        BackoffParams(cw_min=63, cw_max=31)
    with pytest.raises(ValueError):
        Wait(40, 31)


def test_retry_counter():
    rc = RetryCounter(threshold=2)
    for _ in range(5):
        rc = rc.increment()
    assert rc.attempts == 3 and rc.exhausted
    assert rc.reset().attempts == 0


def test_splitmix_reference_vector():
    state, out = 1234567, []
    for _ in range(3):
        x, state = rng.next_u64(state)
        out.append(x)
    assert out == SPLITMIX64_1234567


def test_uniform_int_rejects_bad_range():
    with pytest.raises(ValueError):
        rng.uniform_int(0, 0)


class TestNav:
    def test_expired(self):
        assert update_nav(NavTimer(10), 100, 50).remaining(50) == 100

    def test_longer_remaining_kept(self):
        nav = NavTimer(250)
        assert update_nav(nav, 100, 50) == nav

    def test_extended(self):
        assert update_nav(NavTimer(100), 100, 50).remaining(50) == 100

    def test_register_saturates(self):
        assert NavTimer(1 << 20).register(0).value == 0xFFFF
        assert NavTimer(5).register(10).value == 0
