"""Golden conformance suite: handshake orderings for every stimulus path,
the retry on a missing ACK, the Duration/ID rules and the three
collision-avoidance cases.

Expected values here are frozen literals, deliberately not read back from
:mod:`meshtx.frames`, so a corrupted constant table is caught.
"""

from __future__ import annotations

from dataclasses import dataclass

from .access import AccessMode, BackoffParams, Denied, Granted, RetryCounter, request_access
from .builder import NavRegister, compute_did
from .frames import FrameKind, MacAddress, classify, subtype_code
from .scenario import AccessParams, NodeConfig, Scenario, TrafficItem
from .sim import run
from .trace import Trace, assert_order

EXPECTED_CODES = {
    FrameKind.ACK: 0b101011,
    FrameKind.DATA: 0b010000,
    FrameKind.CTS: 0b010011,
    FrameKind.RTS: 0b101101,
    FrameKind.PS_POLL: 0b100101,
    FrameKind.CFP_END: 0b010110,
}

HANDSHAKE = (
    "en_buildframe", "frame_done", "en_medium", "access_granted",
    "transmitted", "transmit_complete",
)

# stimulus signal -> (scope in the two-node scenario, frame it must build)
PATHS = {
    "msdurdy": ("n0", FrameKind.RTS),
    "rec_cts": ("n0", FrameKind.DATA),
    "rec_rts": ("n1", FrameKind.CTS),
    "rec_data": ("n1", FrameKind.ACK),
}

REFERENCE_THRESHOLD = 10

MAC_A = MacAddress.parse("02:00:00:00:00:01")
MAC_B = MacAddress.parse("02:00:00:00:00:02")
MAC_C = MacAddress.parse("02:00:00:00:00:03")


@dataclass(frozen=True)
class CaseResult:
    name: str
    passed: bool
    detail: str = ""


def two_node(seed: int = 1, threshold: int = REFERENCE_THRESHOLD, mute=frozenset(), payload: bytes = b"mesh") -> Scenario:
    return Scenario(
        nodes=(
            NodeConfig(0, MAC_A, traffic=(TrafficItem(0, 1, payload),)),
            NodeConfig(1, MAC_B, mute=frozenset(mute)),
        ),
        access=AccessParams(threshold=threshold),
        seed=seed,
        horizon=200_000,
        name="two-node",
    )


def silent_responder(seed: int = 1, threshold: int = REFERENCE_THRESHOLD) -> Scenario:
    return two_node(seed, threshold, mute={FrameKind.CTS, FrameKind.ACK})


def deferral(seed: int = 1, threshold: int = REFERENCE_THRESHOLD) -> Scenario:
    """Node 2 gets an MSDU while node 0's exchange holds the medium."""
    return Scenario(
        nodes=(
            NodeConfig(0, MAC_A, traffic=(TrafficItem(0, 1, b"first"),)),
            NodeConfig(1, MAC_B),
            NodeConfig(2, MAC_C, traffic=(TrafficItem(100, 1, b"second"),)),
        ),
        access=AccessParams(threshold=threshold),
        seed=seed,
        horizon=200_000,
        name="deferral",
    )


def path_window(trace: Trace, scope: str, stimulus: str, occurrence: int = 0) -> list:
    """Records of ``scope`` from a stimulus rising edge to the next reset of
    en_buildframe (inclusive)."""
    recs = trace.for_scope(scope)
    starts = [i for i, r in enumerate(recs) if r.signal == stimulus and r.value]
    if len(starts) <= occurrence:
        return []
    i = starts[occurrence]
    out = []
    for r in recs[i:]:
        out.append(r)
        if r.signal == "en_buildframe" and not r.value:
            break
    return out


def check_path(trace: Trace, stimulus: str) -> CaseResult:
    scope, kind = PATHS[stimulus]
    name = f"fsm path {stimulus}"
    window = path_window(trace, scope, stimulus)
    if not window:
        return CaseResult(name, False, f"no {stimulus} edge in {scope}")
    rises = [r.signal for r in window if r.signal in HANDSHAKE and r.value]
    if rises != list(HANDSHAKE):
        return CaseResult(name, False, f"edges {rises}")
    if window[-1].signal != "en_buildframe" or window[-1].value:
        return CaseResult(name, False, "handshake never reset")
    codes = [r.value for r in window if r.signal == "frame_subtype"]
    if codes != [EXPECTED_CODES[kind]]:
        got = ", ".join(f"{c:06b}" for c in codes)
        return CaseResult(name, False, f"frame_subtype {got}, expected {EXPECTED_CODES[kind]:06b}")
    sub = Trace()
    for r in window:
        sub.record(r.time, r.scope, r.signal, r.value)
    order = [stimulus, *HANDSHAKE, ("en_buildframe", "fall")]
    if not assert_order(sub, scope, order):
        return CaseResult(name, False, "assert_order rejected the window")
    return CaseResult(name, True, f"{kind.value} built with {EXPECTED_CODES[kind]:06b}")


def check_subtypes() -> CaseResult:
    bad = []
    for kind, code in EXPECTED_CODES.items():
        try:
            got = subtype_code(kind)
        except Exception as exc:  # noqa: BLE001
            bad.append(f"{kind.value}: {exc}")
            continue
        if got != code:
            bad.append(f"{kind.value}={got:06b}")
        elif classify(code) is not kind:
            bad.append(f"classify({code:06b})")
    return CaseResult("subtype constants", not bad, "; ".join(bad) or "6 codes, bijective")


def check_missing_ack(threshold: int = REFERENCE_THRESHOLD) -> CaseResult:
    trace = run(two_node(threshold=threshold, mute={FrameKind.ACK})).trace
    data_done = path_window(trace, "n0", "rec_cts")
    retries = trace.edges("n0", "en_retry")
    ok = bool(data_done) and bool(retries) and retries[0] > data_done[-1].time
    return CaseResult("missing ack raises en_retry", ok, f"first en_retry at t={retries[0] if retries else None}")


def check_did() -> CaseResult:
    for nav in range(1 << 16):
        reg = NavRegister(nav)
        for kind in FrameKind:
            if kind.reserved:
                continue
            did = compute_did(kind, reg)
            if kind is FrameKind.PS_POLL:
                ok = did & 0b11 == 0b11 and did >> 2 == nav >> 2
            elif kind is FrameKind.CFP_END:
                ok = did == 1
            else:
                ok = did & 1 == 0 and did >> 1 == nav >> 1
            if not ok:
                return CaseResult("duration/id rules", False, f"{kind.value} nav={nav} -> {did}")
    return CaseResult("duration/id rules", True, "65536 NAV values x 8 kinds")


def check_busy_carrier() -> CaseResult:
    bp = BackoffParams()
    outcome, rc, _ = request_access(AccessMode.INITIAL, NavRegister(0), 1, RetryCounter(), bp, 1)
    ok = not isinstance(outcome, Granted) and rc.attempts == 1
    return CaseResult("collision avoidance: busy carrier", ok, type(outcome).__name__)


def check_retry_limit(threshold: int = REFERENCE_THRESHOLD) -> CaseResult:
    bp = BackoffParams()
    rc, state = RetryCounter(0, threshold), 7
    for request in range(1, 64):
        outcome, rc, state = request_access(AccessMode.INITIAL, NavRegister(0), 1, rc, bp, state)
        if isinstance(outcome, Denied):
            break
    expected = REFERENCE_THRESHOLD + 1
    ok = request == expected
    return CaseResult("collision avoidance: retry limit", ok, f"denied on busy request {request}, expected {expected}")


def check_backoff_timing(threshold: int = REFERENCE_THRESHOLD) -> CaseResult:
    sc = deferral(threshold=threshold)
    trace = run(sc).trace
    slot, difs = sc.access.slot_time, sc.medium.difs
    grants = trace.edges("n2", "access_granted")
    slots = [r.value for r in trace.for_scope("n2") if r.signal == "backoff_val"]
    if not grants or not slots:
        return CaseResult("collision avoidance: backoff", False, "node 2 never backed off")
    grant = grants[0]
    idle_from = max(
        [t for t in trace.edges("n2", "carrier_sense", rising=False) if t <= grant]
        + [r.time for r in trace.for_scope("n2") if r.signal == "nav_reg" and r.value == 0 and r.time <= grant]
    )
    elapsed = grant - idle_from - difs
    ok = elapsed == slots[0] * slot
    return CaseResult("collision avoidance: backoff", ok, f"{elapsed} us after DIFS, backoff_val={slots[0]} slots")


def conform(threshold: int = REFERENCE_THRESHOLD) -> list[CaseResult]:
    trace = run(two_node(threshold=threshold)).trace
    results = [check_subtypes()]
    results += [check_path(trace, stim) for stim in PATHS]
    results.append(check_missing_ack(threshold))
    results.append(check_did())
    results.append(check_busy_carrier())
    results.append(check_retry_limit(threshold))
    results.append(check_backoff_timing(threshold))
    return results
