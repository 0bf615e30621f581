"""Deterministic discrete-event medium connecting transmitter instances.

One shared channel, every node in range of every other, zero propagation
delay. A transmission occupies the medium for ``bits / bitrate`` and is
corrupted if it overlaps any other transmission. Frames that arrive intact
are decoded by every other node: the addressee gets the matching stimulus
one SIFS later, everyone else updates its NAV from the Duration/ID field.

Events are ordered by (time, phase, node id, insertion order). A new
transmission becomes audible to the other nodes in a second phase of its
start instant, after every MAC decision taken at that instant, so two
nodes that both decide to send in the same slot collide.
"""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from . import rng as _rng
from . import txcontrol as tx
from .access import (
    AccessMode,
    Denied,
    Granted,
    NavTimer,
    RetryCounter,
    Wait,
    backoff_val,
    contention_window,
    request_access,
    update_nav,
)
from .builder import BufferDescriptor, NavRegister, SequenceState, build_frame
from .codec import decode, encode, seal, serialize_tx
from .frames import Frame, FrameKind, MacAddress
from .scenario import ConfigError, Scenario, TrafficItem, validate
from .trace import Trace, TraceRecord

log = logging.getLogger(__name__)

# per-kind frame lengths (bytes) for airtime planning; data adds its body
_CTRL_LEN = {FrameKind.RTS: 20, FrameKind.CTS: 14, FrameKind.ACK: 14}
_DATA_OVERHEAD = 40  # FC DID A1 A2 A3 SeqCtl A4 MeshHeader(AE=0) FCS
_MAX_DID = 0x7FFE

# signals latched until the end-of-exchange reset
_LATCHED = (
    "msdurdy", "rec_data", "rec_cts", "rec_rts", "rec_ack", "en_buildframe",
    "frame_done", "en_medium", "access_granted", "transmitted",
    "transmit_complete", "en_retry", "en_backoff", "start_count",
)
_STIMULUS_SIGNAL = {
    FrameKind.RTS: "rec_rts",
    FrameKind.CTS: "rec_cts",
    FrameKind.DATA: "rec_data",
    FrameKind.ACK: "rec_ack",
}
_RESPONSE = {FrameKind.RTS: FrameKind.CTS, FrameKind.DATA: FrameKind.ACK}


class SimulationComplete(Exception):
    """Raised by :meth:`Medium.step` once the event queue is empty."""


@dataclass(eq=False)
class Transmission:
    sender: int
    frame: Frame
    bits: int
    start: int
    end: int
    corrupted: bool = False
    wire: bytes = b""
    sensed: bool = False


@dataclass
class Backoff:
    remaining: int
    counting_since: int | None = None
    difs_pending: bool = False
    token: int = 0


@dataclass
class NodeReport:
    id: int
    mac: str
    offered: int = 0
    delivered: int = 0
    failed: int = 0
    retries: int = 0
    collisions: int = 0
    received: int = 0
    unexpected: int = 0

    @property
    def in_flight(self) -> int:
        return self.offered - self.delivered - self.failed

    def to_json(self) -> dict:
        return {
            "id": self.id, "mac": self.mac, "offered": self.offered,
            "delivered": self.delivered, "failed": self.failed,
            "in_flight": self.in_flight, "retries": self.retries,
            "collisions": self.collisions, "received": self.received,
            "unexpected": self.unexpected,
        }


@dataclass
class Node:
    cfg: Any
    scope: str
    rng: int
    fsm: tx.TxControl = field(default_factory=tx.TxControl)
    rc: RetryCounter = field(default_factory=RetryCounter)
    nav: NavTimer = field(default_factory=NavTimer)
    seq: SequenceState = field(default_factory=SequenceState)
    queue: deque = field(default_factory=deque)
    current: TrafficItem | None = None
    peer: MacAddress | None = None
    peer_did: int = 0
    tx_frame: Frame | None = None
    retrying: bool = False
    backoff: Backoff | None = None
    timer_token: int = 0
    report: NodeReport = None

    @property
    def id(self) -> int:
        return self.cfg.id

    @property
    def mac(self) -> MacAddress:
        return self.cfg.mac


@dataclass
class SimReport:
    scenario: str
    seed: int
    horizon: int
    end_time: int
    nodes: list[NodeReport]
    trace: Trace

    def node(self, node_id: int) -> NodeReport:
        return next(n for n in self.nodes if n.id == node_id)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "horizon": self.horizon,
            "end_time": self.end_time,
            "rng": _rng.NAME,
            "trace_records": len(self.trace),
            "nodes": [n.to_json() for n in self.nodes],
        }


class Medium:
    def __init__(self, scenario: Scenario):
        self.sc = validate(scenario)
        self.now = 0
        self.trace = Trace(metadata={"rng": _rng.NAME, "seed": str(self.sc.seed)})
        self.bp = self.sc.access.backoff(self.sc.seed)
        self._queue: list = []
        self._counter = 0
        self._tokens = 0
        self.active: list[Transmission] = []
        self.history: list[Transmission] = []
        self.nodes: dict[int, Node] = {}
        for cfg in sorted(self.sc.nodes, key=lambda n: n.id):
            node = Node(
                cfg=cfg, scope=f"n{cfg.id}",
                rng=_rng.derive_seed(self.sc.seed, cfg.id),
                rc=RetryCounter(0, self.sc.access.threshold),
                report=NodeReport(cfg.id, str(cfg.mac)),
            )
            self.nodes[cfg.id] = node
            for item in cfg.traffic:
                self._schedule(item.time, cfg.id, self._on_msdu, node, item)
        for node in self.nodes.values():
            self._rec(node, "carrier_sense", 0)

    # event queue

    def _schedule(self, t: int, node_id: int, handler: Callable, *args, phase: int = 0) -> None:
        heapq.heappush(self._queue, (t, phase, node_id, self._counter, handler, args))
        self._counter += 1

    def _token(self) -> int:
        self._tokens += 1
        return self._tokens

    def step(self) -> list[TraceRecord]:
        if not self._queue:
            raise SimulationComplete()
        t, _, _, _, handler, args = heapq.heappop(self._queue)
        if t < self.now:
            raise AssertionError("event scheduled in the past")
        self.now = t
        start = len(self.trace)
        handler(*args)
        return self.trace.records[start:]

    def run(self, horizon: int | None = None) -> SimReport:
        horizon = self.sc.horizon if horizon is None else horizon
        while self._queue and self._queue[0][0] <= horizon:
            self.step()
        return SimReport(
            scenario=self.sc.name, seed=self.sc.seed, horizon=horizon,
            end_time=self.trace.records[-1].time if self.trace.records else 0,
            nodes=[n.report for n in self.nodes.values()], trace=self.trace,
        )

    # physical layer

    def airtime(self, nbytes: int) -> int:
        return -(-nbytes * 8 * 1_000_000 // self.sc.medium.bitrate)

    def carrier_sense(self, node_id: int, now: int | None = None) -> int:
        now = self.now if now is None else now
        return int(any(
            tr.sender != node_id and tr.start <= now < tr.end for tr in self.active
        ))

    def _busy(self, node_id: int) -> int:
        # what the MAC sees: transmissions already audible at this instant
        return int(any(tr.sender != node_id and tr.sensed for tr in self.active))

    def _idle(self, node: Node) -> bool:
        return not self._busy(node.id) and node.nav.remaining(self.now) == 0

    def _rec(self, node: Node, signal: str, value) -> None:
        self.trace.record(self.now, node.scope, signal, value)

    def _refresh_carrier(self) -> None:
        for node in self.nodes.values():
            self._rec(node, "carrier_sense", self._busy(node.id))
            self._medium_changed(node)

    # fsm plumbing

    def _feed(self, node: Node, ev) -> None:
        try:
            actions = node.fsm.feed(ev)
        except tx.UnexpectedEvent as exc:
            node.report.unexpected += 1
            log.debug("t=%d %s: %s", self.now, node.scope, exc)
            return
        for action in actions:
            self._act(node, action)
        if node.fsm.state.terminal:
            self._finish(node)
        else:
            self._serve(node)

    def _act(self, node: Node, action) -> None:
        if isinstance(action, tx.EnBuildFrame):
            self._rec(node, "en_buildframe", 1)
            self._rec(node, "frame_subtype", action.code)
            node.tx_frame = self._build(node, action.kind)
            node.retrying = False
            self._rec(node, "frame_done", 1)
            self._feed(node, tx.FrameDone())
        elif isinstance(action, tx.EnMedium):
            self._rec(node, "en_medium", 1)
            self._access(node, AccessMode.INITIAL)
        elif isinstance(action, tx.EnRetry):
            self._rec(node, "en_retry", 1)
            f = node.tx_frame
            node.tx_frame = seal(replace(f, fch=replace(f.fch, retry=1), fcs=None))
            node.retrying = True
            self._access(node, AccessMode.RETRY)
        elif isinstance(action, tx.Transmitted):
            self._rec(node, "transmitted", 1)
            self._start_tx(node)
        elif isinstance(action, tx.ResetAll):
            self._reset_signals(node)
            self._arm_timer(node)

    def _reset_signals(self, node: Node) -> None:
        for signal in _LATCHED:
            if self.trace.value(node.scope, signal):
                self._rec(node, signal, 0)

    def _finish(self, node: Node) -> None:
        state = node.fsm.state
        if state.phase is tx.Phase.DONE and node.current is not None:
            node.report.delivered += 1
            node.current = None
        elif state.phase is tx.Phase.FAILED:
            if node.current is not None and state.kind in (FrameKind.RTS, FrameKind.DATA):
                node.report.failed += 1
                node.current = None
        self._reset_signals(node)
        node.fsm.reset()
        node.rc = node.rc.reset()
        node.backoff = None
        node.retrying = False
        self._serve(node)

    def _serve(self, node: Node) -> None:
        if node.fsm.state.phase is tx.Phase.IDLE and node.current is None and node.queue:
            node.current = node.queue.popleft()
            self._rec(node, "msdurdy", 1)
            self._feed(node, tx.Msdurdy(node.current))

    def _on_msdu(self, node: Node, item: TrafficItem) -> None:
        node.report.offered += 1
        node.queue.append(item)
        self._serve(node)

    # frame computing

    def _data_len(self, payload: bytes) -> int:
        return _DATA_OVERHEAD + len(payload)

    def _build(self, node: Node, kind: FrameKind) -> Frame:
        sifs = self.sc.medium.sifs
        if kind is FrameKind.RTS:
            dest = self.nodes[node.current.dest].mac
            buf = BufferDescriptor(ra=dest, ta=node.mac)
            dur = (3 * sifs + self.airtime(_CTRL_LEN[FrameKind.CTS])
                   + self.airtime(self._data_len(node.current.payload))
                   + self.airtime(_CTRL_LEN[FrameKind.ACK]))
        elif kind is FrameKind.CTS:
            buf = BufferDescriptor(ra=node.peer)
            dur = node.peer_did - sifs - self.airtime(_CTRL_LEN[FrameKind.CTS])
        elif kind is FrameKind.DATA:
            dest = self.nodes[node.current.dest].mac
            buf = BufferDescriptor(ra=dest, ta=node.mac, da=dest, sa=node.mac, payload=node.current.payload)
            dur = sifs + self.airtime(_CTRL_LEN[FrameKind.ACK])
        else:
            buf = BufferDescriptor(ra=node.peer)
            dur = 0
        # the NAV register input is loaded with the reservation to advertise
        nav = NavRegister(max(0, min(dur, _MAX_DID)))
        result = build_frame(kind, buf, nav, node.seq)
        node.seq = result.state
        return result.frame

    # allocation control

    def _access(self, node: Node, mode: AccessMode) -> None:
        before = node.rc.attempts
        outcome, node.rc, node.rng = request_access(
            mode, node.nav.register(self.now), self._busy(node.id), node.rc, self.bp, node.rng,
        )
        if node.rc.attempts != before:
            self._rec(node, "start_count", 1)
        if (isinstance(outcome, Granted) and mode is AccessMode.RETRY
                and self.sc.access.retry_backoff):
            slots, node.rng = backoff_val(node.rc.attempts, self.bp, node.rng)
            outcome = Wait(slots, contention_window(node.rc.attempts, self.bp))
        if isinstance(outcome, Granted):
            self._grant(node)
        elif isinstance(outcome, Denied):
            self._rec(node, "access_granted", 0)
            self._feed(node, tx.AccessGranted(False))
        else:
            self._rec(node, "en_backoff", 1)
            self._rec(node, "backoff_val", outcome.backoff_val)
            node.backoff = Backoff(outcome.backoff_val)
            self._medium_changed(node)

    def _grant(self, node: Node) -> None:
        node.backoff = None
        self._rec(node, "access_granted", 1)
        self._feed(node, tx.AccessGranted(True))

    def _medium_changed(self, node: Node) -> None:
        bo = node.backoff
        if bo is None:
            return
        idle = self._idle(node)
        if idle and bo.counting_since is None and not bo.difs_pending:
            bo.difs_pending = True
            bo.token = self._token()
            self._schedule(self.now + self.sc.medium.difs, node.id, self._on_difs, node, bo.token)
        elif not idle and (bo.difs_pending or bo.counting_since is not None):
            if bo.counting_since is not None:
                elapsed = (self.now - bo.counting_since) // self.bp.slot_time
                bo.remaining = max(0, bo.remaining - elapsed)
            bo.counting_since = None
            bo.difs_pending = False
            bo.token = self._token()

    def _on_difs(self, node: Node, token: int) -> None:
        bo = node.backoff
        if bo is None or bo.token != token:
            return
        bo.difs_pending = False
        bo.counting_since = self.now
        bo.token = self._token()
        self._schedule(self.now + bo.remaining * self.bp.slot_time, node.id, self._on_backoff_done, node, bo.token)

    def _on_backoff_done(self, node: Node, token: int) -> None:
        bo = node.backoff
        if bo is None or bo.token != token:
            return
        if self._idle(node):
            self._grant(node)
        else:
            node.backoff = None
            self._access(node, AccessMode.INITIAL)

    def _on_nav_expire(self, node: Node) -> None:
        if node.nav.expiry != self.now:
            return  # superseded by a later update
        self._rec(node, "nav_reg", node.nav.register(self.now).value)
        self._medium_changed(node)

    # transmission

    def _start_tx(self, node: Node) -> None:
        self.transmit(node.id, node.tx_frame)

    def transmit(self, node_id: int, frame: Frame) -> Transmission:
        """Put ``frame`` on the air from ``node_id`` starting now."""
        node = self.nodes[node_id]
        wire = encode(frame)
        bits = serialize_tx(frame)
        end = self.now + self.airtime(len(wire))
        tr = Transmission(node.id, frame, len(bits), self.now, end, wire=wire)
        for other in self.active:
            if other.start < end and self.now < other.end:
                for hit in (tr, other):
                    if not hit.corrupted:
                        hit.corrupted = True
                        self.nodes[hit.sender].report.collisions += 1
        if node.retrying:
            node.report.retries += 1
        self.active.append(tr)
        self.history.append(tr)
        if self.sc.medium.trace_tx_line:
            self._trace_bits(node, bits.bits)
        self._schedule(self.now, node.id, self._on_audible, tr, phase=1)
        self._schedule(end, node.id, self._on_tx_end, tr)
        return tr

    def _on_audible(self, tr: Transmission) -> None:
        if tr in self.active:
            tr.sensed = True
            self._refresh_carrier()

    def _trace_bits(self, node: Node, bits) -> None:
        # only the first bit lands at "now"; the rest go out at their bit times
        per_bit = 1_000_000 / self.sc.medium.bitrate
        for i, bit in enumerate(bits):
            self._schedule(self.now + int(i * per_bit), node.id, self._rec, node, "tx_line", bit)
        self._schedule(self.now + int(len(bits) * per_bit), node.id, self._rec, node, "tx_line", 0)

    def _on_tx_end(self, tr: Transmission) -> None:
        self.active.remove(tr)
        self._refresh_carrier()
        sender = self.nodes[tr.sender]
        if not tr.corrupted:
            frame = decode(tr.wire)
            for node in self.nodes.values():
                if node is sender:
                    continue
                if frame.addr1 == node.mac:
                    self._schedule(self.now + self.sc.medium.sifs, node.id, self._on_rx, node, frame)
                else:
                    self._overhear(node, frame)
        self._rec(sender, "transmit_complete", 1)
        self._feed(sender, tx.TransmitComplete())

    def _overhear(self, node: Node, frame: Frame) -> None:
        if frame.kind is FrameKind.PS_POLL or frame.did & 0x8000:
            return  # association ID, not a duration
        nav = update_nav(node.nav, frame.did, self.now)
        if nav != node.nav:
            node.nav = nav
            self._rec(node, "nav_reg", nav.register(self.now).value)
            self._schedule(nav.expiry, node.id, self._on_nav_expire, node)
            self._medium_changed(node)

    def _on_rx(self, node: Node, frame: Frame) -> None:
        kind = frame.kind
        if kind in _RESPONSE and _RESPONSE[kind] in node.cfg.mute:
            return
        signal = _STIMULUS_SIGNAL.get(kind)
        if signal is None:
            return
        phase = node.fsm.state.phase
        if kind is FrameKind.RTS:
            if phase is not tx.Phase.IDLE:
                node.report.unexpected += 1
                return
            if node.nav.remaining(self.now):
                return  # reserved by a third party: no CTS
            node.peer, node.peer_did = frame.addr2, frame.did
            ev = tx.RecRts(frame.addr2)
        elif kind is FrameKind.CTS:
            ev = tx.RecCts()
        elif kind is FrameKind.DATA:
            node.peer = frame.addr2
            ev = tx.RecData(frame)
        else:
            ev = tx.RecAck()
        expected = {
            tx.Phase.IDLE: (FrameKind.RTS, FrameKind.DATA),
            tx.Phase.WAIT_DATA: (FrameKind.DATA,),
            tx.Phase.WAIT_CTS: (FrameKind.CTS,),
            tx.Phase.WAIT_ACK: (FrameKind.ACK,),
        }.get(phase, ())
        if kind in expected:
            node.timer_token += 1  # cancels the pending timeout
            self._rec(node, signal, 1)
            if kind is FrameKind.DATA:
                node.report.received += 1
        self._feed(node, ev)

    def _arm_timer(self, node: Node) -> None:
        phase = node.fsm.state.phase
        m = self.sc.medium
        if phase is tx.Phase.WAIT_CTS:
            kind, wait = tx.TimeoutKind.CTS, m.sifs + self.airtime(_CTRL_LEN[FrameKind.CTS])
        elif phase is tx.Phase.WAIT_ACK:
            kind, wait = tx.TimeoutKind.ACK, m.sifs + self.airtime(_CTRL_LEN[FrameKind.ACK])
        elif phase is tx.Phase.WAIT_DATA:
            kind, wait = tx.TimeoutKind.DATA, m.sifs + self.airtime(_DATA_OVERHEAD + 2304)
        else:
            return
        node.timer_token += 1
        self._schedule(self.now + m.timeout_factor * wait, node.id, self._on_timeout, node, node.timer_token, kind)

    def _on_timeout(self, node: Node, token: int, kind: tx.TimeoutKind) -> None:
        if token != node.timer_token:
            return
        self._feed(node, tx.Timeout(kind))


def run(scenario: Scenario, horizon: int | None = None) -> SimReport:
    return Medium(scenario).run(horizon)


__all__ = ["Medium", "SimReport", "NodeReport", "Transmission", "SimulationComplete", "run", "ConfigError"]
