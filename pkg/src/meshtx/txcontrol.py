"""Transmission control FSM.

Purely reactive: ``handle_event(state, event)`` returns the next state and
the ordered action signals to raise. The four stimulus paths:

    msdurdy  -> build RTS  -> ... -> WAIT_CTS
    rec_cts  -> build DATA -> ... -> WAIT_ACK  (rec_ack -> DONE, timeout -> en_retry)
    rec_rts  -> build CTS  -> ... -> WAIT_DATA
    rec_data -> build ACK  -> ... -> DONE

where ``...`` is the shared handshake
en_buildframe, frame_done, en_medium, access_granted, transmitted,
transmit_complete, reset.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any

from .frames import FrameKind, subtype_code

log = logging.getLogger(__name__)


class UnexpectedEvent(Exception):
    def __init__(self, state: TxState, event: Any):
        super().__init__(f"{event!r} not accepted in {state}")
        self.state = state
        self.event = event


class Phase(enum.Enum):
    IDLE = "idle"
    BUILDING = "building"
    WAITING_MEDIUM = "waiting-medium"
    TRANSMITTING = "transmitting"
    WAIT_CTS = "wait-cts"
    WAIT_ACK = "wait-ack"
    WAIT_DATA = "wait-data"
    FAILED = "failed"
    DONE = "done"


@dataclass(frozen=True)
class TxState:
    phase: Phase = Phase.IDLE
    kind: FrameKind | None = None

    def __str__(self) -> str:
        return self.phase.value if self.kind is None else f"{self.phase.value}({self.kind.value})"

    @property
    def terminal(self) -> bool:
        return self.phase in (Phase.FAILED, Phase.DONE)


IDLE = TxState()


class TimeoutKind(enum.Enum):
    CTS = "cts-timeout"
    ACK = "ack-timeout"
    DATA = "data-timeout"  # responder gave up waiting after sending CTS


# stimulus events


@dataclass(frozen=True)
class Msdurdy:
    buf: Any = None


@dataclass(frozen=True)
class RecRts:
    src: Any = None


@dataclass(frozen=True)
class RecCts:
    pass


@dataclass(frozen=True)
class RecData:
    frame: Any = None


@dataclass(frozen=True)
class RecAck:
    pass


@dataclass(frozen=True)
class FrameDone:
    pass


@dataclass(frozen=True)
class AccessGranted:
    granted: bool = True


@dataclass(frozen=True)
class TransmitComplete:
    pass


@dataclass(frozen=True)
class Timeout:
    kind: TimeoutKind


StimulusEvent = Msdurdy | RecRts | RecCts | RecData | RecAck | FrameDone | AccessGranted | TransmitComplete | Timeout


# action signals


@dataclass(frozen=True)
class EnBuildFrame:
    code: int
    kind: FrameKind = field(compare=False, default=None)


@dataclass(frozen=True)
class EnMedium:
    pass


@dataclass(frozen=True)
class EnRetry:
    pass


@dataclass(frozen=True)
class Transmitted:
    pass


@dataclass(frozen=True)
class ResetAll:
    pass


ActionSignal = EnBuildFrame | EnMedium | EnRetry | Transmitted | ResetAll

# after a frame of this kind goes out, where the machine waits next
_AFTER_TX = {
    FrameKind.RTS: TxState(Phase.WAIT_CTS),
    FrameKind.DATA: TxState(Phase.WAIT_ACK),
    FrameKind.CTS: TxState(Phase.WAIT_DATA),
    FrameKind.ACK: TxState(Phase.DONE),
}


def _build(kind: FrameKind) -> tuple[TxState, list]:
    return TxState(Phase.BUILDING, kind), [EnBuildFrame(subtype_code(kind), kind)]


def handle_event(state: TxState, ev) -> tuple[TxState, list]:
    """Advance the FSM by one stimulus.

    Raises UnexpectedEvent (state is left as it was) for any pair outside
    the transition table.
    """
    phase, kind = state.phase, state.kind

    if phase is Phase.IDLE:
        if isinstance(ev, Msdurdy):
            return _build(FrameKind.RTS)
        if isinstance(ev, RecRts):
            return _build(FrameKind.CTS)
        if isinstance(ev, RecData):
            return _build(FrameKind.ACK)
    elif phase is Phase.WAIT_CTS:
        if isinstance(ev, RecCts):
            return _build(FrameKind.DATA)
        if isinstance(ev, Timeout) and ev.kind is TimeoutKind.CTS:
            return TxState(Phase.WAITING_MEDIUM, FrameKind.RTS), [EnRetry()]
    elif phase is Phase.WAIT_ACK:
        if isinstance(ev, RecAck):
            return TxState(Phase.DONE), []
        if isinstance(ev, Timeout) and ev.kind is TimeoutKind.ACK:
            return TxState(Phase.WAITING_MEDIUM, FrameKind.DATA), [EnRetry()]
    elif phase is Phase.WAIT_DATA:
        if isinstance(ev, RecData):
            return _build(FrameKind.ACK)
        if isinstance(ev, Timeout) and ev.kind is TimeoutKind.DATA:
            return IDLE, []
    elif phase is Phase.BUILDING:
        if isinstance(ev, FrameDone):
            return TxState(Phase.WAITING_MEDIUM, kind), [EnMedium()]
    elif phase is Phase.WAITING_MEDIUM:
        if isinstance(ev, AccessGranted):
            if ev.granted:
                return TxState(Phase.TRANSMITTING, kind), [Transmitted()]
            return TxState(Phase.FAILED, kind), []
    elif phase is Phase.TRANSMITTING:
        if isinstance(ev, TransmitComplete):
            return _AFTER_TX[kind], [ResetAll()]

    raise UnexpectedEvent(state, ev)


def reset(state: TxState) -> TxState:
    return IDLE


class TxControl:
    """Stateful wrapper around :func:`handle_event` for one transmitter."""

    def __init__(self):
        self.state = IDLE
        self.history: list[tuple[Any, list]] = []

    def feed(self, ev) -> list:
        try:
            self.state, actions = handle_event(self.state, ev)
        except UnexpectedEvent as exc:
            log.debug("%s", exc)
            raise
        self.history.append((ev, actions))
        return actions

    def reset(self) -> None:
        self.state = reset(self.state)
