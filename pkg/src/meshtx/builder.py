"""Frame computing block: Frame Control, Duration/ID, addresses, sequence
control and the check sequence, assembled into a complete frame."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .codec import seal
from .crc import compute_fcs, verify_fcs  # noqa: F401  (re-exported)
from .frames import (
    MGMT_SUBTYPE_PROBE_REQUEST,
    WIRE_TYPES,
    WILDCARD,
    ZERO_ADDRESS,
    Frame,
    FrameControlField,
    FrameKind,
    InvariantViolation,
    MacAddress,
    MeshHeader,
    MissingAddress,
    ReservedKind,
)

DEFAULT_FRAG_THRESHOLD = 2304
MAX_MSDU = 2304


@dataclass(frozen=True)
class NavRegister:
    value: int = 0

    def __post_init__(self):
        if not 0 <= self.value < 1 << 16:
            raise InvariantViolation("NAV register is 16 bits")


class StationRole(enum.Enum):
    AP_ASSOCIATED = "ap"  # an AP, or a station associated with one
    IBSS_MEMBER = "ibss"
    MESH_POINT = "mesh-point"  # single-hop management from an MP


@dataclass(frozen=True)
class BufferDescriptor:
    buff_ptr: int = 0
    da: MacAddress | None = None
    sa: MacAddress | None = None
    bssid: MacAddress | None = None
    ra: MacAddress | None = None
    ta: MacAddress | None = None
    payload: bytes = b""
    mesh_ttl: int = 31
    addr_ext: tuple[MacAddress, ...] = ()
    max_msdu: int = MAX_MSDU

    def __post_init__(self):
        if len(self.payload) > self.max_msdu:
            raise InvariantViolation(f"payload of {len(self.payload)} bytes exceeds {self.max_msdu}")


@dataclass(frozen=True)
class SequenceState:
    seq_counter: int = 0
    frag_counter: int = 0
    frag_threshold: int = DEFAULT_FRAG_THRESHOLD
    mesh_seq: int = 0

    def __post_init__(self):
        if not 0 <= self.seq_counter < 4096 or not 0 <= self.frag_counter < 16:
            raise InvariantViolation("sequence counters out of range")
        if self.frag_threshold < 1:
            raise InvariantViolation("fragmentation threshold must be positive")


@dataclass(frozen=True)
class TxFlags:
    to_ds: int = 0
    from_ds: int = 0
    more_fragments: int = 0
    retry: int = 0
    power_mgmt: int = 0
    more_data: int = 0
    wep: int = 0
    order: int = 0


def build_fch(kind: FrameKind, flags: TxFlags = TxFlags(), mgmt_subtype: int | None = None) -> FrameControlField:
    if kind.reserved:
        raise ReservedKind(f"{kind.value} has no frame control encoding")
    ftype, fsub = WIRE_TYPES[kind]
    if mgmt_subtype is not None:
        if kind is not FrameKind.MGMT_GENERIC:
            raise InvariantViolation("a management subtype only applies to generic management frames")
        fsub = mgmt_subtype
    return FrameControlField(type=ftype, subtype=fsub, **vars(flags))


def compute_did(kind: FrameKind, nav: NavRegister) -> int:
    if kind is FrameKind.PS_POLL:
        return nav.value | 0b11
    if kind is FrameKind.CFP_END:
        return 0b0000000000000001
    return nav.value & ~1 & 0xFFFF


def _need(buf: BufferDescriptor, name: str, kind: FrameKind) -> MacAddress:
    addr = getattr(buf, name)
    if addr is None:
        raise MissingAddress(f"{kind.value} frame needs buffer field {name!r}")
    return addr


def generate_addresses(
    kind: FrameKind,
    buf: BufferDescriptor,
    role: StationRole = StationRole.MESH_POINT,
    probe_request: bool = False,
) -> tuple[MacAddress | None, ...]:
    """Fill addr1..addr4 for ``kind``; absent addresses are None.

    For a probe request ``buf.bssid`` selects a specific BSSID; leaving it
    unset asks for the wildcard.
    """
    if kind.reserved:
        raise ReservedKind(kind.value)
    need = lambda name: _need(buf, name, kind)  # noqa: E731
    if kind is FrameKind.MGMT_GENERIC:
        if probe_request:
            bssid = buf.bssid if buf.bssid is not None else WILDCARD
        elif role is StationRole.MESH_POINT:
            bssid = ZERO_ADDRESS
        else:
            bssid = need("bssid")
        return need("da"), need("sa"), bssid, None
    if kind is FrameKind.MGMT_MULTIHOP_ACTION:
        return need("ra"), need("ta"), need("da"), None
    if kind is FrameKind.DATA:
        return need("ra"), need("ta"), need("da"), need("sa")
    if kind is FrameKind.RTS:
        return need("ra"), need("ta"), None, None
    return need("ra"), None, None, None


def pack_seq_ctl(seq: int, frag: int) -> int:
    return (seq << 4) | frag


def unpack_seq_ctl(seq_ctl: int) -> tuple[int, int]:
    return seq_ctl >> 4, seq_ctl & 0xF


def sequence_control(state: SequenceState, msdu_len: int) -> tuple[int, bool, SequenceState]:
    """Start a new MSDU: bump the sequence counter and reset the fragment
    number. Returns the first fragment's seq_ctl and whether the MSDU must
    be fragmented."""
    if msdu_len <= 0:
        raise ValueError("msdu_len must be positive")
    seq = (state.seq_counter + 1) % 4096
    nxt = replace(state, seq_counter=seq, frag_counter=0)
    return pack_seq_ctl(seq, 0), msdu_len > state.frag_threshold, nxt


def next_fragment(state: SequenceState) -> tuple[int, SequenceState]:
    frag = state.frag_counter + 1
    if frag > 15:
        raise InvariantViolation("fragment number overflow (more than 16 fragments)")
    nxt = replace(state, frag_counter=frag)
    return pack_seq_ctl(state.seq_counter, frag), nxt


def fragment_plan(state: SequenceState, msdu_len: int) -> tuple[list[tuple[int, int, int]], SequenceState]:
    """(seq_ctl, offset, length) for each fragment of one MSDU."""
    seq_ctl, _, state = sequence_control(state, msdu_len)
    step = state.frag_threshold
    count = math.ceil(msdu_len / step)
    plan = [(seq_ctl, 0, min(step, msdu_len))]
    for i in range(1, count):
        seq_ctl, state = next_fragment(state)
        plan.append((seq_ctl, i * step, min(step, msdu_len - i * step)))
    return plan, state


@dataclass(frozen=True)
class BuildResult:
    frame: Frame
    state: SequenceState
    fragments: tuple[Frame, ...] = field(default=())
    frame_done: bool = True

    @property
    def fragment(self) -> bool:
        return len(self.fragments) > 1


def build_frame(
    kind: FrameKind,
    buf: BufferDescriptor,
    nav: NavRegister = NavRegister(),
    state: SequenceState = SequenceState(),
    flags: TxFlags = TxFlags(),
    role: StationRole = StationRole.MESH_POINT,
    mgmt_subtype: int | None = None,
) -> BuildResult:
    """Compose every header entity into a sealed frame.

    Data frames above the fragmentation threshold come back as a burst in
    ``fragments`` (``frame`` is the first one, with More Fragments set).
    """
    probe = kind is FrameKind.MGMT_GENERIC and mgmt_subtype == MGMT_SUBTYPE_PROBE_REQUEST
    a1, a2, a3, a4 = generate_addresses(kind, buf, role, probe_request=probe)
    did = compute_did(kind, nav)
    common = dict(did=did, addr1=a1, addr2=a2, addr3=a3, addr4=a4)

    if kind is FrameKind.DATA:
        plan, state = fragment_plan(state, max(len(buf.payload), 1))
        mesh = MeshHeader.with_extension(buf.addr_ext, ttl=buf.mesh_ttl, mesh_seq=state.mesh_seq)
        state = replace(state, mesh_seq=(state.mesh_seq + 1) % (1 << 32))
        frames = []
        for i, (seq_ctl, off, length) in enumerate(plan):
            more = int(i < len(plan) - 1)
            fch = build_fch(kind, replace(flags, more_fragments=flags.more_fragments | more))
            frames.append(seal(Frame(
                kind=kind, fch=fch, seq_ctl=seq_ctl, mesh_header=mesh,
                body=buf.payload[off:off + length], **common,
            )))
        return BuildResult(frames[0], state, tuple(frames))

    fch = build_fch(kind, flags, mgmt_subtype)
    if kind.is_management:
        f = Frame(kind=kind, fch=fch, seq_ctl=0, body=buf.payload, **common)
    else:
        f = Frame(kind=kind, fch=fch, **common)
    f = seal(f)
    return BuildResult(f, state, (f,))
