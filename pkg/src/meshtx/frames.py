"""Frame vocabulary shared by every part of the transmitter model.

The 6-bit ``frame_subtype`` codes the transmission-control FSM hands to the
frame computing block are opaque constants. They are *not* the standard
802.11 (type, subtype) pair, which travels separately in the Frame Control
field.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class FrameError(ValueError):
    """Base class for frame construction and parsing errors."""


class ReservedKind(FrameError):
    pass


class UnknownSubtype(FrameError):
    pass


class InvariantViolation(FrameError):
    pass


class MissingAddress(FrameError):
    pass


class FrameKind(enum.Enum):
    DATA = "data"
    ACK = "ack"
    CTS = "cts"
    RTS = "rts"
    PS_POLL = "ps-poll"
    CFP_END = "cfp-end"
    MGMT_GENERIC = "mgmt"
    MGMT_MULTIHOP_ACTION = "mgmt-multihop-action"
    RTX = "rtx"  # backhaul channel switch request, no wire format
    CTX = "ctx"

    @property
    def is_control(self) -> bool:
        return self in CONTROL_KINDS

    @property
    def is_management(self) -> bool:
        return self in (FrameKind.MGMT_GENERIC, FrameKind.MGMT_MULTIHOP_ACTION)

    @property
    def reserved(self) -> bool:
        return self in (FrameKind.RTX, FrameKind.CTX)


CONTROL_KINDS = frozenset(
    {FrameKind.ACK, FrameKind.CTS, FrameKind.RTS, FrameKind.PS_POLL, FrameKind.CFP_END}
)

# frame_subtype values driven by the transmission control block
SUBTYPE_CODES: dict[FrameKind, int] = {
    FrameKind.ACK: 0b101011,
    FrameKind.DATA: 0b010000,
    FrameKind.CTS: 0b010011,
    FrameKind.RTS: 0b101101,
    FrameKind.PS_POLL: 0b100101,
    FrameKind.CFP_END: 0b010110,
}

TYPE_MGMT = 0b00
TYPE_CTRL = 0b01
TYPE_DATA = 0b10

MGMT_SUBTYPE_PROBE_REQUEST = 0b0100
MGMT_SUBTYPE_ACTION = 0b1101
MGMT_SUBTYPE_MULTIHOP_ACTION = 0b1111

# standard 802.11 (type, subtype) carried in the Frame Control field
WIRE_TYPES: dict[FrameKind, tuple[int, int]] = {
    FrameKind.DATA: (TYPE_DATA, 0b0000),
    FrameKind.PS_POLL: (TYPE_CTRL, 0b1010),
    FrameKind.RTS: (TYPE_CTRL, 0b1011),
    FrameKind.CTS: (TYPE_CTRL, 0b1100),
    FrameKind.ACK: (TYPE_CTRL, 0b1101),
    FrameKind.CFP_END: (TYPE_CTRL, 0b1110),
    FrameKind.MGMT_GENERIC: (TYPE_MGMT, MGMT_SUBTYPE_ACTION),
    FrameKind.MGMT_MULTIHOP_ACTION: (TYPE_MGMT, MGMT_SUBTYPE_MULTIHOP_ACTION),
}


def subtype_code(kind: FrameKind) -> int:
    """Return the 6-bit ``frame_subtype`` constant for ``kind``.

    Only the six kinds the transmission control block can request have a
    code; RTX/CTX and the management kinds raise :class:`ReservedKind`.
    """
    try:
        return SUBTYPE_CODES[kind]
    except KeyError:
        raise ReservedKind(f"no frame_subtype code defined for {kind.value}") from None


def classify(code: int) -> FrameKind:
    for kind, known in SUBTYPE_CODES.items():
        if known == code:
            return kind
    raise UnknownSubtype(f"unknown frame_subtype {code:06b}" if 0 <= code < 64 else f"bad code {code}")


def kind_from_wire(ftype: int, fsubtype: int) -> FrameKind:
    if ftype == TYPE_MGMT:
        if fsubtype == MGMT_SUBTYPE_MULTIHOP_ACTION:
            return FrameKind.MGMT_MULTIHOP_ACTION
        return FrameKind.MGMT_GENERIC
    for kind, pair in WIRE_TYPES.items():
        if pair == (ftype, fsubtype) and not kind.is_management:
            return kind
    raise UnknownSubtype(f"unsupported type/subtype {ftype:02b}/{fsubtype:04b}")


def format_code(code: int) -> str:
    return f"{code:06b}"


@dataclass(frozen=True)
class MacAddress:
    octets: bytes

    def __post_init__(self):
        if len(self.octets) != 6:
            raise InvariantViolation(f"MAC address needs 6 octets, got {len(self.octets)}")

    @classmethod
    def parse(cls, text: str) -> MacAddress:
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6:
            raise ValueError(f"malformed MAC address {text!r}")
        try:
            return cls(bytes(int(p, 16) for p in parts))
        except ValueError:
            raise ValueError(f"malformed MAC address {text!r}") from None

    @property
    def is_wildcard(self) -> bool:
        return self.octets == b"\xff" * 6

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)


WILDCARD = MacAddress(b"\xff" * 6)
ZERO_ADDRESS = MacAddress(bytes(6))


@dataclass(frozen=True)
class FrameControlField:
    type: int
    subtype: int
    to_ds: int = 0
    from_ds: int = 0
    more_fragments: int = 0
    retry: int = 0
    power_mgmt: int = 0
    more_data: int = 0
    wep: int = 0
    order: int = 0
    protocol_version: int = 0

    FLAG_NAMES = (
        "to_ds", "from_ds", "more_fragments", "retry",
        "power_mgmt", "more_data", "wep", "order",
    )

    def __post_init__(self):
        if self.protocol_version != 0:
            raise InvariantViolation("protocol version must be 00")
        if not 0 <= self.type < 4 or not 0 <= self.subtype < 16:
            raise InvariantViolation("type/subtype out of range")
        for name in self.FLAG_NAMES:
            if getattr(self, name) not in (0, 1):
                raise InvariantViolation(f"{name} must be a single bit")

    def pack(self) -> int:
        """16-bit word: b0-1 version, b2-3 type, b4-7 subtype, b8-15 flags."""
        word = self.protocol_version | (self.type << 2) | (self.subtype << 4)
        for i, name in enumerate(self.FLAG_NAMES):
            word |= getattr(self, name) << (8 + i)
        return word

    @classmethod
    def unpack(cls, word: int) -> FrameControlField:
        if not 0 <= word < 1 << 16:
            raise InvariantViolation("frame control word is 16 bits")
        flags = {name: (word >> (8 + i)) & 1 for i, name in enumerate(cls.FLAG_NAMES)}
        return cls(
            protocol_version=word & 0b11,
            type=(word >> 2) & 0b11,
            subtype=(word >> 4) & 0b1111,
            **flags,
        )


def mesh_header_length(flags: int) -> int:
    """Packed mesh header size in bytes for a Mesh Flags octet."""
    return 6 + 6 * (flags & 0b11)


@dataclass(frozen=True)
class MeshHeader:
    flags: int = 0
    ttl: int = 31
    mesh_seq: int = 0
    addr_ext: tuple[MacAddress, ...] = ()

    def __post_init__(self):
        if not 0 <= self.flags < 256 or self.flags & ~0b11:
            raise InvariantViolation("mesh flags: only the 2-bit address extension mode may be set")
        if not 0 <= self.ttl < 256:
            raise InvariantViolation("ttl is one octet")
        if not 0 <= self.mesh_seq < 1 << 32:
            raise InvariantViolation("mesh sequence number is 32 bits")
        if len(self.addr_ext) != self.address_extension:
            raise InvariantViolation(
                f"AE={self.address_extension} needs {self.address_extension} extension addresses"
            )

    @classmethod
    def with_extension(cls, addrs=(), **kw) -> MeshHeader:
        addrs = tuple(addrs)
        return cls(flags=len(addrs), addr_ext=addrs, **kw)

    @property
    def address_extension(self) -> int:
        return self.flags & 0b11

    def __len__(self) -> int:
        return mesh_header_length(self.flags)

    def decrement_ttl(self) -> MeshHeader:
        return MeshHeader(self.flags, max(self.ttl - 1, 0), self.mesh_seq, self.addr_ext)


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    fch: FrameControlField
    did: int = 0
    addr1: MacAddress | None = None
    addr2: MacAddress | None = None
    addr3: MacAddress | None = None
    addr4: MacAddress | None = None
    seq_ctl: int | None = None
    mesh_header: MeshHeader | None = None
    body: bytes = b""
    fcs: int | None = field(default=None, compare=True)

    def __post_init__(self):
        check_structure(self)

    @property
    def addresses(self) -> tuple[MacAddress | None, ...]:
        return (self.addr1, self.addr2, self.addr3, self.addr4)


# which of addr1..addr4 must be present, per kind
ADDRESS_SHAPE: dict[FrameKind, tuple[bool, bool, bool, bool]] = {
    FrameKind.DATA: (True, True, True, True),
    FrameKind.MGMT_GENERIC: (True, True, True, False),
    FrameKind.MGMT_MULTIHOP_ACTION: (True, True, True, False),
    FrameKind.RTS: (True, True, False, False),
    FrameKind.CTS: (True, False, False, False),
    FrameKind.ACK: (True, False, False, False),
    FrameKind.PS_POLL: (True, False, False, False),
    FrameKind.CFP_END: (True, False, False, False),
}


def check_structure(f: Frame) -> None:
    if f.kind.reserved:
        raise ReservedKind(f"{f.kind.value} frames have no wire format")
    ftype, fsub = f.fch.type, f.fch.subtype
    if kind_from_wire(ftype, fsub) is not f.kind:
        raise InvariantViolation(f"frame control {ftype:02b}/{fsub:04b} does not describe {f.kind.value}")
    if not 0 <= f.did < 1 << 16:
        raise InvariantViolation("duration/ID is 16 bits")
    shape = ADDRESS_SHAPE[f.kind]
    for i, (want, addr) in enumerate(zip(shape, f.addresses), start=1):
        if want and addr is None:
            raise MissingAddress(f"{f.kind.value} frame needs addr{i}")
        if not want and addr is not None:
            raise InvariantViolation(f"{f.kind.value} frame carries no addr{i}")
    has_seq = f.kind is FrameKind.DATA or f.kind.is_management
    if has_seq != (f.seq_ctl is not None):
        raise InvariantViolation(f"sequence control presence wrong for {f.kind.value}")
    if f.seq_ctl is not None and not 0 <= f.seq_ctl < 1 << 16:
        raise InvariantViolation("sequence control is 16 bits")
    if (f.kind is FrameKind.DATA) != (f.mesh_header is not None):
        raise InvariantViolation("mesh header is carried by data frames only")
    if f.kind.is_control and f.body:
        raise InvariantViolation("control frames have an empty body")
    if f.fcs is not None and not 0 <= f.fcs < 1 << 32:
        raise InvariantViolation("fcs is 32 bits")
