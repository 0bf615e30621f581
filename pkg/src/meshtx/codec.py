"""Byte-level frame codec and the TX_LINE serializer.

Wire layout (multi-byte fields little-endian, addresses in octet order)::

    data     FC DID A1 A2 A3 SeqCtl A4 MeshHeader Body FCS
    mgmt     FC DID A1 A2 A3 SeqCtl Body FCS
    rts      FC DID A1 A2 FCS
    others   FC DID A1 FCS

The serializer walks a multiplexer over the header fields in wire order,
loads each field into a 32-bit shift register and clocks it out least
significant bit first.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace

from .crc import compute_fcs, verify_fcs
from .frames import (
    Frame,
    FrameControlField,
    FrameError,
    FrameKind,
    InvariantViolation,
    MacAddress,
    MeshHeader,
    check_structure,
    kind_from_wire,
    mesh_header_length,
)

MIN_FRAME_LEN = 14


class TooShort(FrameError):
    pass


class BadFcs(FrameError):
    pass


def _mesh_header_bytes(mh: MeshHeader) -> bytes:
    out = struct.pack("<BBI", mh.flags, mh.ttl, mh.mesh_seq)
    return out + b"".join(a.octets for a in mh.addr_ext)


class MuxSelect(enum.IntEnum):
    FCH = 0
    DID = 1
    ADDR1 = 2
    ADDR2 = 3
    ADDR3 = 4
    ADDR4 = 5
    FCS = 6
    DATA = 7
    # the wire layout has a sequence control slot the eight named inputs
    # cannot carry; it takes the first spare select value
    SEQ_CTL = 8

    @classmethod
    def from_line(cls, sel: int) -> MuxSelect:
        if not 0 <= sel < 16:
            raise ValueError("select line is 4 bits")
        try:
            return cls(sel)
        except ValueError:
            raise ValueError(f"reserved mux select value {sel}") from None


def mux_fields(f: Frame) -> list[tuple[MuxSelect, bytes]]:
    """Header fields in transmission order, tagged with their mux input."""
    check_structure(f)
    fields = [
        (MuxSelect.FCH, f.fch.pack().to_bytes(2, "little")),
        (MuxSelect.DID, f.did.to_bytes(2, "little")),
        (MuxSelect.ADDR1, f.addr1.octets),
    ]
    if f.addr2 is not None:
        fields.append((MuxSelect.ADDR2, f.addr2.octets))
    if f.addr3 is not None:
        fields.append((MuxSelect.ADDR3, f.addr3.octets))
    if f.seq_ctl is not None:
        fields.append((MuxSelect.SEQ_CTL, f.seq_ctl.to_bytes(2, "little")))
    if f.addr4 is not None:
        fields.append((MuxSelect.ADDR4, f.addr4.octets))
    data = (_mesh_header_bytes(f.mesh_header) if f.mesh_header else b"") + f.body
    if data:
        fields.append((MuxSelect.DATA, data))
    return fields


def encode_header(f: Frame) -> bytes:
    """Everything the FCS covers: all fields except the trailing FCS."""
    return b"".join(chunk for _, chunk in mux_fields(f))


def seal(f: Frame) -> Frame:
    """Return ``f`` with its FCS filled in."""
    return replace(f, fcs=compute_fcs(encode_header(f)))


def encode(f: Frame) -> bytes:
    head = encode_header(f)
    fcs = compute_fcs(head)
    if f.fcs is not None and f.fcs != fcs:
        raise InvariantViolation(f"stored fcs {f.fcs:08x} does not match contents ({fcs:08x})")
    return head + fcs.to_bytes(4, "little")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TooShort(f"need {n} bytes at offset {self.pos}, frame has {len(self.data)}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "little")

    def mac(self) -> MacAddress:
        return MacAddress(self.take(6))

    def rest(self) -> bytes:
        chunk = self.data[self.pos:]
        self.pos = len(self.data)
        return chunk


def decode(data: bytes) -> Frame:
    data = bytes(data)
    if len(data) < MIN_FRAME_LEN:
        raise TooShort(f"{len(data)} bytes is below the {MIN_FRAME_LEN}-byte minimum frame")
    if not verify_fcs(data):
        raise BadFcs("frame check sequence mismatch")
    fcs = int.from_bytes(data[-4:], "little")
    r = _Reader(data[:-4])
    fch = FrameControlField.unpack(r.u16())
    kind = kind_from_wire(fch.type, fch.subtype)
    did = r.u16()
    fields: dict = {"addr1": r.mac()}
    if kind is FrameKind.RTS or kind is FrameKind.DATA or kind.is_management:
        fields["addr2"] = r.mac()
    if kind is FrameKind.DATA or kind.is_management:
        fields["addr3"] = r.mac()
        fields["seq_ctl"] = r.u16()
    if kind is FrameKind.DATA:
        fields["addr4"] = r.mac()
        flags, ttl = r.take(1)[0], r.take(1)[0]
        seq = int.from_bytes(r.take(4), "little")
        ext = tuple(r.mac() for _ in range((mesh_header_length(flags) - 6) // 6))
        fields["mesh_header"] = MeshHeader(flags, ttl, seq, ext)
    body = r.rest()
    if kind.is_control and body:
        raise InvariantViolation(f"{len(body)} trailing bytes after a {kind.value} frame")
    return Frame(kind=kind, fch=fch, did=did, body=body, fcs=fcs, **fields)


def to_hex(data: bytes) -> str:
    return " ".join(f"{b:02x}" for b in data)


def from_hex(text: str) -> bytes:
    return bytes.fromhex("".join(text.split()))


@dataclass(frozen=True)
class TxWord:
    bits: int
    valid_bits: int

    def __post_init__(self):
        if not 1 <= self.valid_bits <= 32:
            raise ValueError("valid_bits must be in [1, 32]")
        if self.bits >> self.valid_bits:
            raise ValueError("unused high bits of a TxWord must be zero")


@dataclass(frozen=True)
class Bitstream:
    bits: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.bits)

    def to_bytes(self) -> bytes:
        if len(self.bits) % 8:
            raise ValueError("bitstream is not byte aligned")
        out = bytearray()
        for i in range(0, len(self.bits), 8):
            out.append(sum(bit << k for k, bit in enumerate(self.bits[i:i + 8])))
        return bytes(out)


def load_words(chunk: bytes) -> list[TxWord]:
    """Split a field into shift-register loads of at most 32 bits."""
    return [
        TxWord(int.from_bytes(chunk[i:i + 4], "little"), 8 * len(chunk[i:i + 4]))
        for i in range(0, len(chunk), 4)
    ]


def shift_out(word: TxWord) -> list[int]:
    reg, out = word.bits, []
    for _ in range(word.valid_bits):
        out.append(reg & 1)
        reg >>= 1
    return out


def serialize_tx(f: Frame) -> Bitstream:
    encode(f)  # rejects a stale fcs
    if f.fcs is None:
        f = seal(f)
    schedule = mux_fields(f) + [(MuxSelect.FCS, f.fcs.to_bytes(4, "little"))]
    bits: list[int] = []
    for sel, chunk in schedule:
        MuxSelect.from_line(int(sel))
        for word in load_words(chunk):
            bits.extend(shift_out(word))
    return Bitstream(tuple(bits))
