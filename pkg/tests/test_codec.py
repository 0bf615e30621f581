import pytest
from hypothesis import given, settings, strategies as st

from meshtx.builder import BufferDescriptor, NavRegister, build_frame
from meshtx.codec import (
    BadFcs,
    Bitstream,
    MuxSelect,
    TooShort,
    TxWord,
    decode,
    encode,
    from_hex,
    load_words,
    mux_fields,
    serialize_tx,
    to_hex,
)
from meshtx.frames import FrameKind, InvariantViolation, MacAddress, UnknownSubtype

from oracles import crc32_bitwise, frame_width, lsb_first_bits
from strategies import WIRE_KINDS, frames

X = MacAddress.parse("11:22:33:44:55:66")
Y = MacAddress.parse("02:00:00:00:00:01")


def fixture_frame():
    buf = BufferDescriptor(ra=X, ta=Y, da=X, sa=Y, payload=b"mesh payload")
    return build_frame(FrameKind.DATA, buf, NavRegister(122)).frame


class TestLengths:
    def test_ack_is_14(self):
        f = build_frame(FrameKind.ACK, BufferDescriptor(ra=X)).frame
        assert len(encode(f)) == 14 == frame_width("ack")

    def test_rts_is_20(self):
        f = build_frame(FrameKind.RTS, BufferDescriptor(ra=X, ta=Y)).frame
        assert len(encode(f)) == 20 == frame_width("rts")

    def test_empty_data_ae0(self):
        f = build_frame(FrameKind.DATA, BufferDescriptor(ra=X, ta=Y, da=X, sa=Y)).frame
        assert len(encode(f)) == frame_width("data") == 40

    @pytest.mark.parametrize("ae", [0, 1, 2, 3])
    def test_data_with_extension(self, ae):
        buf = BufferDescriptor(ra=X, ta=Y, da=X, sa=Y, payload=b"abcd", addr_ext=(X,) * ae)
        f = build_frame(FrameKind.DATA, buf).frame
        assert len(f.mesh_header) == 6 + 6 * ae
        assert len(encode(f)) == frame_width("data", body=4, ext_addrs=ae)

    def test_mgmt(self):
        f = build_frame(FrameKind.MGMT_GENERIC, BufferDescriptor(da=X, sa=Y, payload=b"xy")).frame
        assert len(encode(f)) == frame_width("mgmt", body=2)


class TestDecode:
    def test_too_short(self):
        with pytest.raises(TooShort):
            decode(b"\x00\x01\x02")

    def test_every_single_bit_flip_fails_fcs(self):
        wire = encode(fixture_frame())
        for i in range(len(wire) * 8):
            bad = bytearray(wire)
            bad[i // 8] ^= 1 << (i % 8)
            with pytest.raises(BadFcs):
                decode(bytes(bad))

    def test_unknown_subtype(self):
        # control type with subtype 0000 is not a supported kind
        head = bytes([0b0000_0100, 0]) + bytes(2) + X.octets
        with pytest.raises(UnknownSubtype):
            decode(head + crc32_bitwise(head).to_bytes(4, "little"))

    def test_trailing_bytes_on_control(self):
        wire = encode(build_frame(FrameKind.ACK, BufferDescriptor(ra=X)).frame)
        head = wire[:-4] + b"\x00"
        with pytest.raises(InvariantViolation):
            decode(head + crc32_bitwise(head).to_bytes(4, "little"))

    def test_truncated_data(self):
        head = encode(fixture_frame())[:20]  # valid FCS, cut mid-header
        with pytest.raises(TooShort):
            decode(head + crc32_bitwise(head).to_bytes(4, "little"))

    def test_stale_fcs_rejected_by_encode(self):
        from dataclasses import replace
        f = fixture_frame()
        with pytest.raises(InvariantViolation):
            encode(replace(f, fcs=f.fcs ^ 1))

    @settings(max_examples=300)
    @given(frames())
    def test_round_trip(self, f):
        assert decode(encode(f)) == f

    @pytest.mark.parametrize("kind", WIRE_KINDS, ids=lambda k: k.value)
    @settings(max_examples=100)
    @given(data=st.data())
    def test_round_trip_per_kind(self, kind, data):
        f = data.draw(frames(kind))
        assert decode(encode(f)) == f


class TestSerializer:
    def test_ack_112_bits(self):
        f = build_frame(FrameKind.ACK, BufferDescriptor(ra=X)).frame
        assert len(serialize_tx(f)) == 112

    def test_first_byte_is_fch_low_byte(self):
        f = fixture_frame()
        bits = serialize_tx(f).bits
        assert list(bits[:8]) == lsb_first_bits(bytes([f.fch.pack() & 0xFF]))

    @given(frames())
    def test_matches_naive_expansion(self, f):
        stream = serialize_tx(f)
        wire = encode(f)
        assert list(stream.bits) == lsb_first_bits(wire)
        assert len(stream) == 8 * len(wire)
        assert stream.to_bytes() == wire

    def test_mux_order_and_fcs_last(self):
        sels = [sel for sel, _ in mux_fields(fixture_frame())]
        assert sels == [MuxSelect.FCH, MuxSelect.DID, MuxSelect.ADDR1, MuxSelect.ADDR2,
                        MuxSelect.ADDR3, MuxSelect.SEQ_CTL, MuxSelect.ADDR4, MuxSelect.DATA]

    def test_reserved_select_rejected(self):
        for sel in range(9, 16):
            with pytest.raises(ValueError):
                MuxSelect.from_line(sel)
        with pytest.raises(ValueError):
            MuxSelect.from_line(16)

    def test_shift_register_loads(self):
        words = load_words(bytes(range(10)))
        assert [w.valid_bits for w in words] == [32, 32, 16]
        assert words[0].bits == 0x03020100
        with pytest.raises(ValueError):
            TxWord(0x1FF, 8)
        with pytest.raises(ValueError):
            TxWord(0, 33)

    def test_bitstream_alignment(self):
        with pytest.raises(ValueError):
            Bitstream((1, 0, 1)).to_bytes()


def test_hex_format():
    assert to_hex(b"\x01\xab") == "01 ab"
    assert from_hex("01 AB\n") == b"\x01\xab"
