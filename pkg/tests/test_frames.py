import itertools

import pytest

from meshtx.frames import (
    FrameControlField,
    FrameKind,
    InvariantViolation,
    MacAddress,
    MeshHeader,
    ReservedKind,
    UnknownSubtype,
    WILDCARD,
    ZERO_ADDRESS,
    classify,
    mesh_header_length,
    subtype_code,
)

from oracles import fch_fields


@pytest.mark.parametrize("kind, code", [
    (FrameKind.ACK, 0b101011),
    (FrameKind.DATA, 0b010000),
    (FrameKind.RTS, 0b101101),
    (FrameKind.CTS, 0b010011),
    (FrameKind.PS_POLL, 0b100101),
    (FrameKind.CFP_END, 0b010110),
])
def test_subtype_codes(kind, code):
    assert subtype_code(kind) == code
    assert classify(code) is kind


def test_classify_unknown():
    with pytest.raises(UnknownSubtype):
        classify(0b111111)


@pytest.mark.parametrize("kind", [FrameKind.RTX, FrameKind.CTX])
def test_reserved_kinds_have_no_code(kind):
    with pytest.raises(ReservedKind):
        subtype_code(kind)


def test_classify_is_inverse_over_all_codes():
    supported = {}
    for code in range(64):
        try:
            supported[code] = classify(code)
        except UnknownSubtype:
            pass
    assert len(supported) == 6
    for code, kind in supported.items():
        assert subtype_code(kind) == code


def test_fch_width_exhaustive():
    # every flag combination with every type/subtype: packs to 16 bits and
    # the oracle bit reader recovers every field
    for ftype, fsub in [(0, 0), (1, 13), (2, 0), (3, 15)]:
        for flags in itertools.product((0, 1), repeat=8):
            kw = dict(zip(FrameControlField.FLAG_NAMES, flags))
            word = FrameControlField(type=ftype, subtype=fsub, **kw).pack()
            assert 0 <= word < 1 << 16
            fields = fch_fields(word)
            assert fields["version"] == 0
            assert (fields["type"], fields["subtype"]) == (ftype, fsub)
            assert all(fields[n] == v for n, v in kw.items())
            assert FrameControlField.unpack(word) == FrameControlField(type=ftype, subtype=fsub, **kw)


def test_fch_rejects_nonzero_version():
    with pytest.raises(InvariantViolation):
        FrameControlField(type=2, subtype=0, protocol_version=1)


@pytest.mark.parametrize("ae, length", [(0, 6), (1, 12), (2, 18), (3, 24)])
def test_mesh_header_length(ae, length):
    assert mesh_header_length(ae) == length


def test_mesh_header_length_all_flag_bytes():
    assert {mesh_header_length(f) for f in range(256)} == {6, 12, 18, 24}


def test_mesh_header_extension_must_match_ae():
    a = MacAddress(bytes(range(6)))
    assert len(MeshHeader.with_extension([a, a])) == 18
    with pytest.raises(InvariantViolation):
        MeshHeader(flags=2, addr_ext=(a,))
    with pytest.raises(InvariantViolation):
        MeshHeader(flags=0x80)


def test_ttl_decrement_floors_at_zero():
    mh = MeshHeader(ttl=1)
    assert mh.decrement_ttl().ttl == 0
    assert mh.decrement_ttl().decrement_ttl().ttl == 0


def test_mac_parse_and_constants():
    assert str(MacAddress.parse("11:22:33:44:55:66")) == "11:22:33:44:55:66"
    assert WILDCARD.octets == b"\xff" * 6 and WILDCARD.is_wildcard
    assert ZERO_ADDRESS.octets == bytes(6)
    with pytest.raises(ValueError):
        MacAddress.parse("11:22:33")
