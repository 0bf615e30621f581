import json

import pytest
from hypothesis import given, strategies as st

from meshtx.trace import (
    SIGNALS,
    Trace,
    UnknownSignal,
    WaveformSyntaxError,
    assert_order,
    export_waveform,
    parse_waveform,
)

PATH_A = ["en_buildframe", "frame_done", "en_medium", "access_granted", "transmitted", "transmit_complete"]


def path_a_trace():
    t = Trace()
    t.record(0, "n0", "msdurdy", 1)
    for i, sig in enumerate(PATH_A, start=1):
        t.record(i * 10, "n0", sig, 1)
    t.record(70, "n0", "en_buildframe", 0)
    t.record(70, "n0", "transmit_complete", 0)
    return t


@st.composite
def traces(draw):
    t = Trace()
    now = 0
    for _ in range(draw(st.integers(0, 40))):
        now += draw(st.integers(0, 5))
        scope = draw(st.sampled_from(["n0", "n1", "n2"]))
        signal = draw(st.sampled_from(list(SIGNALS)))
        t.record(now, scope, signal, draw(st.integers(0, (1 << SIGNALS[signal]) - 1)))
    return t


def test_edge_triggered():
    t = Trace()
    assert t.record(5, "n0", "en_medium", 1)
    assert not t.record(6, "n0", "en_medium", 1)
    assert len(t) == 1


def test_same_instant_keeps_order():
    t = Trace()
    t.record(5, "n0", "en_medium", 1)
    t.record(5, "n0", "access_granted", 1)
    assert [r.signal for r in t.records] == ["en_medium", "access_granted"]


def test_unknown_signal():
    with pytest.raises(UnknownSignal):
        Trace().record(0, "n0", "bogus", 1)


def test_width_and_time_checked():
    t = Trace()
    with pytest.raises(ValueError):
        t.record(0, "n0", "frame_subtype", 64)
    t.record(10, "n0", "en_medium", 1)
    with pytest.raises(ValueError):
        t.record(9, "n0", "en_medium", 0)


def test_empty_trace_header_only():
    text = export_waveform(Trace())
    assert text == "$timescale 1 us $end\n$enddefinitions $end\n"


def test_one_change_one_line_after_header():
    t = Trace()
    t.record(3, "n0", "frame_subtype", 0b101101)
    body = export_waveform(t).split("$enddefinitions $end\n", 1)[1].splitlines()
    assert body == ["#3", "b101101 !"]


def test_reexport_byte_identical():
    assert export_waveform(path_a_trace()) == export_waveform(path_a_trace())


def test_metadata_in_header():
    t = path_a_trace()
    t.metadata.update(seed="7", rng="splitmix64")
    text = export_waveform(t)
    assert text.startswith("$comment rng=splitmix64 seed=7 $end\n")
    assert parse_waveform(text).metadata == t.metadata


@given(traces())
def test_export_parse_export_idempotent(t):
    text = export_waveform(t)
    again = parse_waveform(text)
    assert again.records == t.records
    assert export_waveform(again) == text


@given(traces())
def test_json_round_trip(t):
    doc = json.loads(json.dumps(t.to_json()))
    assert Trace.from_json(doc).records == t.records


def test_labels_round_trip():
    t = Trace()
    t.record(0, "n0", "frame_subtype", "rts")
    assert parse_waveform(export_waveform(t)).records == t.records


@pytest.mark.parametrize("text", [
    "$timescale 1 us $end\n$enddefinitions $end\n1!\n",
    "$timescale 1 us $end\n$bogus $end\n",
    "$timescale 1 us $end\n$var wire 3 ! en_medium $end\n$enddefinitions $end\n",
    "$timescale 1 us $end\n$enddefinitions $end\n#0\n1!\n",
])
def test_parse_rejects_malformed(text):
    with pytest.raises(WaveformSyntaxError):
        parse_waveform(text)


class TestAssertOrder:
    def test_path_a(self):
        assert assert_order(path_a_trace(), "n0", PATH_A)

    def test_reversed(self):
        assert not assert_order(path_a_trace(), "n0", PATH_A[::-1])

    def test_empty(self):
        assert assert_order(Trace(), "n0", [])

    def test_other_scope(self):
        assert not assert_order(path_a_trace(), "n1", PATH_A[:1])

    def test_falling_edges(self):
        t = path_a_trace()
        assert assert_order(t, "n0", ["transmit_complete", ("en_buildframe", "fall")])
        assert not assert_order(t, "n0", [("en_buildframe", "fall"), "en_medium"])
        with pytest.raises(ValueError):
            assert_order(t, "n0", [("en_medium", "up")])

    def test_start_offset(self):
        t = path_a_trace()
        assert not assert_order(t, "n0", ["en_buildframe"], start=2)

    @given(st.lists(st.booleans(), min_size=len(PATH_A), max_size=len(PATH_A)))
    def test_monotone_under_subsequence(self, keep):
        sub = [s for s, k in zip(PATH_A, keep) if k]
        assert assert_order(path_a_trace(), "n0", sub)

    @given(traces(), st.data())
    def test_monotone_random(self, t, data):
        edges = [(r.signal, "rise" if r.value else "fall") for r in t.for_scope("n0")]
        order = data.draw(st.lists(st.sampled_from(edges), max_size=6)) if edges else []
        if assert_order(t, "n0", order):
            mask = data.draw(st.lists(st.booleans(), min_size=len(order), max_size=len(order)))
            assert assert_order(t, "n0", [e for e, k in zip(order, mask) if k])
