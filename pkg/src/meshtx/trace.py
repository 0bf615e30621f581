"""Edge-triggered signal trace with value-change-dump export.

Waveform grammar (a subset of VCD)::

    file     := header change*
    header   := ["$comment" key=value* "$end"] "$timescale 1 us $end"
                ("$scope module" SCOPE "$end" var* "$upscope $end")*
                "$enddefinitions $end"
    var      := "$var wire" WIDTH ID SIGNAL "$end"
    change   := "#" TIME | ("0"|"1") ID | "b" BITS " " ID | "s" LABEL " " ID

Scopes are declared in sorted order and signals in registry order, so two
identical traces always export to identical text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

Value = Union[int, str]

# signal name -> bit width
SIGNALS: dict[str, int] = {
    "msdurdy": 1,
    "rec_data": 1,
    "rec_cts": 1,
    "rec_rts": 1,
    "rec_ack": 1,
    "en_buildframe": 1,
    "frame_subtype": 6,
    "frame_done": 1,
    "en_medium": 1,
    "access_granted": 1,
    "transmitted": 1,
    "transmit_complete": 1,
    "en_retry": 1,
    "en_backoff": 1,
    "start_count": 1,
    "backoff_val": 10,
    "carrier_sense": 1,
    "nav_reg": 16,
    "tx_line": 1,
}
_ORDER = {name: i for i, name in enumerate(SIGNALS)}


class UnknownSignal(KeyError):
    pass


class WaveformSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    time: int
    scope: str
    signal: str
    value: Value


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)
    _last: dict[tuple[str, str], Value] = field(default_factory=dict, repr=False, compare=False)

    def record(self, t: int, scope: str, signal: str, value: Value) -> bool:
        """Append a change. Returns False (and stores nothing) when the
        signal already holds ``value`` in this scope."""
        if signal not in SIGNALS:
            raise UnknownSignal(signal)
        if self.records and t < self.records[-1].time:
            raise ValueError(f"trace time went backwards: {t} < {self.records[-1].time}")
        if isinstance(value, bool):
            value = int(value)
        key = (scope, signal)
        if key in self._last and self._last[key] == value:
            return False
        if isinstance(value, int) and not 0 <= value < 1 << SIGNALS[signal]:
            raise ValueError(f"{signal} is {SIGNALS[signal]} bits wide, got {value}")
        self._last[key] = value
        self.records.append(TraceRecord(t, scope, signal, value))
        return True

    def value(self, scope: str, signal: str, default: Value = 0) -> Value:
        return self._last.get((scope, signal), default)

    def scopes(self) -> list[str]:
        return sorted({r.scope for r in self.records})

    def for_scope(self, scope: str) -> list[TraceRecord]:
        return [r for r in self.records if r.scope == scope]

    def edges(self, scope: str, signal: str, rising: bool = True) -> list[int]:
        times, prev = [], 0
        for r in self.records:
            if r.scope == scope and r.signal == signal:
                if bool(r.value) != bool(prev) and bool(r.value) == rising:
                    times.append(r.time)
                prev = r.value
        return times

    def __len__(self) -> int:
        return len(self.records)

    # JSON

    def to_json(self) -> list[dict]:
        return [
            {"time": r.time, "scope": r.scope, "signal": r.signal, "value": r.value}
            for r in self.records
        ]

    @classmethod
    def from_json(cls, items: Iterable[dict]) -> Trace:
        trace = cls()
        for item in items:
            trace.record(item["time"], item["scope"], item["signal"], item["value"])
        return trace


def _ident(i: int) -> str:
    # printable ASCII 33..126, little-endian base 94
    out = ""
    while True:
        out += chr(33 + i % 94)
        i //= 94
        if not i:
            return out


def _format_value(value: Value, width: int, ident: str) -> str:
    if isinstance(value, str):
        return f"s{value} {ident}"
    if width == 1:
        return f"{value}{ident}"
    return f"b{value:b} {ident}"


def export_waveform(trace: Trace) -> str:
    lines = []
    if trace.metadata:
        meta = " ".join(f"{k}={v}" for k, v in sorted(trace.metadata.items()))
        lines.append(f"$comment {meta} $end")
    lines.append("$timescale 1 us $end")
    declared = sorted({(r.scope, r.signal) for r in trace.records}, key=lambda k: (k[0], _ORDER[k[1]]))
    idents: dict[tuple[str, str], str] = {}
    current_scope = None
    for i, (scope, signal) in enumerate(declared):
        if scope != current_scope:
            if current_scope is not None:
                lines.append("$upscope $end")
            lines.append(f"$scope module {scope} $end")
            current_scope = scope
        idents[(scope, signal)] = _ident(i)
        lines.append(f"$var wire {SIGNALS[signal]} {idents[(scope, signal)]} {signal} $end")
    if current_scope is not None:
        lines.append("$upscope $end")
    lines.append("$enddefinitions $end")
    now = None
    for r in trace.records:
        if r.time != now:
            lines.append(f"#{r.time}")
            now = r.time
        lines.append(_format_value(r.value, SIGNALS[r.signal], idents[(r.scope, r.signal)]))
    return "\n".join(lines) + "\n"


def parse_waveform(text: str) -> Trace:
    trace = Trace()
    vars_: dict[str, tuple[str, str]] = {}
    scope = None
    now = None
    in_header = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            if in_header:
                tok = line.split()
                if tok[0] == "$comment":
                    for kv in tok[1:-1]:
                        k, _, v = kv.partition("=")
                        trace.metadata[k] = v
                elif tok[0] == "$scope":
                    scope = tok[2]
                elif tok[0] == "$upscope":
                    scope = None
                elif tok[0] == "$var":
                    width, ident, signal = int(tok[2]), tok[3], tok[4]
                    if SIGNALS.get(signal) != width:
                        raise WaveformSyntaxError(f"line {lineno}: bad declaration for {signal}")
                    vars_[ident] = (scope, signal)
                elif tok[0] == "$enddefinitions":
                    in_header = False
                elif tok[0] != "$timescale":
                    raise WaveformSyntaxError(f"line {lineno}: unexpected {tok[0]}")
                continue
            if line[0] == "#":
                now = int(line[1:])
                continue
            if line[0] in "bs":
                payload, ident = line[1:].split(" ", 1)
                value: Value = int(payload, 2) if line[0] == "b" else payload
            else:
                value, ident = int(line[0]), line[1:]
            if now is None:
                raise WaveformSyntaxError(f"line {lineno}: value change before any timestamp")
            sc, sig = vars_[ident]
            trace.record(now, sc, sig, value)
        except (IndexError, KeyError, ValueError) as exc:
            if isinstance(exc, WaveformSyntaxError):
                raise
            raise WaveformSyntaxError(f"line {lineno}: {raw!r}") from exc
    return trace


def _edge_spec(item) -> tuple[str, bool]:
    if isinstance(item, str):
        return item, True
    signal, edge = item
    if edge not in ("rise", "fall"):
        raise ValueError(f"edge must be 'rise' or 'fall', got {edge!r}")
    return signal, edge == "rise"


def assert_order(trace: Trace, scope: str, edges: Iterable, start: int = 0) -> bool:
    """True iff the listed edges occur in this relative order in ``scope``.

    Items are signal names (rising edge) or ``(signal, "rise"|"fall")``.
    Matching is greedy over records, starting at record index ``start``.
    """
    wanted = [_edge_spec(e) for e in edges]
    if not wanted:
        return True
    prev: dict[str, Value] = {}
    for r in trace.records[:start]:
        if r.scope == scope:
            prev[r.signal] = r.value
    i = 0
    for r in trace.records[start:]:
        if r.scope != scope:
            continue
        before = prev.get(r.signal, 0)
        prev[r.signal] = r.value
        if bool(before) == bool(r.value):
            continue
        signal, rising = wanted[i]
        if r.signal == signal and bool(r.value) == rising:
            i += 1
            if i == len(wanted):
                return True
    return False
