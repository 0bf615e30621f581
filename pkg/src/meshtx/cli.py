"""Command line front end.

Exit codes: 0 success, 1 conformance failure, 2 usage / bad input,
3 scenario config error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import codec, conformance, scenario, sim
from .builder import BufferDescriptor, NavRegister, SequenceState, StationRole, TxFlags, build_frame
from .frames import FrameError, FrameKind, MacAddress, format_code, SUBTYPE_CODES
from .trace import Trace, WaveformSyntaxError, export_waveform, parse_waveform

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3, 4

_KINDS = {k.value: k for k in FrameKind if not k.reserved}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _mac(text: str) -> MacAddress:
    try:
        return MacAddress.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, sort_keys=True) if args.json else text)


def frame_to_dict(f) -> dict:
    out = {
        "kind": f.kind.value,
        "fch": f"{f.fch.pack():04x}",
        "type": f.fch.type,
        "subtype": f.fch.subtype,
        "flags": {n: getattr(f.fch, n) for n in f.fch.FLAG_NAMES},
        "did": f.did,
    }
    for i, addr in enumerate(f.addresses, start=1):
        if addr is not None:
            out[f"addr{i}"] = str(addr)
    if f.seq_ctl is not None:
        out["seq_ctl"] = f.seq_ctl
    if f.mesh_header is not None:
        mh = f.mesh_header
        out["mesh_header"] = {
            "flags": mh.flags, "ttl": mh.ttl, "mesh_seq": mh.mesh_seq,
            "addr_ext": [str(a) for a in mh.addr_ext],
        }
    out["body"] = f.body.hex()
    out["fcs"] = f"{f.fcs:08x}"
    if f.kind in SUBTYPE_CODES:
        out["frame_subtype"] = format_code(SUBTYPE_CODES[f.kind])
    return out


def cmd_encode(args) -> int:
    kind = _KINDS[args.kind]
    try:
        payload = bytes.fromhex(args.payload)
    except ValueError:
        raise CliError(EXIT_USAGE, f"--payload is not hex: {args.payload!r}") from None
    flags = TxFlags(**{name: int(getattr(args, name)) for name in vars(TxFlags())})
    buf = BufferDescriptor(
        ra=args.ra, ta=args.ta, da=args.da, sa=args.sa, bssid=args.bssid,
        payload=payload, mesh_ttl=args.ttl,
    )
    mgmt_subtype = None
    if args.probe:
        if kind is not FrameKind.MGMT_GENERIC:
            raise CliError(EXIT_USAGE, "--probe only applies to mgmt frames")
        from .frames import MGMT_SUBTYPE_PROBE_REQUEST
        mgmt_subtype = MGMT_SUBTYPE_PROBE_REQUEST
    try:
        result = build_frame(
            kind, buf, NavRegister(args.nav), SequenceState(seq_counter=args.seq),
            flags, StationRole(args.role), mgmt_subtype,
        )
    except (FrameError, ValueError) as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    frames = result.fragments
    hexes = [codec.to_hex(codec.encode(f)) for f in frames]
    _emit(
        args,
        {"kind": kind.value, "frames": [{"hex": h, "length": len(codec.encode(f))} for h, f in zip(hexes, frames)]},
        "\n".join(hexes),
    )
    return EXIT_OK


def cmd_decode(args) -> int:
    text = " ".join(args.hex) if args.hex else sys.stdin.read()
    try:
        data = codec.from_hex(text)
    except ValueError:
        raise CliError(EXIT_USAGE, "input is not hex") from None
    try:
        f = codec.decode(data)
    except FrameError as exc:
        raise CliError(EXIT_USAGE, f"{type(exc).__name__}: {exc}") from None
    d = frame_to_dict(f)
    lines = [f"{k}: {v}" for k, v in d.items()]
    _emit(args, d, "\n".join(lines))
    return EXIT_OK


def _run_one(path: Path, out: Path, seed: int | None) -> dict:
    sc = scenario.load(path)
    if seed is not None:
        sc = replace(sc, seed=seed)
    report = sim.run(sc)
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_json()
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    (out / "trace.vcd").write_text(export_waveform(report.trace))
    (out / "trace.json").write_text(json.dumps(report.trace.to_json()) + "\n")
    return doc


def _summary(doc: dict) -> str:
    rows = [f"{doc['scenario']}: seed={doc['seed']} end={doc['end_time']}us"]
    for n in doc["nodes"]:
        rows.append(
            f"  n{n['id']} offered={n['offered']} delivered={n['delivered']} failed={n['failed']} "
            f"retries={n['retries']} collisions={n['collisions']} received={n['received']}"
        )
    return "\n".join(rows)


def cmd_run(args) -> int:
    src = Path(args.scenario)
    out = Path(args.out)
    try:
        if src.is_dir():
            paths = sorted(src.glob("*.toml"))
            if not paths:
                raise CliError(EXIT_CONFIG, f"no *.toml scenarios in {src}")
            with ThreadPoolExecutor() as pool:
                docs = list(pool.map(lambda p: _run_one(p, out / p.stem, args.seed), paths))
        else:
            docs = [_run_one(src, out, args.seed)]
    except scenario.ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"I/O error: {exc}") from None
    payload = docs[0] if len(docs) == 1 else {"reports": docs}
    _emit(args, payload, "\n".join(_summary(d) for d in docs))
    return EXIT_OK


def cmd_trace(args) -> int:
    path = Path(args.file)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, f"I/O error: {exc}") from None
    try:
        if path.suffix == ".json":
            trace = Trace.from_json(json.loads(text))
        else:
            trace = parse_waveform(text)
    except (ValueError, KeyError, WaveformSyntaxError) as exc:
        raise CliError(EXIT_USAGE, f"cannot parse {path}: {exc}") from None
    if args.scope or args.signal:
        picked = Trace(metadata=dict(trace.metadata))
        for r in trace.records:
            if (not args.scope or r.scope == args.scope) and (not args.signal or r.signal in args.signal):
                picked.record(r.time, r.scope, r.signal, r.value)
        trace = picked
    if args.json:
        print(json.dumps(trace.to_json()))
    else:
        sys.stdout.write(export_waveform(trace))
    return EXIT_OK


def cmd_conform(args) -> int:
    results = conformance.conform(threshold=args.threshold)
    if args.json:
        print(json.dumps([{"case": r.name, "passed": r.passed, "detail": r.detail} for r in results]))
    else:
        width = max(len(r.name) for r in results)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(prog="meshtx", description="802.11s mesh MAC transmitter model")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", parents=[common], help="build a frame and print it as hex")
    e.add_argument("kind", choices=sorted(_KINDS))
    for name in ("ra", "ta", "da", "sa", "bssid"):
        e.add_argument(f"--{name}", type=_mac)
    e.add_argument("--nav", type=int, default=0, help="NAV register value (us)")
    e.add_argument("--payload", default="", help="body as hex")
    e.add_argument("--seq", type=int, default=0, help="sequence counter before this MSDU")
    e.add_argument("--ttl", type=int, default=31)
    e.add_argument("--role", choices=[r.value for r in StationRole], default="mesh-point")
    e.add_argument("--probe", action="store_true", help="mgmt probe request (wildcard BSSID unless --bssid)")
    for name in vars(TxFlags()):
        e.add_argument(f"--{name.replace('_', '-')}", dest=name, action="store_true")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", parents=[common], help="parse a hex frame (argument or stdin)")
    d.add_argument("hex", nargs="*")
    d.set_defaults(func=cmd_decode)

    r = sub.add_parser("run", parents=[common], help="simulate a scenario file or directory")
    r.add_argument("scenario")
    r.add_argument("--out", default="out")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("trace", parents=[common], help="convert or filter a waveform/JSON trace")
    t.add_argument("file")
    t.add_argument("--scope")
    t.add_argument("--signal", action="append")
    t.set_defaults(func=cmd_trace)

    c = sub.add_parser("conform", parents=[common], help="run the golden conformance suite")
    c.add_argument("--threshold", type=int, default=conformance.REFERENCE_THRESHOLD,
                   help="retry threshold to configure (mutation testing)")
    c.set_defaults(func=cmd_conform)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"meshtx: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
