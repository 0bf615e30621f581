"""Scenario configuration: dataclasses plus a TOML loader checked against
``scenario.schema.json`` (unknown keys are rejected)."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .access import DEFAULT_THRESHOLD, BackoffParams
from .builder import MAX_MSDU, StationRole
from .frames import FrameKind, MacAddress

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficItem:
    time: int
    dest: int
    payload: bytes = b""


@dataclass(frozen=True)
class NodeConfig:
    id: int
    mac: MacAddress
    role: StationRole = StationRole.MESH_POINT
    traffic: tuple[TrafficItem, ...] = ()
    # responses this node never sends (fault injection); CTS+ACK = silent
    mute: frozenset[FrameKind] = frozenset()


@dataclass(frozen=True)
class MediumParams:
    bitrate: int = 1_000_000  # bit/s
    sifs: int = 10  # µs
    difs: int = 50
    timeout_factor: int = 2
    trace_tx_line: bool = False


@dataclass(frozen=True)
class AccessParams:
    cw_min: int = 15
    cw_max: int = 1023
    slot_time: int = 20
    threshold: int = DEFAULT_THRESHOLD
    # draw a backoff even when a retry finds the medium idle
    retry_backoff: bool = False

    def backoff(self, seed: int = 0) -> BackoffParams:
        return BackoffParams(self.cw_min, self.cw_max, self.slot_time, seed)


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[NodeConfig, ...]
    medium: MediumParams = field(default_factory=MediumParams)
    access: AccessParams = field(default_factory=AccessParams)
    seed: int = 0
    horizon: int = 1_000_000
    name: str = "scenario"

    def node(self, node_id: int) -> NodeConfig:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


def validate(sc: Scenario) -> Scenario:
    if sc.horizon <= 0:
        raise ConfigError("horizon must be positive")
    ids = [n.id for n in sc.nodes]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate node ids in {ids}")
    macs = [n.mac for n in sc.nodes]
    if len(set(macs)) != len(macs):
        raise ConfigError("duplicate MAC addresses")
    for n in sc.nodes:
        for item in n.traffic:
            if item.time < 0 or item.time > sc.horizon:
                raise ConfigError(f"node {n.id}: traffic at t={item.time} outside [0, horizon={sc.horizon}]")
            if item.dest not in ids or item.dest == n.id:
                raise ConfigError(f"node {n.id}: bad destination {item.dest}")
            if len(item.payload) > MAX_MSDU:
                raise ConfigError(f"node {n.id}: payload exceeds {MAX_MSDU} bytes (no fragment bursts)")
    try:
        sc.access.backoff()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if sc.medium.bitrate <= 0:
        raise ConfigError("bitrate must be positive")
    return sc


def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("scenario.schema.json").read_text())


_MUTE_NAMES = {"cts": FrameKind.CTS, "ack": FrameKind.ACK}


def from_dict(doc: dict, name: str = "scenario") -> Scenario:
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    nodes = []
    for nd in doc["nodes"]:
        traffic = []
        for t in nd.get("traffic", []):
            if "payload" in t:
                payload = bytes.fromhex(t["payload"])
            else:
                payload = bytes(i & 0xFF for i in range(t.get("size", 0)))
            traffic.append(TrafficItem(t["time"], t["dest"], payload))
        mute = {_MUTE_NAMES[m] for m in nd.get("mute", [])}
        if nd.get("silent"):
            mute |= set(_MUTE_NAMES.values())
        try:
            mac = MacAddress.parse(nd["mac"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        nodes.append(NodeConfig(
            id=nd["id"], mac=mac,
            role=StationRole(nd.get("role", "mesh-point")),
            traffic=tuple(sorted(traffic, key=lambda t: t.time)),
            mute=frozenset(mute),
        ))
    sc = Scenario(
        nodes=tuple(nodes),
        medium=MediumParams(**doc.get("medium", {})),
        access=AccessParams(**doc.get("access", {})),
        seed=doc.get("seed", 0),
        horizon=doc.get("horizon", 1_000_000),
        name=doc.get("name", name),
    )
    return validate(sc)


def load(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(doc, name=path.stem)
