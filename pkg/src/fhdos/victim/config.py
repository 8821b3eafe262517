"""Calibration files: line-oriented ``key = value`` topology descriptions.

Keys are namespaced::

    sim.<knob>                      tick, baseline and observation windows, seed
    switch.<knob>                   aging_seconds, secure (node names), attacker_port
    traffic.<knob>                  legit frame rates/sizes, jitter
    attack.<knob>                   forged frame sizes per plane family
    node.<name>.<knob>              role, mac, restart_seconds, like
    node.<name>.<plane>.<knob>      per-plane policy, plane in cplane|udl|uul

``node.<b>.like = <a>`` copies a's plane policies and restart time into b
before b's own keys are applied.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..codec import MacAddress

PLANES = ("cplane", "udl", "uul")
ROLES = ("odu", "oru")


class ConfigError(ValueError):
    pass


@dataclass
class PlanePolicy:
    cost: float = 1.0
    budget: Optional[float] = None  # units per second; None = unlimited
    accept: str = "any"  # any | peer
    reject_cost: float = 0.0
    self_fault: bool = False
    flow_capacity: Optional[int] = None
    theta: Optional[float] = None
    crash_ratio: Optional[float] = None
    stickiness: Optional[float] = None

    def validate(self, where: str) -> None:
        if self.cost <= 0:
            raise ConfigError(f"{where}.cost must be positive")
        if self.budget is not None and self.budget <= 0:
            raise ConfigError(f"{where}.budget must be positive")
        if self.accept not in ("any", "peer"):
            raise ConfigError(f"{where}.accept must be 'any' or 'peer'")
        if self.reject_cost < 0:
            raise ConfigError(f"{where}.reject_cost must not be negative")
        if self.flow_capacity is not None and self.flow_capacity <= 0:
            raise ConfigError(f"{where}.flow_capacity must be positive")
        if self.theta is not None and not 0 < self.theta < 1:
            raise ConfigError(f"{where}.theta must lie in (0, 1)")
        if self.crash_ratio is not None and self.crash_ratio <= 1:
            raise ConfigError(f"{where}.crash_ratio must exceed 1")
        if self.stickiness is not None and self.stickiness <= 0:
            raise ConfigError(f"{where}.stickiness must be positive")


@dataclass
class NodeConfig:
    name: str
    role: str = ""
    mac: Optional[MacAddress] = None
    restart_seconds: float = 2.0
    planes: Dict[str, PlanePolicy] = field(default_factory=lambda: {p: PlanePolicy() for p in PLANES})


@dataclass
class TrafficProfile:
    """Legit load per O-RU: O-DU sends C-Plane and U-Plane DL, the O-RU sends U-Plane UL."""

    cplane_fps: float = 2000.0
    udl_fps: float = 8000.0
    uul_fps: float = 4000.0
    cplane_bytes: int = 64
    udl_bytes: int = 1000
    uul_bytes: int = 1000
    jitter: float = 0.0


@dataclass
class Topology:
    nodes: Dict[str, NodeConfig]
    traffic: TrafficProfile = field(default_factory=TrafficProfile)
    tick_seconds: float = 0.1
    baseline_seconds: int = 5
    post_seconds: int = 30
    drop_fraction: float = 0.5
    recovery_hold_seconds: int = 3
    seed: int = 0
    aging_seconds: float = 300.0
    secure: Tuple[str, ...] = ()
    attacker_port: str = "attacker"
    attack_cplane_bytes: int = 64
    attack_uplane_bytes: int = 1000
    source: str = "<memory>"

    @property
    def odu(self) -> NodeConfig:
        return next(n for n in self.nodes.values() if n.role == "odu")

    @property
    def orus(self) -> List[NodeConfig]:
        return [n for n in self.nodes.values() if n.role == "oru"]

    @property
    def ports(self) -> List[str]:
        return list(self.nodes) + [self.attacker_port]

    def node_by_mac(self, mac: bytes) -> Optional[NodeConfig]:
        for n in self.nodes.values():
            if n.mac.octets == mac:
                return n
        return None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PLANE_KNOBS = {
    "cost": float, "budget": float, "accept": str.strip, "reject_cost": float,
    "self_fault": _bool, "flow_capacity": int, "theta": float, "crash_ratio": float,
    "stickiness": float,
}
_SIM_KEYS = {
    "sim.tick_seconds": ("tick_seconds", float),
    "sim.baseline_seconds": ("baseline_seconds", int),
    "sim.post_seconds": ("post_seconds", int),
    "sim.drop_fraction": ("drop_fraction", float),
    "sim.recovery_hold_seconds": ("recovery_hold_seconds", int),
    "sim.seed": ("seed", int),
    "switch.aging_seconds": ("aging_seconds", float),
    "switch.attacker_port": ("attacker_port", str.strip),
    "attack.cplane_bytes": ("attack_cplane_bytes", int),
    "attack.uplane_bytes": ("attack_uplane_bytes", int),
}


def parse_lines(text: str, source: str = "<memory>") -> List[Tuple[int, str, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        out.append((lineno, key.strip(), value.strip()))
    return out


def parse_topology(text: str, source: str = "<memory>") -> Topology:
    entries = parse_lines(text, source)
    topo = Topology(nodes={}, source=source)
    node_keys: Dict[str, List[Tuple[int, str, str]]] = {}
    likes: Dict[str, str] = {}
    secure: Optional[str] = None

    for lineno, key, value in entries:
        where = f"{source}:{lineno}"
        try:
            if key in _SIM_KEYS:
                attr, conv = _SIM_KEYS[key]
                setattr(topo, attr, conv(value))
            elif key == "switch.secure":
                secure = value
            elif key.startswith("traffic."):
                name = key[len("traffic."):]
                fields = {f.name: f.type for f in dataclasses.fields(TrafficProfile)}
                if name not in fields:
                    raise ConfigError(f"{where}: unknown key {key!r}")
                conv = int if name.endswith("_bytes") else float
                setattr(topo.traffic, name, conv(value))
            elif key.startswith("node."):
                parts = key.split(".")
                if len(parts) not in (3, 4):
                    raise ConfigError(f"{where}: unknown key {key!r}")
                name = parts[1]
                if parts[2] == "like" and len(parts) == 3:
                    likes[name] = value
                node_keys.setdefault(name, []).append((lineno, key, value))
            else:
                raise ConfigError(f"{where}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{where}: {key}: {exc}") from exc

    def build(name: str, seen: Tuple[str, ...] = ()) -> NodeConfig:
        if name in seen:
            raise ConfigError(f"{source}: circular 'like' chain through node {name!r}")
        node = NodeConfig(name=name)
        if name in likes:
            base_name = likes[name]
            if base_name not in node_keys:
                raise ConfigError(f"{source}: node {name!r} is like unknown node {base_name!r}")
            base = build(base_name, seen + (name,))
            node.role = base.role
            node.restart_seconds = base.restart_seconds
            node.planes = {p: dataclasses.replace(pol) for p, pol in base.planes.items()}
        for lineno, key, value in node_keys[name]:
            where = f"{source}:{lineno}"
            parts = key.split(".")
            try:
                if len(parts) == 3:
                    knob = parts[2]
                    if knob == "role":
                        if value not in ROLES:
                            raise ConfigError(f"{where}: role must be one of {', '.join(ROLES)}")
                        node.role = value
                    elif knob == "mac":
                        node.mac = MacAddress.parse(value)
                    elif knob == "restart_seconds":
                        node.restart_seconds = float(value)
                    elif knob != "like":
                        raise ConfigError(f"{where}: unknown key {key!r}")
                else:
                    plane, knob = parts[2], parts[3]
                    if plane not in PLANES or knob not in _PLANE_KNOBS:
                        raise ConfigError(f"{where}: unknown key {key!r}")
                    setattr(node.planes[plane], knob, _PLANE_KNOBS[knob](value))
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{where}: {key}: {exc}") from exc
        return node

    for name in node_keys:
        if name == topo.attacker_port:
            raise ConfigError(f"{source}: node name {name!r} collides with the attacker port")
        topo.nodes[name] = build(name)
    if secure:
        topo.secure = tuple(s.strip() for s in secure.split(",") if s.strip())
    validate(topo)
    return topo


def validate(topo: Topology) -> None:
    src = topo.source
    roles = [n.role for n in topo.nodes.values()]
    if roles.count("odu") != 1:
        raise ConfigError(f"{src}: exactly one node must have role odu")
    if "oru" not in roles:
        raise ConfigError(f"{src}: at least one node must have role oru")
    macs = set()
    for n in topo.nodes.values():
        if not n.role:
            raise ConfigError(f"{src}: node {n.name!r} has no role")
        if n.mac is None:
            raise ConfigError(f"{src}: node {n.name!r} has no mac")
        if n.mac.is_multicast:
            raise ConfigError(f"{src}: node {n.name!r} has a group address")
        if n.mac.octets in macs:
            raise ConfigError(f"{src}: duplicate mac {n.mac}")
        macs.add(n.mac.octets)
        if n.restart_seconds <= 0:
            raise ConfigError(f"{src}: node {n.name!r} restart_seconds must be positive")
        for p, pol in n.planes.items():
            pol.validate(f"node.{n.name}.{p}")
    for name in topo.secure:
        if name not in topo.nodes:
            raise ConfigError(f"{src}: switch.secure names unknown port {name!r}")
    if not 0 < topo.drop_fraction < 1:
        raise ConfigError(f"{src}: sim.drop_fraction must lie in (0, 1)")
    if topo.tick_seconds <= 0 or abs(1 / topo.tick_seconds - round(1 / topo.tick_seconds)) > 1e-9:
        raise ConfigError(f"{src}: sim.tick_seconds must divide one second")
    if topo.traffic.jitter < 0 or topo.traffic.jitter >= 1:
        raise ConfigError(f"{src}: traffic.jitter must lie in [0, 1)")


def load_topology(path) -> Topology:
    path = os.fspath(path)
    with open(path) as f:
        return parse_topology(f.read(), source=os.path.basename(path))
