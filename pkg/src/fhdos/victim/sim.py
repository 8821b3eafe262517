"""Discrete-time fronthaul victim model.

Traffic is fluid: each stream carries a (possibly fractional) frame count per
tick.  A tick runs legit generators and the attacker, forwards every stream
through the switch, lets each node consume its inbox plane by plane, then
updates node states.  The failure mechanisms are:

* M1 switch poisoning: frames go where the MAC table points, so a spoofed
  source steals deliveries in proportion to its share of table refreshes.
* M2 budget overload: a plane that spends more than its per-tick budget
  drops legit frames proportionally; sustained overload restarts the node.
  Spending more than ``crash_ratio`` times the budget takes the node down
  for good.
* M3 flow exhaustion: distinct accepted sources beyond ``flow_capacity``
  restart the node.
* M4 self-source fault: frames carrying the node's own address degrade the
  plane; sustained faults restart the node.
* M5 sticky poisoning: once a legit flow has lost more than ``stickiness``
  frames to misdelivery it never resumes.

A plane whose legit loss exceeds ``theta`` is degraded.  A degraded plane
stops goodput in the directions it serves.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

from .. import addr
from ..attacks import AttackSpec, Target
from ..codec import BROADCAST, FrameClass, MacAddress
from ..rx import detect_drop_and_recovery
from .config import PLANES, ConfigError, NodeConfig, Topology
from .switch import SwitchModel, is_group

PLANE_OF = {FrameClass.CPLANE_DL: "cplane", FrameClass.UPLANE_DL: "udl", FrameClass.UPLANE_UL: "uul"}

# legit flow kinds: (sender is the O-DU, receiving plane)
FLOW_KINDS = {"c": (True, "cplane"), "dl": (True, "udl"), "ul": (False, "uul")}
_SERIES_OF = {"c": FrameClass.CPLANE_DL, "dl": FrameClass.UPLANE_DL, "ul": FrameClass.UPLANE_UL}
# planes gating goodput per direction, as (node is O-DU, plane)
_GATES = {
    "dl": ((True, "cplane"), (True, "udl"), (False, "cplane"), (False, "udl")),
    "ul": ((True, "cplane"), (True, "uul"), (False, "cplane"), (False, "uul")),
}
_EPS = 1e-9

FlowKey = Tuple[str, str]  # (kind, O-RU name)


class NodeStatus(str, enum.Enum):
    UP = "UP"
    DEGRADED = "DEGRADED"
    RESTARTING = "RESTARTING"
    DOWN = "DOWN"


class Severity(str, enum.Enum):
    NONE = "None"
    DEGRADED_RECOVERED = "DegradedRecovered"
    DEGRADED_UNRECOVERED = "DegradedUnrecovered"
    CRASH_RESTART = "CrashRestart"


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"


@dataclass
class Stream:
    src: Optional[bytes]  # None: a fresh random address per frame
    dst: bytes
    ingress: str
    plane: str
    frames: float
    bits: int
    flow: Optional[FlowKey] = None


@dataclass
class PlaneState:
    flows: Set[bytes] = field(default_factory=set)
    anonymous_flows: float = 0.0
    overload_run: int = 0
    fault_run: int = 0
    spend: float = 0.0
    degraded: bool = False

    @property
    def occupancy(self) -> float:
        return len(self.flows) + self.anonymous_flows


@dataclass
class NodeState:
    cfg: NodeConfig
    status: NodeStatus = NodeStatus.UP
    restart_left: int = 0
    restarts: int = 0
    planes: Dict[str, PlaneState] = field(default_factory=lambda: {p: PlaneState() for p in PLANES})

    @property
    def active(self) -> bool:
        return self.status in (NodeStatus.UP, NodeStatus.DEGRADED)

    def restart(self, ticks: int) -> None:
        self.status = NodeStatus.RESTARTING
        self.restart_left = ticks
        self.restarts += 1
        self.planes = {p: PlaneState() for p in PLANES}


@dataclass
class TickResult:
    tick: int
    attack_frames: float
    offered: Dict[FlowKey, float]
    goodput: Dict[FlowKey, float]
    misdelivered: Dict[FlowKey, float]
    degraded: bool
    crashed: bool
    statuses: Dict[str, NodeStatus]


@dataclass(frozen=True)
class SimOutcome:
    verdict: Verdict
    severity: Severity
    first_drop_second: Optional[int]
    recovered_second: Optional[int]
    throughput: Dict[str, List[int]]  # class -> legit goodput bits per second
    block_error_proxy: List[float]
    state_timeline: List[Tuple[float, str, str]]
    restarts: Dict[str, int]
    # "DL"/"UL" -> (first_drop_second, recovered_second)
    directions: Dict[str, Tuple[Optional[int], Optional[int]]] = field(default_factory=dict)
    attack: Optional[dict] = None

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "severity": self.severity.value,
            "firstDropSecond": self.first_drop_second,
            "recoveredSecond": self.recovered_second,
            "throughput": self.throughput,
            "blockErrorProxy": self.block_error_proxy,
            "stateTimeline": [list(t) for t in self.state_timeline],
            "restarts": self.restarts,
            "directions": {d: list(v) for d, v in self.directions.items()},
            "attack": self.attack,
        }


def attack_record(attack: AttackSpec) -> dict:
    return {
        "target": attack.target.value, "traffic": attack.traffic.value,
        "source": addr.format_strategy(attack.source), "tierMbps": attack.tier_mbps,
        "durationSeconds": attack.duration_seconds,
        "dstMac": str(attack.dst_mac) if attack.dst_mac else None, "frameBytes": attack.frame_bytes,
    }


class Simulation:
    def __init__(self, topology: Topology, attack: Optional[AttackSpec] = None, seed: Optional[int] = None):
        self.topo = topology
        self.attack = attack
        self.tick = 0
        self.tick_seconds = Fraction(str(topology.tick_seconds))
        self.ticks_per_second = int(round(1 / self.tick_seconds))
        self.hold_ticks = topology.recovery_hold_seconds * self.ticks_per_second
        self.rng = random.Random(topology.seed if seed is None else seed)
        self.switch = SwitchModel(
            topology.ports, topology.aging_seconds,
            secure={topology.nodes[n].mac.octets: n for n in topology.secure})
        self.nodes = {name: NodeState(cfg) for name, cfg in topology.nodes.items()}
        self.port_of_mac = {cfg.mac.octets: name for name, cfg in topology.nodes.items()}
        self.odu = topology.odu
        self.peers = {
            name: ({r.mac.octets for r in topology.orus} if cfg.role == "odu" else {self.odu.mac.octets})
            for name, cfg in topology.nodes.items()
        }
        self.flows: List[FlowKey] = [(k, r.name) for r in topology.orus for k in FLOW_KINDS]
        self.misdelivered_total: Dict[FlowKey, float] = {f: 0.0 for f in self.flows}
        self.latched: Set[FlowKey] = set()
        self.inbound: Dict[Tuple[str, str], List[FlowKey]] = {(n, p): [] for n in self.nodes for p in PLANES}
        for f in self.flows:
            _, receiver, plane = self._flow_ends(f)
            self.inbound[(receiver.name, plane)].append(f)
        self.baseline_ticks = topology.baseline_seconds * self.ticks_per_second
        self.attack_ticks = (attack.duration_seconds if attack else 0) * self.ticks_per_second
        self.total_ticks = self.baseline_ticks + self.attack_ticks + topology.post_seconds * self.ticks_per_second
        self._attack_stream = self._attack_template() if attack else None
        self._attack_fps = (Fraction(str(attack.tier_mbps)) * 10**6 / self._attack_stream.bits
                            if attack else Fraction(0))

    # -- setup ---------------------------------------------------------------

    def target_node(self) -> NodeConfig:
        if self.attack.target is Target.ODU:
            return self.odu
        return self.topo.orus[0]

    def _attack_template(self) -> Stream:
        a = self.attack
        dst = a.dst_mac.octets if a.dst_mac else self.target_node().mac.octets
        s = a.source
        if isinstance(s, (addr.SpoofedPeer, addr.Fixed)):
            src: Optional[bytes] = s.mac.octets
        elif isinstance(s, addr.RandomPerPacket):
            src = None
        elif isinstance(s, addr.Broadcast):
            src = BROADCAST.octets
        elif isinstance(s, addr.SameAsDestination):
            src = dst
        else:
            raise ConfigError(f"unsupported source strategy {s!r}")
        size = a.frame_bytes or (self.topo.attack_cplane_bytes if a.traffic.is_cplane
                                 else self.topo.attack_uplane_bytes)
        return Stream(src=src, dst=dst, ingress=self.topo.attacker_port, plane=PLANE_OF[a.traffic],
                      frames=0.0, bits=size * 8)

    def _flow_ends(self, flow: FlowKey) -> Tuple[NodeConfig, NodeConfig, str]:
        kind, ru = flow
        from_odu, plane = FLOW_KINDS[kind]
        oru = self.topo.nodes[ru]
        return (self.odu, oru, plane) if from_odu else (oru, self.odu, plane)

    def _nominal(self, kind: str) -> Tuple[float, int]:
        t = self.topo.traffic
        return {"c": (t.cplane_fps, t.cplane_bytes), "dl": (t.udl_fps, t.udl_bytes),
                "ul": (t.uul_fps, t.uul_bytes)}[kind]

    # -- frame-level access ----------------------------------------------------

    @property
    def now(self) -> float:
        return float(self.tick * self.tick_seconds)

    def send_frame(self, src: MacAddress, dst: MacAddress, ingress: str, at: Optional[float] = None) -> List[str]:
        """Forward one discrete frame through the switch; returns egress ports."""
        return self.switch.forward(src.octets, dst.octets, ingress, self.now if at is None else at)

    # -- stepping ----------------------------------------------------------------

    def _attack_frames(self, t: int) -> float:
        k = t - self.baseline_ticks
        if self.attack is None or not 0 <= k < self.attack_ticks:
            return 0.0
        per_tick = self._attack_fps * self.tick_seconds
        return float(math.floor(per_tick * (k + 1)) - math.floor(per_tick * k))

    def _forward(self, streams: List[Stream], now: float) -> List[Dict[str, float]]:
        sw = self.switch
        writers: Dict[bytes, Dict[str, float]] = {}
        blocked = []
        for st in streams:
            bad = sw.violates_security(st.src, st.ingress)
            blocked.append(bad)
            if bad:
                sw.security_drops += st.frames
            elif st.src is not None and not is_group(st.src) and st.frames > 0:
                w = writers.setdefault(st.src, {})
                w[st.ingress] = w.get(st.ingress, 0.0) + st.frames
        outs = []
        for st, bad in zip(streams, blocked):
            out: Dict[str, float] = {}
            if not bad and st.frames > 0:
                if is_group(st.dst):
                    shares = {p: 1.0 for p in sw.flood_ports(st.ingress)}
                elif st.dst in writers:
                    w = writers[st.dst]
                    total = sum(w.values())
                    shares = {p: n / total for p, n in w.items()}
                else:
                    port = sw.lookup(st.dst, now)
                    shares = {port: 1.0} if port else {p: 1.0 for p in sw.flood_ports(st.ingress)}
                for p, share in shares.items():
                    if p != st.ingress:  # no hairpin
                        out[p] = st.frames * share
            outs.append(out)
        attacker = self.topo.attacker_port
        for src, w in sorted(writers.items()):
            port = max(sorted(w), key=lambda p: (w[p], p == attacker))
            sw.learn(src, port, now)
        for st, bad in zip(streams, blocked):
            if st.src is None and not bad:
                sw.anonymous_learned += int(round(st.frames))
        sw.expire(now)
        return outs

    def step(self) -> TickResult:
        """Advance one tick."""
        t = self.tick
        now = self.now
        dt = float(self.tick_seconds)
        jitter = self.topo.traffic.jitter

        streams: List[Stream] = []
        offered: Dict[FlowKey, float] = {}
        for flow in self.flows:
            fps, size = self._nominal(flow[0])
            u = self.rng.uniform(-1.0, 1.0)
            frames = fps * dt * (1.0 + jitter * u)
            offered[flow] = frames
            sender, receiver, plane = self._flow_ends(flow)
            if self.nodes[sender.name].active:
                streams.append(Stream(sender.mac.octets, receiver.mac.octets, sender.name, plane,
                                      frames, size * 8, flow))
        n_attack = self._attack_frames(t)
        if n_attack:
            st = self._attack_stream
            streams.append(Stream(st.src, st.dst, st.ingress, st.plane, n_attack, st.bits))

        outs = self._forward(streams, now)

        inbox: Dict[str, Dict[str, List[Tuple[Stream, float]]]] = {
            n: {p: [] for p in PLANES} for n in self.nodes}
        misdelivered = {f: 0.0 for f in self.flows}
        for st, out in zip(streams, outs):
            for port, n in out.items():
                if port in self.nodes and (is_group(st.dst) or self.nodes[port].cfg.mac.octets == st.dst):
                    inbox[port][st.plane].append((st, n))
            if st.flow is not None:
                lost = st.frames - out.get(self.port_of_mac[st.dst], 0.0)
                misdelivered[st.flow] = lost
                self.misdelivered_total[st.flow] += lost
                stick = self._receiving_policy(st.flow).stickiness
                if stick is not None and self.misdelivered_total[st.flow] > stick:
                    self.latched.add(st.flow)

        processed: Dict[FlowKey, float] = {f: 0.0 for f in self.flows}
        for name, node in self.nodes.items():
            if node.active:
                self._consume(node, inbox[name], offered, processed, dt)

        goodput = self._goodput(processed)
        for node in self.nodes.values():
            if node.status is NodeStatus.RESTARTING:
                node.restart_left -= 1
        statuses = {}
        for name, node in self.nodes.items():
            if node.active:
                node.status = NodeStatus.DEGRADED if any(
                    p.degraded for p in node.planes.values()) else NodeStatus.UP
            statuses[name] = node.status
        gates_closed = any(goodput[f] < processed[f] - _EPS for f in self.flows)
        crashed = any(s in (NodeStatus.RESTARTING, NodeStatus.DOWN) for s in statuses.values())
        degraded = crashed or bool(self.latched) or gates_closed or any(
            s is not NodeStatus.UP for s in statuses.values())
        for node in self.nodes.values():
            if node.status is NodeStatus.RESTARTING and node.restart_left <= 0:
                node.status = NodeStatus.UP
        self.tick += 1
        return TickResult(t, n_attack, offered, goodput, misdelivered, degraded, crashed, statuses)

    def _receiving_policy(self, flow: FlowKey):
        _, receiver, plane = self._flow_ends(flow)
        return receiver.planes[plane]

    def _consume(self, node: NodeState, planes_in: Dict[str, List[Tuple[Stream, float]]],
                 offered: Dict[FlowKey, float], processed: Dict[FlowKey, float], dt: float) -> None:
        cfg = node.cfg
        own = cfg.mac.octets
        peers = self.peers[cfg.name]
        restart_ticks = int(round(cfg.restart_seconds * self.ticks_per_second))
        trigger_restart = crash = False
        done: Dict[FlowKey, float] = {}
        for plane in PLANES:
            pol = cfg.planes[plane]
            ps = node.planes[plane]
            legit = 0.0
            accepted = rejected = fault = 0.0
            for st, n in planes_in[plane]:
                if st.flow is not None:
                    legit += n
                    ps.flows.add(st.src)
                    continue
                if st.src == own:
                    fault += n
                if pol.accept == "any" or (st.src is not None and st.src in peers):
                    accepted += n
                    if st.src is None:
                        ps.anonymous_flows += n
                    else:
                        ps.flows.add(st.src)
                else:
                    rejected += n
            spend = pol.cost * (legit + accepted) + pol.reject_cost * rejected
            budget = pol.budget * dt if pol.budget is not None else math.inf
            ps.spend = spend
            share = 1.0 if spend <= budget else budget / spend
            for st, n in planes_in[plane]:
                if st.flow is not None:
                    done[st.flow] = done.get(st.flow, 0.0) + n * share

            overloaded = spend > budget * (1 + _EPS)
            if pol.crash_ratio is not None and spend > pol.crash_ratio * budget:
                crash = True
            ps.overload_run = ps.overload_run + 1 if overloaded else 0
            if ps.overload_run >= self.hold_ticks:
                trigger_restart = True
            if pol.flow_capacity is not None and ps.occupancy > pol.flow_capacity:
                trigger_restart = True
            degraded = False
            if pol.self_fault and fault > 0:
                degraded = True
                ps.fault_run += 1
                if ps.fault_run >= self.hold_ticks:
                    trigger_restart = True
            else:
                ps.fault_run = 0
            mine = self.inbound[(cfg.name, plane)]
            want = sum(offered[f] for f in mine)
            got = sum(done.get(f, 0.0) for f in mine)
            if pol.theta is not None and want > 0 and 1 - got / want > pol.theta:
                degraded = True
            if any(f in self.latched for f in mine):
                degraded = True
            ps.degraded = degraded

        if crash:
            node.status = NodeStatus.DOWN
        elif trigger_restart:
            node.restart(restart_ticks)
        else:
            for f, n in done.items():
                processed[f] += n

    def _goodput(self, processed: Dict[FlowKey, float]) -> Dict[FlowKey, float]:
        odu = self.nodes[self.odu.name]
        out = {}
        for flow in self.flows:
            kind, ru = flow
            oru = self.nodes[ru]
            ok = odu.active and oru.active
            d = "dl" if kind == "c" else kind
            for is_odu, plane in _GATES[d]:
                node = odu if is_odu else oru
                if node.planes[plane].degraded:
                    ok = False
            if ("c", ru) in self.latched or (d, ru) in self.latched:
                ok = False
            out[flow] = processed[flow] if ok else 0.0
        return out

    def run(self) -> SimOutcome:
        per_tick: List[TickResult] = []
        timeline: List[Tuple[float, str, str]] = []
        last = {n: NodeStatus.UP for n in self.nodes}
        while self.tick < self.total_ticks:
            r = self.step()
            per_tick.append(r)
            for n, s in r.statuses.items():
                if s is not last[n]:
                    timeline.append((round(r.tick * float(self.tick_seconds), 6), n, s.value))
                    last[n] = s
        return self._summarize(per_tick, timeline)

    def _summarize(self, per_tick: List[TickResult], timeline) -> SimOutcome:
        tps = self.ticks_per_second
        seconds = len(per_tick) // tps
        throughput: Dict[str, List[int]] = {c.value: [] for c in _SERIES_OF.values()}
        bler: List[float] = []
        for s in range(seconds):
            chunk = per_tick[s * tps:(s + 1) * tps]
            for kind, cls in _SERIES_OF.items():
                bits = self._nominal(kind)[1] * 8
                frames = sum(r.goodput[f] for r in chunk for f in self.flows if f[0] == kind)
                throughput[cls.value].append(int(round(frames * bits)))
            offered = sum(r.offered[f] for r in chunk for f in self.flows if f[0] != "c")
            lost = offered - sum(r.goodput[f] for r in chunk for f in self.flows if f[0] != "c")
            bler.append(round(max(0.0, lost / offered), 6) if offered else 0.0)

        drops, recoveries = [], []
        directions = {}
        base_n = self.topo.baseline_seconds
        for d, cls in (("DL", FrameClass.UPLANE_DL), ("UL", FrameClass.UPLANE_UL)):
            series = throughput[cls.value]
            baseline = sum(series[:base_n]) / base_n if base_n else 0.0
            first, rec = detect_drop_and_recovery(series, baseline, self.topo.drop_fraction,
                                                  self.topo.recovery_hold_seconds)
            directions[d] = (first, rec)
            if first is not None:
                drops.append(first)
                recoveries.append(rec)
        first_drop = min(drops) if drops else None
        recovered = (max(recoveries) if recoveries and None not in recoveries else None)

        any_degraded = any(r.degraded for r in per_tick)
        crashed = any(r.crashed for r in per_tick)
        if crashed:
            severity = Severity.CRASH_RESTART
        elif not any_degraded and first_drop is None:
            severity = Severity.NONE
        else:
            tail_ok = not any(r.degraded for r in per_tick[-self.hold_ticks:])
            healed = tail_ok and (first_drop is None or recovered is not None)
            severity = Severity.DEGRADED_RECOVERED if healed else Severity.DEGRADED_UNRECOVERED
        return SimOutcome(
            verdict=Verdict.PASS if severity is Severity.NONE else Verdict.FAIL,
            severity=severity,
            first_drop_second=first_drop,
            recovered_second=recovered,
            throughput=throughput,
            block_error_proxy=bler,
            state_timeline=timeline,
            restarts={n: s.restarts for n, s in self.nodes.items()},
            directions=directions,
            attack=attack_record(self.attack) if self.attack else None,
        )


def run_scenario(topology: Topology, attack: Optional[AttackSpec] = None, seed: Optional[int] = None) -> SimOutcome:
    """Simulate baseline, attack window and post-attack observation for one attack."""
    if attack is not None and attack.target is Target.ORU and not topology.orus:
        raise ConfigError("topology has no O-RU to target")
    return Simulation(topology, attack, seed).run()
