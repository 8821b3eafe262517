"""Campaign orchestration: the TIFG 7.2.2 six-cell suite, the extended
54-cell matrix, and the loopback tool-compliance self-check."""

from __future__ import annotations

import concurrent.futures
import datetime
import importlib.resources
import json
import logging
import os
import threading
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import addr
from .attacks import ATTACK_CLASSES, TIERS_MBPS, AttackSpec, Target, tier_label
from .codec import BROADCAST, FrameClass, MacAddress
from .pcapio import EditSet, synthesize_template
from .ports import LoopbackPort, LoopbackReceiver, PortError, RealClock, SimClock, open_port
from .rx import meter
from .tx import RateSchedule, expected_frames, run_attack
from .victim import Topology, load_topology, run_scenario

log = logging.getLogger(__name__)

CALIBRATION_ENV = "FHDOS_CALIBRATION_DIR"
SOURCE_ORDER = ("peer", "random", "same-as-dst", "broadcast")
SUITES = ("tifg722", "extended")


class BackendUnavailable(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Calibration lookup


def resolve_calibration(name: str) -> str:
    """A path as given, else a file in ``$FHDOS_CALIBRATION_DIR``, else a shipped calibration."""
    if os.path.exists(name):
        return name
    env_dir = os.environ.get(CALIBRATION_ENV)
    if env_dir and os.path.exists(os.path.join(env_dir, name)):
        return os.path.join(env_dir, name)
    shipped = importlib.resources.files("fhdos") / "calibrations" / name
    if shipped.is_file():
        return str(shipped)
    raise BackendUnavailable(f"calibration {name!r} not found (looked in ., ${CALIBRATION_ENV}, shipped files)")


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True, order=True)
class CellKey:
    target: str
    traffic: str
    source: str
    tier_mbps: float

    def record(self) -> dict:
        return {"target": self.target, "traffic": self.traffic, "source": self.source,
                "tierMbps": self.tier_mbps}


@dataclass
class CellResult:
    key: CellKey
    verdict: Optional[str]  # None when a live run had nothing to observe
    severity: Optional[str]
    first_drop_second: Optional[int]
    recovered_second: Optional[int]
    stability: Optional[float] = None
    detail: dict = field(default_factory=dict)

    def record(self) -> dict:
        rec = {"kind": "cell", **self.key.record(), "verdict": self.verdict, "severity": self.severity,
               "firstDropSecond": self.first_drop_second, "recoveredSecond": self.recovered_second,
               "detail": self.detail}
        if self.stability is not None:
            rec["stability"] = self.stability
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "CellResult":
        key = CellKey(rec["target"], rec["traffic"], rec["source"], rec["tierMbps"])
        return cls(key, rec["verdict"], rec["severity"], rec["firstDropSecond"], rec["recoveredSecond"],
                   rec.get("stability"), rec.get("detail", {}))


@dataclass
class MatrixReport:
    suite: str
    metadata: dict = field(default_factory=dict)
    rows: Dict[CellKey, CellResult] = field(default_factory=dict)

    def add(self, result: CellResult) -> None:
        if result.key in self.rows:
            raise ValueError(f"duplicate cell {result.key}")
        self.rows[result.key] = result

    def __len__(self) -> int:
        return len(self.rows)

    def verdicts(self) -> Dict[CellKey, Optional[str]]:
        return {k: r.verdict for k, r in self.rows.items()}

    def records(self) -> List[dict]:
        head = {"kind": "campaign", "suite": self.suite, **self.metadata}
        return [head] + [self.rows[k].record() for k in _ordered(self.rows)]


def _source_rank(label: str) -> int:
    return SOURCE_ORDER.index(label) if label in SOURCE_ORDER else len(SOURCE_ORDER)


def _ordered(keys: Iterable[CellKey]) -> List[CellKey]:
    targets = [t.value for t in Target]
    classes = [c.value for c in ATTACK_CLASSES]
    return sorted(keys, key=lambda k: (targets.index(k.target), classes.index(k.traffic),
                                       _source_rank(k.source), k.source, k.tier_mbps))


def source_heading(label: str, target: str) -> str:
    """Column heading as the node whose address is used."""
    peer = Target.ORU.value if target == Target.ODU.value else Target.ODU.value
    return {"peer": peer, "random": "Random MACs", "same-as-dst": target,
            "broadcast": "Broadcast"}.get(label, label)


def render_grid(report: MatrixReport) -> str:
    """One table per target: rows are traffic types, columns source x tier."""
    blocks = []
    for target in [t.value for t in Target]:
        keys = [k for k in report.rows if k.target == target]
        if not keys:
            continue
        sources = sorted({k.source for k in keys}, key=lambda s: (_source_rank(s), s))
        tiers = sorted({k.tier_mbps for k in keys})
        classes = [c.value for c in ATTACK_CLASSES if any(k.traffic == c.value for k in keys)]
        width = 10
        cols = [(s, t) for s in sources for t in tiers]
        lines = [f"Destination MAC: {target}",
                 "Source MAC".ljust(12) + "".join(source_heading(s, target).ljust(width * len(tiers))
                                                  for s in sources).rstrip(),
                 "Volume".ljust(12) + "".join(tier_label(t).ljust(width) for _, t in cols).rstrip()]
        for c in classes:
            cells = []
            for s, t in cols:
                r = report.rows.get(CellKey(target, c, s, t))
                cells.append((r.verdict or "n/a") if r else "-")
            lines.append(c.ljust(12) + "".join(v.ljust(width) for v in cells).rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def emit_report(report: MatrixReport, fmt: str, path) -> str:
    """Write ``text`` (grid) or ``structured`` (JSON lines, one record per cell)."""
    if fmt == "text":
        body = render_grid(report) + "\n"
    elif fmt == "structured":
        body = "".join(json.dumps(r, sort_keys=True) + "\n" for r in report.records())
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w") as f:
        f.write(body)
    return os.fspath(path)


def load_report(path) -> MatrixReport:
    with open(path) as f:
        recs = [json.loads(line) for line in f if line.strip()]
    if not recs or recs[0].get("kind") != "campaign":
        raise ValueError(f"{path}: not a structured campaign report")
    head = dict(recs[0])
    head.pop("kind")
    report = MatrixReport(suite=head.pop("suite"), metadata=head)
    for rec in recs[1:]:
        report.add(CellResult.from_record(rec))
    return report


# ---------------------------------------------------------------------------
# Backends


def source_label(strategy: addr.SourceMacStrategy) -> str:
    if isinstance(strategy, addr.SpoofedPeer):
        return "peer"
    if isinstance(strategy, addr.RandomPerPacket):
        return "random"
    if isinstance(strategy, addr.SameAsDestination):
        return "same-as-dst"
    if isinstance(strategy, addr.Broadcast):
        return "broadcast"
    return addr.format_strategy(strategy)


def cell_seed(seed: int, key: CellKey) -> int:
    text = f"{key.target}|{key.traffic}|{key.source}|{key.tier_mbps:g}"
    return (seed + zlib.crc32(text.encode())) & 0xFFFFFFFF


@dataclass
class SimBackend:
    topology: Topology
    calibration: str = ""

    name = "sim"

    @classmethod
    def from_calibration(cls, name: str) -> "SimBackend":
        path = resolve_calibration(name)
        try:
            return cls(load_topology(path), os.path.basename(path))
        except OSError as exc:
            raise BackendUnavailable(str(exc)) from exc

    @property
    def odu_mac(self) -> MacAddress:
        return self.topology.odu.mac

    @property
    def oru_mac(self) -> MacAddress:
        return self.topology.orus[0].mac

    def node_macs(self) -> frozenset:
        return frozenset(n.mac.octets for n in self.topology.nodes.values())

    def run_cell(self, attack: AttackSpec, seed: int) -> CellResult:
        out = run_scenario(self.topology, attack, seed=seed)
        return CellResult(
            key=None, verdict=out.verdict.value, severity=out.severity.value,
            first_drop_second=out.first_drop_second, recovered_second=out.recovered_second,
            detail={"directions": {d: list(v) for d, v in out.directions.items()},
                    "restarts": out.restarts})

    def metadata(self) -> dict:
        return {"backend": "sim", "calibration": self.calibration}


@dataclass
class PortBackend:
    """Live backend: transmit through a port and judge by legit traffic seen on ``receiver``.

    Anything other than the loopback port needs ``authorized``.  Without a
    receiver the attack is sent but no verdict can be formed.
    """

    port: str
    odu: MacAddress
    oru: MacAddress
    authorized: bool = False
    allow_broadcast_dst: bool = False
    receiver: Optional[object] = None
    baseline_seconds: int = 5
    post_seconds: int = 30
    drop_fraction: float = 0.5
    clock: Optional[object] = None

    name = "port"

    def __post_init__(self):
        if self.port != "loopback" and not self.authorized:
            raise BackendUnavailable("live ports need explicit authorization (--i-am-authorized)")

    @property
    def odu_mac(self) -> MacAddress:
        return self.odu

    @property
    def oru_mac(self) -> MacAddress:
        return self.oru

    def node_macs(self) -> frozenset:
        return frozenset({self.odu.octets, self.oru.octets})

    def run_cell(self, attack: AttackSpec, seed: int) -> CellResult:
        dst = attack.dst_mac or (self.odu if attack.target is Target.ODU else self.oru)
        if dst.is_multicast and not self.allow_broadcast_dst:
            raise BackendUnavailable(f"refusing group destination {dst} on a live port")
        clock = self.clock or RealClock()
        try:
            port = open_port(self.port, clock=clock)
        except PortError as exc:
            raise BackendUnavailable(str(exc)) from exc
        size = attack.frame_bytes or (64 if attack.traffic.is_cplane else 1000)
        template = synthesize_template(attack.traffic, size, dst=dst, seed=seed)
        edits = EditSet(src=attack.source)
        observed = {}
        watcher = None
        total = self.baseline_seconds + attack.duration_seconds + self.post_seconds
        if self.receiver is not None:
            start = clock.now()

            def watch():
                observed["report"] = meter(self.receiver, total, start=start, clock=clock, incoming_only=True)

            watcher = threading.Thread(target=watch, daemon=True)
            watcher.start()
        try:
            clock.sleep_until(clock.now() + self.baseline_seconds)
            stats = run_attack([template], RateSchedule.constant(attack.tier_mbps, attack.duration_seconds),
                               port, edits, clock=clock)
            clock.sleep_until(clock.now() + self.post_seconds)
        finally:
            port.close()
        detail = {"framesSent": stats.frames, "keptPace": stats.kept_pace}
        if watcher is None:
            return CellResult(None, None, None, None, None, detail=detail)
        watcher.join()
        rep = observed["report"].detect(self.baseline_seconds, self.drop_fraction,
                                        classes=(FrameClass.UPLANE_DL, FrameClass.UPLANE_UL))
        if rep.first_drop_second is None:
            verdict, severity = "PASS", "None"
        else:
            verdict = "FAIL"
            severity = "DegradedRecovered" if rep.recovered_second is not None else "DegradedUnrecovered"
        return CellResult(None, verdict, severity, rep.first_drop_second, rep.recovered_second, detail=detail)

    def metadata(self) -> dict:
        return {"backend": f"port:{self.port}"}


def parse_backend(text: str, authorized: bool = False, odu: Optional[MacAddress] = None,
                  oru: Optional[MacAddress] = None):
    """``sim:<calibration>`` or ``port:<ifname>``."""
    kind, _, arg = text.partition(":")
    if kind == "sim":
        return SimBackend.from_calibration(arg or "topology1.cfg")
    if kind == "port" and arg:
        if odu is None or oru is None:
            raise BackendUnavailable("port backends need --odu-mac and --oru-mac")
        return PortBackend(arg, odu, oru, authorized=authorized)
    raise BackendUnavailable(f"bad backend {text!r}; expected sim:<cfg> or port:<ifname>")


# ---------------------------------------------------------------------------
# Campaigns


@dataclass
class CampaignConfig:
    backend: object
    seed: int = 0
    duration_seconds: int = 30
    repeats: int = 1
    include_broadcast: bool = False
    tiers: Sequence[float] = TIERS_MBPS
    odu_mac: Optional[MacAddress] = None
    workers: int = 1


def _strategy(label: str, seed: int, peer: MacAddress, exclude: frozenset) -> addr.SourceMacStrategy:
    if label == "peer":
        return addr.SpoofedPeer(peer)
    if label == "random":
        return addr.RandomPerPacket(seed=seed, exclude=exclude)
    if label == "same-as-dst":
        return addr.SameAsDestination()
    if label == "broadcast":
        return addr.Broadcast()
    raise ValueError(label)


def _plan(config: CampaignConfig, targets, classes, sources) -> List[Tuple[CellKey, AttackSpec, int]]:
    be = config.backend
    exclude = be.node_macs()
    plan = []
    for target in targets:
        dst = (config.odu_mac or be.odu_mac) if target is Target.ODU else be.oru_mac
        peer = be.oru_mac if target is Target.ODU else be.odu_mac
        for cls in classes:
            for label in sources:
                for tier in config.tiers:
                    key = CellKey(target.value, cls.value, label, float(tier))
                    seed = cell_seed(config.seed, key)
                    attack = AttackSpec(target, cls, _strategy(label, seed, peer, exclude), tier,
                                        config.duration_seconds, dst_mac=dst)
                    plan.append((key, attack, seed))
    return plan


def _run_one(backend, attack: AttackSpec, seed: int, repeats: int) -> CellResult:
    results = [backend.run_cell(attack, seed + i) for i in range(repeats)]
    first = results[0]
    if repeats > 1:
        counts = Counter(r.verdict for r in results)
        first.stability = round(counts[first.verdict] / repeats, 6)
    return first


def run_campaign(config: CampaignConfig, suite: str, targets, classes, sources) -> MatrixReport:
    be = config.backend
    meta = {"seed": config.seed, "durationSeconds": config.duration_seconds, "repeats": config.repeats,
            **be.metadata()}
    if not isinstance(be, SimBackend):
        # live runs carry wall-clock stamps; sim reports stay byte-identical
        meta["started"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    report = MatrixReport(suite=suite, metadata=meta)
    plan = _plan(config, targets, classes, sources)
    if config.workers > 1 and isinstance(be, SimBackend):
        with concurrent.futures.ProcessPoolExecutor(config.workers) as pool:
            futures = [pool.submit(_run_one, be, a, s, config.repeats) for _, a, s in plan]
            results = [f.result() for f in futures]
    else:
        results = [_run_one(be, a, s, config.repeats) for _, a, s in plan]
    for (key, _, _), res in zip(plan, results):
        res.key = key
        report.add(res)
    if not isinstance(be, SimBackend):
        report.metadata["finished"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return report


def run_tifg_722(config: CampaignConfig) -> MatrixReport:
    """C-Plane DL toward the O-DU: {spoofed O-RU, random} x tiers."""
    return run_campaign(config, "tifg722", [Target.ODU], [FrameClass.CPLANE_DL], ["peer", "random"])


def run_extended_matrix(config: CampaignConfig) -> MatrixReport:
    """Both targets x three traffic types x {peer, random, same-as-dst[, broadcast]} x tiers.

    The broadcast column has no reference outcome to compare against.
    """
    sources = ["peer", "random", "same-as-dst"] + (["broadcast"] if config.include_broadcast else [])
    return run_campaign(config, "extended", list(Target), list(ATTACK_CLASSES), sources)


# ---------------------------------------------------------------------------
# Tool compliance self-check


@dataclass
class Check:
    name: str
    passed: bool
    expected: str
    measured: str


@dataclass
class ComplianceReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def render(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: expected {c.expected}; measured {c.measured}"
                 for c in self.checks]
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


VERIFY_DST = MacAddress.parse("02:00:00:00:00:10")
VERIFY_PEER = MacAddress.parse("02:00:00:00:00:21")


def tier_window(tier_mbps: float) -> int:
    """Seconds metered per tier: 30 s at 10 Mbps, shorter at higher tiers."""
    return max(1, min(30, int(300 // tier_mbps)))


def _loopback_run(template, schedule: RateSchedule, edits: Optional[EditSet], track_sources: bool = False):
    port = LoopbackPort(clock=SimClock(), receiver=LoopbackReceiver())
    stats = run_attack([template], schedule, port, edits)
    rep = meter(port.receiver, schedule.duration_seconds, start=0.0, track_sources=track_sources)
    return stats, rep


def verify_tool_compliance(tiers: Sequence[float] = TIERS_MBPS, mac_check_seconds: int = 1) -> ComplianceReport:
    """Self-checks on the loopback port: MAC strategies, tier rates, U-Plane capability."""
    report = ComplianceReport()
    cp64 = synthesize_template(FrameClass.CPLANE_DL, 64, dst=VERIFY_DST, src=VERIFY_PEER)
    sched = RateSchedule.constant(10, mac_check_seconds)

    # (a) source address variations
    cases = [
        ("spoofed O-RU source", addr.SpoofedPeer(VERIFY_PEER)),
        ("random source", addr.RandomPerPacket(seed=1, exclude=frozenset({VERIFY_DST.octets, VERIFY_PEER.octets}))),
        ("broadcast source", addr.Broadcast()),
    ]
    for name, strategy in cases:
        stats, rep = _loopback_run(cp64, sched, EditSet(src=strategy), track_sources=True)
        total = rep.total().frames
        srcs = rep.sources
        if isinstance(strategy, addr.RandomPerPacket):
            bad = sum(n for s, n in srcs.items()
                      if s[0] & 0x01 or not s[0] & 0x02 or s in strategy.exclude)
            ok = total == stats.frames and total > 0 and bad == 0 and len(srcs) == total
            report.checks.append(Check(
                f"MAC strategy: {name}", ok,
                f"{stats.frames} frames, all distinct unicast locally administered, none a node address",
                f"{total} frames, {len(srcs)} distinct, {bad} invalid"))
        else:
            want = (BROADCAST if isinstance(strategy, addr.Broadcast) else strategy.mac).octets
            hits = srcs.get(want, 0)
            ok = total == stats.frames and total > 0 and hits == total
            report.checks.append(Check(
                f"MAC strategy: {name}", ok, f"100% of {stats.frames} frames from {MacAddress(want)}",
                f"{hits}/{total} frames ({100.0 * hits / total if total else 0:.1f}%)"))

    # (b) volumetric tiers
    for tier in tiers:
        secs = tier_window(tier)
        schedule = RateSchedule.constant(tier, secs)
        stats, rep = _loopback_run(cp64, schedule, None)
        want = expected_frames(schedule, 64)
        got = rep.total().frames
        per_sec = rep.series(unit="frames")
        worst = max(abs(n - float(schedule.bits_at(s)) / 512) for s, n in enumerate(per_sec))
        ok = got == want == stats.frames and worst <= 1.0 and len(per_sec) == secs
        report.checks.append(Check(
            f"tier {tier_label(tier)} over {secs}s", ok,
            f"{want} frames received, per-second deviation <= 1 frame",
            f"{got} frames received, worst per-second deviation {worst:.2f} frames"))

    # (c) U-Plane capability
    for cls in (FrameClass.UPLANE_DL, FrameClass.UPLANE_UL):
        tmpl = synthesize_template(cls, 1000, dst=VERIFY_DST, src=VERIFY_PEER)
        stats, rep = _loopback_run(tmpl, sched, None)
        hist = rep.class_histogram()
        total = sum(hist.values())
        ok = total == stats.frames > 0 and hist.get(cls, 0) == total
        report.checks.append(Check(
            f"U-Plane capability: {cls.value}", ok, f"100% of {stats.frames} frames classified {cls.value}",
            ", ".join(f"{c.value}={n}" for c, n in sorted(hist.items(), key=lambda x: x[0].value)) or "nothing"))
    return report
