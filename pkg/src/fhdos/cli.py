"""Command-line entry point: forge, dissect, attack, meter, verify, matrix."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from . import addr
from .codec import (
    CodecError, CPlaneMessage, VlanTag, as_mac, classify, decode_frame,
    decode_message, wire_length,
)
from .pcapio import (
    STRIP_VLAN, EditSet, PcapFormatError, build_attack_pcap, parse_template_spec, read_pcap,
    template_from_record, write_pcap,
)
from .ports import PortError, RawLinkReceiver, RealClock, SimClock, open_port
from .rx import meter, meter_pcap
from .tx import AttackAborted, RateSchedule, run_attack

log = logging.getLogger("fhdos")


def _vlan(text: str):
    if text == STRIP_VLAN:
        return STRIP_VLAN
    vid, _, pcp = text.partition(":")
    return VlanTag(vid=int(vid), pcp=int(pcp) if pcp else 0)


def _edits(args) -> Optional[EditSet]:
    dst = as_mac(args.dst) if args.dst else None
    exclude = frozenset({dst.octets}) if dst else frozenset()
    src = addr.parse_strategy(args.src, exclude) if args.src else None
    vlan = _vlan(args.vlan) if args.vlan else None
    if src is None and dst is None and vlan is None:
        return None
    return EditSet(src=src, dst=dst, vlan=vlan)


def _template(args):
    if args.template:
        return parse_template_spec(args.template)
    records = read_pcap(args.pcap)
    if not records:
        raise ValueError(f"{args.pcap} holds no packets")
    return template_from_record(records[0])


def dissect_frame(data: bytes) -> dict:
    """Decoded view of one frame as plain data."""
    frame = decode_frame(data)
    out = {"dst": str(frame.dst), "src": str(frame.src), "ethertype": f"0x{frame.ethertype:04x}",
           "wireBytes": wire_length(data), "class": classify(data).value}
    if frame.vlan is not None:
        out["vlan"] = {"vid": frame.vlan.vid, "pcp": frame.vlan.pcp, "dei": frame.vlan.dei}
    try:
        msg = decode_message(frame)
    except CodecError as exc:
        out["error"] = str(exc)
        return out
    out["eaxcId"] = msg.eaxc_id
    out["seqId"] = msg.seq_id
    out["dataDirection"] = "DL" if msg.data_direction else "UL"
    out["frameId"], out["subframeId"], out["slotId"] = msg.frame_id, msg.subframe_id, msg.slot_id
    if isinstance(msg, CPlaneMessage):
        out["sectionType"] = msg.section_type
        out["startSymbolId"] = msg.start_symbol_id
        out["sections"] = [{
            "sectionId": s.section_id, "startPrbc": s.start_prbc, "numPrbc": s.num_prbc,
            "reMask": f"0x{s.re_mask:03x}", "numSymbol": s.num_symbol, "beamId": s.beam_id,
            **({"extType1": {"bfwIqWidth": s.ext.bfw_iq_width, "bfwCompMeth": s.ext.bfw_comp_meth,
                             "weights": len(s.ext.weights)}} if s.ext else {}),
        } for s in msg.sections]
    else:
        out["symbolId"] = msg.symbol_id
        out["sections"] = [{"sectionId": s.section_id, "startPrbu": s.start_prbu, "numPrbu": s.num_prbu,
                            "iqSamples": len(s.iq)} for s in msg.sections]
    return out


def _render_dissection(i: int, ts: float, d: dict) -> str:
    head = f"#{i} t={ts:.6f} {d['src']} -> {d['dst']} {d['class']} {d['wireBytes']}B"
    if "vlan" in d:
        head += f" vlan={d['vlan']['vid']}"
    if "error" in d:
        return head + f"  [{d['error']}]"
    if "eaxcId" not in d:
        return head
    lines = [head + f" eAxC=0x{d['eaxcId']:04x} seq={d['seqId']} frame={d['frameId']} "
                    f"subframe={d['subframeId']} slot={d['slotId']}"]
    for s in d["sections"]:
        lines.append("    " + " ".join(f"{k}={v}" for k, v in s.items()))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands


def cmd_forge(args) -> int:
    template = _template(args)
    records = build_attack_pcap(template, args.volume, _edits(args))
    n = write_pcap(args.out, records)
    print(f"wrote {n} {template.cls.value} frames of {records[0].wire_len} bytes to {args.out}")
    return 0


def cmd_dissect(args) -> int:
    records = read_pcap(args.pcap)
    hist = {}
    for i, r in enumerate(records):
        if args.limit is not None and i >= args.limit:
            break
        d = dissect_frame(r.data)
        hist[d["class"]] = hist.get(d["class"], 0) + 1
        if args.json:
            print(json.dumps({"index": i, "ts": r.timestamp, **d}, sort_keys=True))
        else:
            print(_render_dissection(i, r.timestamp, d))
    if not args.json:
        print("classes: " + ", ".join(f"{k}={v}" for k, v in sorted(hist.items())))
    return 0


def _schedule(args) -> RateSchedule:
    if args.ramp:
        start, _, step = args.ramp.partition(",")
        return RateSchedule.ramp(float(start), float(step or 0), args.duration)
    return RateSchedule.constant(args.rate, args.duration)


def _require_authorized(port: str, args) -> None:
    if port != "loopback" and not args.i_am_authorized:
        raise PermissionError(f"refusing to transmit on {port!r} without --i-am-authorized")


def cmd_attack(args) -> int:
    _require_authorized(args.port, args)
    edits = _edits(args)
    if args.port != "loopback" and edits and edits.dst and edits.dst.is_multicast and not args.allow_group_dst:
        raise PermissionError("refusing a group destination on a live port (use --allow-group-dst)")
    if args.pcap and not args.template:
        items = read_pcap(args.pcap)
    else:
        items = [_template(args)]
    clock = RealClock() if (args.realtime or args.port != "loopback") else SimClock()
    port = open_port(args.port, clock=clock)
    try:
        stats = run_attack(items, _schedule(args), port, edits, clock=clock)
    finally:
        port.close()
    print(f"sent {stats.frames} frames / {stats.bytes} bytes in {stats.wall_seconds:.3f}s "
          f"({stats.achieved_mbps:.3f} Mbit/s achieved, {stats.scheduled_mbps:.3f} scheduled)")
    if not stats.kept_pace:
        print(f"warning: host fell behind schedule in {stats.late_slots} slots", file=sys.stderr)
    return 0


def cmd_meter(args) -> int:
    if args.pcap:
        rep = meter_pcap(read_pcap(args.pcap), track_sources=args.sources)
    else:
        receiver = RawLinkReceiver(args.port)
        try:
            rep = meter(receiver, args.duration, clock=receiver.clock, track_sources=args.sources)
        finally:
            receiver.close()
    rep.detect(args.baseline, args.drop_fraction)
    print(rep.render_text())
    if args.sources and rep.sources:
        print(f"distinct sources: {len(rep.sources)}")
    if args.out:
        rep.write_jsonl(args.out)
    return 0


def cmd_verify(args) -> int:
    from .runner import verify_tool_compliance
    tiers = [float(t) for t in args.tiers.split(",")] if args.tiers else None
    rep = verify_tool_compliance(**({"tiers": tiers} if tiers else {}))
    print(rep.render())
    return 0 if rep.passed else 1


def cmd_matrix(args) -> int:
    from .runner import (CampaignConfig, emit_report, parse_backend, render_grid, run_extended_matrix,
                         run_tifg_722)
    odu = as_mac(args.odu_mac) if args.odu_mac else None
    oru = as_mac(args.oru_mac) if args.oru_mac else None
    backend = parse_backend(args.backend, authorized=args.i_am_authorized, odu=odu, oru=oru)
    config = CampaignConfig(backend=backend, seed=args.seed, duration_seconds=args.duration,
                            repeats=args.repeats, include_broadcast=args.broadcast, odu_mac=odu,
                            workers=args.workers)
    run = run_tifg_722 if args.suite == "tifg722" else run_extended_matrix
    report = run(config)
    print(render_grid(report))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        emit_report(report, "text", os.path.join(args.out, f"{args.suite}.txt"))
        path = emit_report(report, "structured", os.path.join(args.out, f"{args.suite}.jsonl"))
        print(f"report written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fhdos", description="O-RAN fronthaul C/U-Plane DoS test toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def frame_source(sp, required=True):
        g = sp.add_mutually_exclusive_group(required=required)
        g.add_argument("--template", help="synthesized frame, <class>:<wire bytes>, e.g. CPlaneDL:64")
        g.add_argument("--pcap", help="capture whose frames are used as templates")

    def edit_args(sp):
        sp.add_argument("--src", help="source strategy: spoof:<mac>, random[:seed], broadcast, same-as-dst, fixed:<mac>")
        sp.add_argument("--dst", help="destination MAC rewrite")
        sp.add_argument("--vlan", help="VLAN tag <vid>[:<pcp>] or 'strip'")

    f = sub.add_parser("forge", help="write an attack capture of a given volume")
    frame_source(f)
    edit_args(f)
    f.add_argument("--volume", type=float, default=10.0, help="Mbit of L2 frame bits (default 10)")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_forge)

    d = sub.add_parser("dissect", help="decode the frames of a capture")
    d.add_argument("pcap")
    d.add_argument("--limit", type=int)
    d.add_argument("--json", action="store_true", help="one JSON object per frame")
    d.set_defaults(func=cmd_dissect)

    a = sub.add_parser("attack", help="transmit paced traffic through a port")
    frame_source(a)
    edit_args(a)
    rate = a.add_mutually_exclusive_group()
    rate.add_argument("--rate", type=float, default=10.0, help="constant Mbit/s (default 10)")
    rate.add_argument("--ramp", help="incremental schedule <start>,<step> in Mbit/s")
    a.add_argument("--duration", type=int, default=30)
    a.add_argument("--port", default="loopback", help="'loopback' or an interface name")
    a.add_argument("--realtime", action="store_true", help="pace loopback runs in wall-clock time")
    a.add_argument("--i-am-authorized", action="store_true",
                   help="confirm you are authorized to attack the network behind --port")
    a.add_argument("--allow-group-dst", action="store_true")
    a.set_defaults(func=cmd_attack)

    m = sub.add_parser("meter", help="classify and measure received traffic")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--port", help="interface to capture on")
    src.add_argument("--pcap", help="meter a capture file instead")
    m.add_argument("--duration", type=float, default=30.0)
    m.add_argument("--baseline", type=int, default=5, help="baseline seconds for drop detection")
    m.add_argument("--drop-fraction", type=float, default=0.5)
    m.add_argument("--sources", action="store_true", help="count source addresses")
    m.add_argument("--out", help="structured per-second report (JSON lines)")
    m.set_defaults(func=cmd_meter)

    v = sub.add_parser("verify", help="loopback self-check of MAC strategies, tiers and U-Plane support")
    v.add_argument("--tiers", help="comma-separated Mbit/s tiers (default 10,100,1000)")
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("matrix", help="run a test campaign")
    x.add_argument("--suite", choices=("tifg722", "extended"), required=True)
    x.add_argument("--backend", default="sim:topology1.cfg", help="sim:<calibration> or port:<ifname>")
    x.add_argument("--out", help="directory for the text and structured reports")
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--duration", type=int, default=30, help="attack seconds per cell")
    x.add_argument("--repeats", type=int, default=1, help="runs per cell with swept seeds")
    x.add_argument("--broadcast", action="store_true", help="add a broadcast-source column")
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--odu-mac")
    x.add_argument("--oru-mac")
    x.add_argument("--i-am-authorized", action="store_true")
    x.set_defaults(func=cmd_matrix)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, PortError, PcapFormatError, AttackAborted, RuntimeError) as exc:
        # RuntimeError covers an unavailable campaign backend
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
