"""Receive-side classification, per-second throughput and sequence gaps."""

from __future__ import annotations

import collections
import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .codec import FrameClass, classify, payload_offset, wire_length

RECOVERY_HOLD_SECONDS = 3
_CACHE_LIMIT = 1 << 16


@dataclass
class ClassCount:
    frames: int = 0
    bits: int = 0


def detect_drop_and_recovery(series: Sequence[float], baseline_bits: float, drop_fraction: float = 0.5,
                             hold: int = RECOVERY_HOLD_SECONDS) -> Tuple[Optional[int], Optional[int]]:
    """Return ``(first_drop_second, recovered_second)``.

    A drop is the first second below ``drop_fraction * baseline_bits``.
    Recovery is the first later second at or above the threshold that stays
    there for ``hold`` consecutive seconds.
    """
    if not 0 < drop_fraction < 1:
        raise ValueError("drop_fraction must lie in (0, 1)")
    threshold = drop_fraction * baseline_bits
    first = next((s for s, v in enumerate(series) if v < threshold), None)
    if first is None:
        return None, None
    for s in range(first + 1, len(series) - hold + 1):
        if all(v >= threshold for v in series[s:s + hold]):
            return first, s
    return first, None


@dataclass
class MeterReport:
    per_second: List[Dict[FrameClass, ClassCount]]
    seq_gaps: Dict[int, int]
    sources: Optional[collections.Counter] = None
    first_drop_second: Optional[int] = None
    recovered_second: Optional[int] = None

    def total(self, cls: Optional[FrameClass] = None) -> ClassCount:
        out = ClassCount()
        for sec in self.per_second:
            for c, n in sec.items():
                if cls is None or c is cls:
                    out.frames += n.frames
                    out.bits += n.bits
        return out

    def class_histogram(self) -> Dict[FrameClass, int]:
        hist: Dict[FrameClass, int] = collections.Counter()
        for sec in self.per_second:
            for c, n in sec.items():
                hist[c] += n.frames
        return dict(hist)

    def series(self, classes: Optional[Iterable[FrameClass]] = None, unit: str = "bits") -> List[int]:
        wanted = set(classes) if classes is not None else None
        return [sum(getattr(n, unit) for c, n in sec.items() if wanted is None or c in wanted)
                for sec in self.per_second]

    def detect(self, baseline_seconds: int = 5, drop_fraction: float = 0.5,
               classes: Optional[Iterable[FrameClass]] = None) -> "MeterReport":
        bits = self.series(classes)
        head = bits[:baseline_seconds]
        baseline = sum(head) / len(head) if head else 0.0
        self.first_drop_second, self.recovered_second = detect_drop_and_recovery(
            bits, baseline, drop_fraction)
        return self

    def records(self) -> List[dict]:
        out = []
        for s, sec in enumerate(self.per_second):
            for c in sorted(sec, key=lambda c: c.value):
                out.append({"second": s, "class": c.value, "frames": sec[c].frames, "bits": sec[c].bits})
        return out

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            for rec in self.records():
                f.write(json.dumps(rec, sort_keys=True) + "\n")

    def render_text(self) -> str:
        classes = [c for c in FrameClass]
        lines = ["second " + " ".join(f"{c.value:>12}" for c in classes) + "        kbps"]
        for s, sec in enumerate(self.per_second):
            row = " ".join(f"{sec[c].frames if c in sec else 0:>12}" for c in classes)
            kbps = sum(n.bits for n in sec.values()) / 1000
            lines.append(f"{s:>6} {row} {kbps:>11.1f}")
        if self.seq_gaps:
            lines.append("sequence gaps: " + ", ".join(
                f"eAxC 0x{k:04x}={v}" for k, v in sorted(self.seq_gaps.items())))
        if self.first_drop_second is not None:
            rec = self.recovered_second
            lines.append(f"first drop at second {self.first_drop_second}, "
                         + (f"recovered at second {rec}" if rec is not None else "not recovered"))
        return "\n".join(lines)


class Meter:
    """Incremental meter: feed frames with receive timestamps, then :meth:`report`."""

    def __init__(self, start: float = 0.0, track_sources: bool = False):
        self.start = start
        self.track_sources = track_sources
        self._seconds: List[Dict[FrameClass, ClassCount]] = []
        self._last_seq: Dict[Tuple[int, int], int] = {}
        self._gaps: Dict[int, int] = collections.Counter()
        self._sources = collections.Counter() if track_sources else None
        self._cache: Dict[bytes, FrameClass] = {}

    def _bucket(self, ts: float) -> Dict[FrameClass, ClassCount]:
        s = max(0, math.floor(ts - self.start + 1e-9))
        while len(self._seconds) <= s:
            self._seconds.append({})
        return self._seconds[s]

    def _classify(self, frame: bytes) -> FrameClass:
        # classification never depends on the address bytes
        key = frame[12:]
        cls = self._cache.get(key)
        if cls is None:
            if len(self._cache) >= _CACHE_LIMIT:
                self._cache.clear()
            cls = self._cache[key] = classify(frame)
        return cls

    def feed_batch(self, ts: float, frames: Sequence[bytes]) -> None:
        bucket = self._bucket(ts)
        for frame in frames:
            cls = self._classify(frame)
            count = bucket.get(cls)
            if count is None:
                count = bucket[cls] = ClassCount()
            count.frames += 1
            count.bits += wire_length(frame) * 8
            if cls is not FrameClass.OTHER:
                self._track_seq(frame)
            if self._sources is not None:
                self._sources[frame[6:12]] += 1

    def feed(self, ts: float, frame: bytes) -> None:
        self.feed_batch(ts, (frame,))

    def _track_seq(self, frame: bytes) -> None:
        off = payload_offset(frame)
        msg_type = frame[off + 1]
        eaxc = (frame[off + 4] << 8) | frame[off + 5]
        seq = frame[off + 6]
        key = (msg_type, eaxc)
        last = self._last_seq.get(key)
        if last is not None and seq != (last + 1) & 0xFF:
            self._gaps[eaxc] += 1
        self._last_seq[key] = seq

    def pad_to(self, seconds: int) -> None:
        while len(self._seconds) < seconds:
            self._seconds.append({})

    def report(self) -> MeterReport:
        return MeterReport(per_second=[dict(s) for s in self._seconds], seq_gaps=dict(self._gaps),
                           sources=collections.Counter(self._sources) if self._sources is not None else None)


def meter(receiver, duration_seconds: float, start: Optional[float] = None, clock=None,
          incoming_only: bool = False, track_sources: bool = False) -> MeterReport:
    """Collect from ``receiver`` for ``duration_seconds`` and summarize.

    Loopback receivers are drained of everything already queued; live
    receivers are read until the clock passes the window.
    """
    clock = clock or getattr(receiver, "clock", None)
    if start is None:
        start = clock.now() if clock is not None else 0.0
    m = Meter(start=start, track_sources=track_sources)
    end = start + duration_seconds

    def consume(timeout):
        for ts, frames, outgoing in receiver.batches(timeout=timeout):
            if ts >= end:
                return
            if not (incoming_only and outgoing):
                m.feed_batch(ts, frames)
            if clock is not None and clock.now() >= end:
                return

    if clock is None:
        consume(None)
    else:
        while clock.now() < end:
            consume(min(0.2, max(0.01, end - clock.now())))
    m.pad_to(int(math.ceil(duration_seconds)))
    return m.report()


def meter_pcap(records, track_sources: bool = False) -> MeterReport:
    """Meter a capture using its own timestamps (second 0 = first packet)."""
    records = list(records)
    m = Meter(start=float(records[0].ts_sec) if records else 0.0, track_sources=track_sources)
    for r in records:
        m.feed(r.timestamp, r.data)
    return m.report()
