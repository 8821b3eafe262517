"""Paced transmission of forged fronthaul traffic.

Each second is cut into ``SLOTS_PER_SECOND`` slots.  Every slot adds its share
of the second's bit budget to a credit counter and emits whole frames while
the credit covers the next frame; the remainder carries over, so after any
number of seconds the emitted bits trail the schedule by less than one frame.
Rates count L2 wire bits (frame plus FCS, padded to 64 bytes).
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Union

from . import addr
from .codec import MacAddress, wire_length
from .pcapio import EditSet, FrameTemplate, PacketRecord, apply_static_edits
from .ports import PortError, SimClock

log = logging.getLogger(__name__)

SLOTS_PER_SECOND = 100


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class Constant:
    mbps: float


@dataclass(frozen=True)
class Incremental:
    start_mbps: float
    step_mbps: float


@dataclass(frozen=True)
class RateSchedule:
    mode: Union[Constant, Incremental]
    duration_seconds: int = 30

    def __post_init__(self):
        if self.duration_seconds < 1:
            raise ValueError("duration must be at least one second")
        if isinstance(self.mode, Constant):
            if not self.mode.mbps > 0:
                raise ValueError("rate must be positive")
        elif not (self.mode.start_mbps > 0 and self.mode.step_mbps >= 0):
            raise ValueError("ramp start must be positive and step non-negative")

    def rate_at(self, second: int) -> Fraction:
        """Target rate in Mbit/s for ``second`` (0-based)."""
        if isinstance(self.mode, Constant):
            return _frac(self.mode.mbps)
        return _frac(self.mode.start_mbps) + _frac(self.mode.step_mbps) * second

    def bits_at(self, second: int) -> Fraction:
        return self.rate_at(second) * 10**6

    @classmethod
    def constant(cls, mbps: float, duration: int = 30) -> "RateSchedule":
        return cls(Constant(mbps), duration)

    @classmethod
    def ramp(cls, start: float, step: float, duration: int = 30) -> "RateSchedule":
        return cls(Incremental(start, step), duration)


def expected_frames(schedule: RateSchedule, frame_bytes: int) -> int:
    """Frames a uniform-size run emits over the whole schedule."""
    total = sum(schedule.bits_at(s) for s in range(schedule.duration_seconds))
    return int(total // (frame_bytes * 8))


@dataclass
class SecondStats:
    second: int
    frames: int = 0
    bytes: int = 0
    bits: int = 0  # wire bits
    scheduled_bits: Fraction = Fraction(0)


@dataclass
class TxStats:
    per_second: List[SecondStats] = field(default_factory=list)
    wall_seconds: float = 0.0
    late_slots: int = 0
    aborted: bool = False
    error: Optional[str] = None

    @property
    def frames(self) -> int:
        return sum(s.frames for s in self.per_second)

    @property
    def bytes(self) -> int:
        return sum(s.bytes for s in self.per_second)

    @property
    def bits(self) -> int:
        return sum(s.bits for s in self.per_second)

    @property
    def scheduled_bits(self) -> Fraction:
        return sum((s.scheduled_bits for s in self.per_second), Fraction(0))

    @property
    def shortfall_bits(self) -> Fraction:
        return self.scheduled_bits - self.bits

    @property
    def achieved_mbps(self) -> float:
        if self.wall_seconds <= 0:
            return 0.0
        return self.bits / self.wall_seconds / 1e6

    @property
    def scheduled_mbps(self) -> float:
        n = len(self.per_second)
        return float(self.scheduled_bits) / n / 1e6 if n else 0.0

    @property
    def kept_pace(self) -> bool:
        """False when the host fell behind the schedule in wall-clock time."""
        return self.late_slots == 0


class AttackAborted(RuntimeError):
    def __init__(self, message: str, stats: TxStats):
        super().__init__(message)
        self.stats = stats


def _frame_bytes(item) -> bytes:
    if isinstance(item, FrameTemplate):
        return item.record.data
    if isinstance(item, PacketRecord):
        return item.data
    return bytes(item)


def run_attack(records: Sequence[Union[PacketRecord, FrameTemplate, bytes]], schedule: RateSchedule,
               port, edits: Optional[EditSet] = None, clock=None,
               on_second: Optional[Callable[[TxStats], None]] = None) -> TxStats:
    """Replay ``records`` cyclically through ``port`` following ``schedule``.

    The source strategy in ``edits`` is evaluated per emitted frame with the
    running frame count as packet index.  ``on_second`` receives a snapshot
    of the stats after every second.
    """
    if not records:
        raise ValueError("nothing to send")
    clock = clock or getattr(port, "clock", None) or SimClock()
    frames = [apply_static_edits(_frame_bytes(r), edits) for r in records]
    strategy = edits.strategy if edits else None
    per_packet = strategy is not None and addr.is_per_packet(strategy)
    if strategy is not None and not per_packet:
        frames = [f[:6] + addr.source_for(strategy, MacAddress(f[:6]), 0).octets + f[12:]
                  for f in frames]
    bits = [wire_length(f) * 8 for f in frames]
    uniform = len(set(bits)) == 1
    nframes = len(frames)
    one_dst = len({f[:6] for f in frames}) == 1

    stats = TxStats()
    credit = Fraction(0)
    emitted = 0
    cursor = 0
    slot = Fraction(1, SLOTS_PER_SECOND)
    t0 = clock.now()
    for s in range(schedule.duration_seconds):
        sec = SecondStats(second=s, scheduled_bits=schedule.bits_at(s))
        stats.per_second.append(sec)
        slot_bits = sec.scheduled_bits / SLOTS_PER_SECOND
        for k in range(SLOTS_PER_SECOND):
            due = t0 + float(s + k * slot)
            if clock.now() > due + float(slot):
                stats.late_slots += 1
            clock.sleep_until(due)
            credit += slot_bits
            if uniform:
                n = int(credit // bits[0])
                credit -= n * bits[0]
            else:
                n = 0
                while credit >= bits[(cursor + n) % nframes]:
                    credit -= bits[(cursor + n) % nframes]
                    n += 1
            if not n:
                continue
            if nframes == 1:
                batch = frames * n
            else:
                batch = [frames[(cursor + i) % nframes] for i in range(n)]
            if per_packet:
                batch = _stamp_sources(batch, strategy, emitted, one_dst)
            try:
                port.send_many(batch)
            except PortError as exc:
                stats.aborted, stats.error = True, str(exc)
                stats.wall_seconds = clock.now() - t0
                raise AttackAborted(f"port send failed after {emitted} frames: {exc}", stats) from exc
            sec.frames += n
            sec.bytes += sum(map(len, batch))
            sec.bits += n * bits[0] if uniform else sum(bits[(cursor + i) % nframes] for i in range(n))
            emitted += n
            cursor = (cursor + n) % nframes
        if on_second is not None:
            on_second(copy.deepcopy(stats))
    port.flush()
    clock.sleep_until(t0 + schedule.duration_seconds)
    stats.wall_seconds = clock.now() - t0
    if not stats.kept_pace:
        log.warning("host fell behind schedule: %.1f Mbit/s achieved of %.1f scheduled (%d late slots)",
                    stats.achieved_mbps, stats.scheduled_mbps, stats.late_slots)
    return stats


def _stamp_sources(batch: List[bytes], strategy, start: int, one_dst: bool) -> List[bytes]:
    if one_dst:
        srcs = addr.sources_for(strategy, MacAddress(batch[0][:6]), start, len(batch))
        return [f[:6] + s + f[12:] for f, s in zip(batch, srcs)]
    return [f[:6] + addr.source_for(strategy, MacAddress(f[:6]), start + i).octets + f[12:]
            for i, f in enumerate(batch)]
