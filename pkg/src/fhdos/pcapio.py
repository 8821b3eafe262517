"""Classic pcap reading/writing and attack-capture synthesis."""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import BinaryIO, Iterable, Iterator, List, Optional, Union

from . import addr
from .codec import (
    DIR_DL, DIR_UL, ETH_HEADER_LEN, MIN_FRAME_LEN, RE_PER_PRB, VLAN_TAG_LEN, VLAN_TPID,
    CPlaneMessage, CSection1, FrameClass, MacAddress, UPlaneMessage, USection, VlanTag,
    classify, ecpri_extent, encode_frame, message_frame, payload_offset, wire_length,
)

MAGIC_USEC = 0xA1B2C3D4
MAGIC_NSEC = 0xA1B23C4D
LINKTYPE_ETHERNET = 1
DEFAULT_SNAPLEN = 65535
_GLOBAL = "IHHiIII"
_RECORD = "IIII"


class PcapFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PacketRecord:
    ts_sec: int
    ts_usec: int
    data: bytes
    orig_len: Optional[int] = None

    @property
    def timestamp(self) -> float:
        return self.ts_sec + self.ts_usec / 1e6

    @property
    def wire_len(self) -> int:
        return wire_length(self.data)


def iter_pcap(stream: BinaryIO) -> Iterator[PacketRecord]:
    head = stream.read(24)
    if len(head) < 24:
        raise PcapFormatError("file too short for a pcap global header")
    for order in "<>":
        (magic,) = struct.unpack(order + "I", head[:4])
        if magic in (MAGIC_USEC, MAGIC_NSEC):
            break
    else:
        raise PcapFormatError(f"bad pcap magic {head[:4].hex()}")
    nano = magic == MAGIC_NSEC
    _, major, minor, _, _, _, linktype = struct.unpack(order + _GLOBAL, head)
    if major != 2:
        raise PcapFormatError(f"unsupported pcap version {major}.{minor}")
    if linktype != LINKTYPE_ETHERNET:
        raise PcapFormatError(f"link type {linktype} is not Ethernet")
    rec = struct.Struct(order + _RECORD)
    while True:
        hdr = stream.read(16)
        if not hdr:
            return
        if len(hdr) < 16:
            raise PcapFormatError("truncated record header")
        sec, frac, caplen, origlen = rec.unpack(hdr)
        data = stream.read(caplen)
        if len(data) < caplen:
            raise PcapFormatError("truncated record data")
        yield PacketRecord(sec, frac // 1000 if nano else frac, data, origlen)


def read_pcap(path) -> List[PacketRecord]:
    with open(path, "rb") as f:
        return list(iter_pcap(f))


def write_pcap(path, records: Iterable[PacketRecord], snaplen: int = DEFAULT_SNAPLEN) -> int:
    """Write records in native byte order; returns the record count."""
    n = 0
    rec = struct.Struct("=" + _RECORD)
    with open(path, "wb") as f:
        f.write(struct.pack("=" + _GLOBAL, MAGIC_USEC, 2, 4, 0, 0, snaplen, LINKTYPE_ETHERNET))
        for r in records:
            orig = r.orig_len if r.orig_len is not None else len(r.data)
            f.write(rec.pack(r.ts_sec, r.ts_usec, len(r.data), orig))
            f.write(r.data)
            n += 1
    return n


# ---------------------------------------------------------------------------
# Templates and edits


@dataclass(frozen=True)
class FrameTemplate:
    record: PacketRecord
    cls: FrameClass

    @property
    def wire_len(self) -> int:
        return self.record.wire_len


def template_from_record(record: PacketRecord) -> FrameTemplate:
    return FrameTemplate(record=record, cls=classify(record.data))


STRIP_VLAN = "strip"


@dataclass(frozen=True)
class EditSet:
    """Address/VLAN rewrites applied to each emitted frame.

    ``src`` is a fixed address or a source strategy; ``vlan`` is a tag to set,
    :data:`STRIP_VLAN` to remove the tag, or ``None`` to leave it alone.
    """

    src: Optional[Union[MacAddress, "addr.SourceMacStrategy"]] = None
    dst: Optional[MacAddress] = None
    vlan: Optional[Union[VlanTag, str]] = None

    @property
    def strategy(self) -> Optional["addr.SourceMacStrategy"]:
        if self.src is None:
            return None
        if isinstance(self.src, MacAddress):
            return addr.Fixed(self.src)
        return self.src


def apply_static_edits(data: bytes, edits: Optional[EditSet]) -> bytes:
    """Apply destination and VLAN edits; the source is handled per packet."""
    if edits is None:
        return data
    buf = bytearray(data)
    if edits.dst is not None:
        buf[0:6] = edits.dst.octets
    if edits.vlan is not None:
        buf = bytearray(_retag(bytes(buf), edits.vlan))
    return bytes(buf)


def _retag(data: bytes, vlan: Union[VlanTag, str]) -> bytes:
    tagged = payload_offset(data) == ETH_HEADER_LEN + VLAN_TAG_LEN
    if vlan == STRIP_VLAN:
        if not tagged:
            return data
        out = data[:12] + data[16:]
        return out + bytes(max(0, MIN_FRAME_LEN - len(out)))
    if not isinstance(vlan, VlanTag):
        raise TypeError(f"bad VLAN edit {vlan!r}")
    tag = struct.pack("!HH", VLAN_TPID, vlan.tci)
    if tagged:
        return data[:12] + tag + data[16:]
    extent = ecpri_extent(data)
    out = data[:12] + tag + data[12:]
    if extent is not None:
        # reuse padding so a padded minimum-size frame keeps its size
        out = out[:max(extent + VLAN_TAG_LEN, MIN_FRAME_LEN, len(out) - VLAN_TAG_LEN)]
    return out


def set_source(data: bytes, src: bytes) -> bytes:
    return data[:6] + src + data[12:]


def build_attack_pcap(template: FrameTemplate, volume_mbit: float, edits: Optional[EditSet] = None,
                      start_ts: float = 0.0) -> List[PacketRecord]:
    """Replicate ``template`` until the requested volume (in Mbit of L2 frame bits) is met.

    The count is ceil(volume / frame bits) so the delivered volume never falls
    short.  Timestamps are spread evenly across one second.
    """
    if not volume_mbit > 0:
        raise ValueError("volume must be positive")
    if template.cls is FrameClass.OTHER:
        raise ValueError("template is not a fronthaul C/U-Plane frame")
    base = apply_static_edits(template.record.data, edits)
    bits = wire_length(base) * 8
    n = math.ceil(Fraction(str(volume_mbit)) * 10**6 / bits)
    strategy = edits.strategy if edits else None
    if strategy is None:
        frames = [base] * n
    else:
        dst = MacAddress(base[0:6])
        srcs = addr.sources_for(strategy, dst, 0, n)
        head, tail = base[:6], base[12:]
        frames = [head + s + tail for s in srcs]
    out = []
    for i, data in enumerate(frames):
        usec = int(start_ts * 1_000_000) + (i * 1_000_000) // n
        out.append(PacketRecord(usec // 1_000_000, usec % 1_000_000, data))
    return out


# ---------------------------------------------------------------------------
# Synthesized templates

DEFAULT_DST = MacAddress.parse("02:00:00:00:00:01")
DEFAULT_SRC = MacAddress.parse("02:00:00:00:00:02")

_CPLANE_BASE = ETH_HEADER_LEN + 8 + 8  # eth + eCPRI + C-Plane common header
_UPLANE_BASE = ETH_HEADER_LEN + 8 + 4  # eth + eCPRI + U-Plane common header


def minimum_size(cls: FrameClass) -> int:
    if cls.is_cplane:
        return wire_length(_CPLANE_BASE + 8)
    if cls.is_uplane:
        return wire_length(_UPLANE_BASE + 4 + RE_PER_PRB * 4)
    raise ValueError(f"cannot synthesize a {cls} template")


def synthesize_template(cls: FrameClass, size_bytes: int, dst: MacAddress = DEFAULT_DST,
                        src: MacAddress = DEFAULT_SRC, eaxc_id: int = 0, seed: int = 0,
                        vlan: Optional[VlanTag] = None) -> FrameTemplate:
    """Build a valid frame of ``cls`` whose wire size (with FCS) is exactly ``size_bytes``.

    The message grows by whole sections (C-Plane) or PRBs (U-Plane) and the
    remainder is Ethernet padding.
    """
    cls = FrameClass(cls)
    low = minimum_size(cls) + (VLAN_TAG_LEN if vlan and cls.is_uplane else 0)
    if size_bytes < low:
        raise ValueError(f"{cls} template needs at least {low} bytes, got {size_bytes}")
    tag = VLAN_TAG_LEN if vlan else 0
    room = size_bytes - 4 - tag  # bytes available before the FCS
    if room > ETH_HEADER_LEN + 1500:
        raise ValueError(f"{size_bytes} bytes exceeds the maximum frame size")
    rng = random.Random(seed)
    direction = DIR_DL if cls in (FrameClass.CPLANE_DL, FrameClass.UPLANE_DL) else DIR_UL
    if cls.is_cplane:
        # the minimum-size frame carries a single section, larger ones grow
        nsec = 1 if room <= MIN_FRAME_LEN else max(1, min(255, (room - _CPLANE_BASE) // 8))
        sections = tuple(CSection1(section_id=i + 1, start_prbc=(i * 4) % 1024, num_prbc=4,
                                   beam_id=rng.randrange(1 << 15)) for i in range(nsec))
        msg = CPlaneMessage(sections=sections, data_direction=direction, eaxc_id=eaxc_id)
    else:
        nprb = min(255, (room - _UPLANE_BASE - 4) // (RE_PER_PRB * 4))
        iq = tuple((rng.randrange(-2048, 2048), rng.randrange(-2048, 2048))
                   for _ in range(RE_PER_PRB * nprb))
        msg = UPlaneMessage(sections=(USection(section_id=1, num_prbu=nprb, iq=iq),),
                            data_direction=direction, eaxc_id=eaxc_id)
    data = encode_frame(message_frame(msg, dst, src, vlan))
    data += bytes(size_bytes - wire_length(data))
    assert wire_length(data) == size_bytes
    return FrameTemplate(record=PacketRecord(0, 0, data), cls=cls)


def parse_template_spec(text: str) -> FrameTemplate:
    """``<class>:<size>``, e.g. ``CPlaneDL:64``."""
    name, _, size = text.partition(":")
    lookup = {c.value.lower(): c for c in FrameClass if c is not FrameClass.OTHER}
    cls = lookup.get(name.strip().lower())
    if cls is None:
        raise ValueError(f"unknown class {name!r}; choose from {', '.join(c.value for c in lookup.values())}")
    return synthesize_template(cls, int(size) if size else minimum_size(cls))
