"""Ethernet / 802.1Q / eCPRI framing and O-RAN fronthaul C/U-Plane messages.

Wire layouts are big-endian, most significant bit first.  C-Plane support is
limited to Section Type 1 with an optional beamforming-weight extension
(extType 1); U-Plane sections carry uncompressed 16-bit IQ samples.

Frames are handled without the 4-byte FCS.  ``wire_length`` adds it back,
which is what rate and volume arithmetic counts: a minimal C-Plane frame is
60 bytes here and 64 bytes on the wire.
"""

from __future__ import annotations

import enum
import logging
import struct
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

log = logging.getLogger(__name__)

ECPRI_ETHERTYPE = 0xAEFE
VLAN_TPID = 0x8100
ETH_HEADER_LEN = 14
VLAN_TAG_LEN = 4
MIN_FRAME_LEN = 60
FCS_LEN = 4
MTU = 1500

ECPRI_HEADER_LEN = 8
# eCPRI payload size counts the bytes after the 4-byte common header, so it
# includes the 2-byte PC_ID/RTC_ID and the 2-byte SEQ_ID.
ECPRI_ID_SEQ_LEN = 4

MSG_IQ_DATA = 0
MSG_RT_CONTROL = 2

CPLANE_COMMON_LEN = 8
CSECTION1_LEN = 8
UPLANE_COMMON_LEN = 4
USECTION_HEADER_LEN = 4
RE_PER_PRB = 12
IQ_SAMPLE_LEN = 4

DIR_UL = 0
DIR_DL = 1


class CodecError(ValueError):
    """Base class for encode/decode failures."""


class ParseError(CodecError):
    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class OversizeError(CodecError):
    pass


class UnsupportedSectionError(ParseError):
    pass


def _check_range(name: str, value: int, bits: int, signed: bool = False) -> None:
    if signed:
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    else:
        lo, hi = 0, (1 << bits) - 1
    if not isinstance(value, int) or not lo <= value <= hi:
        raise CodecError(f"{name}={value!r} out of range [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# Addresses and L2 framing


@dataclass(frozen=True)
class MacAddress:
    octets: bytes

    def __post_init__(self):
        if len(self.octets) != 6:
            raise ValueError(f"MAC address needs 6 octets, got {len(self.octets)}")
        object.__setattr__(self, "octets", bytes(self.octets))

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6 or not all(1 <= len(p) <= 2 for p in parts):
            raise ValueError(f"not a MAC address: {text!r}")
        try:
            return cls(bytes(int(p, 16) for p in parts))
        except ValueError:
            raise ValueError(f"not a MAC address: {text!r}") from None

    @property
    def is_multicast(self) -> bool:
        return bool(self.octets[0] & 0x01)

    @property
    def is_broadcast(self) -> bool:
        return self.octets == b"\xff" * 6

    @property
    def is_local(self) -> bool:
        return bool(self.octets[0] & 0x02)

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)

    def __repr__(self) -> str:
        return f"MacAddress('{self}')"


BROADCAST = MacAddress(b"\xff" * 6)


def as_mac(value: Union[MacAddress, str, bytes]) -> MacAddress:
    if isinstance(value, MacAddress):
        return value
    if isinstance(value, str):
        return MacAddress.parse(value)
    return MacAddress(bytes(value))


@dataclass(frozen=True)
class VlanTag:
    vid: int
    pcp: int = 0
    dei: int = 0

    def __post_init__(self):
        if not isinstance(self.vid, int) or not 0 <= self.vid <= 4094:
            raise ValueError(f"VLAN id {self.vid!r} out of range [0, 4094]")
        _check_range("pcp", self.pcp, 3)
        _check_range("dei", self.dei, 1)

    @property
    def tci(self) -> int:
        return (self.pcp << 13) | (self.dei << 12) | self.vid

    @classmethod
    def from_tci(cls, tci: int) -> "VlanTag":
        return cls(vid=tci & 0x0FFF, pcp=tci >> 13, dei=(tci >> 12) & 1)


@dataclass(frozen=True)
class EthFrame:
    dst: MacAddress
    src: MacAddress
    ethertype: int = ECPRI_ETHERTYPE
    payload: bytes = b""
    vlan: Optional[VlanTag] = None

    @property
    def header_len(self) -> int:
        return ETH_HEADER_LEN + (VLAN_TAG_LEN if self.vlan else 0)

    def same_as(self, other: "EthFrame") -> bool:
        """Equality that ignores trailing zero padding of the payload."""
        if (self.dst, self.src, self.ethertype, self.vlan) != (
            other.dst, other.src, other.ethertype, other.vlan):
            return False
        a, b = self.payload, other.payload
        if len(a) > len(b):
            a, b = b, a
        return b[: len(a)] == a and not any(b[len(a):])


def encode_frame(frame: EthFrame, fcs: bool = False) -> bytes:
    """Serialize ``frame``; zero-pads to the 60-byte minimum.

    With ``fcs=True`` the IEEE 802.3 CRC-32 is appended.
    """
    if len(frame.payload) > MTU:
        raise OversizeError(f"payload of {len(frame.payload)} bytes exceeds the {MTU}-byte MTU")
    _check_range("ethertype", frame.ethertype, 16)
    parts = [frame.dst.octets, frame.src.octets]
    if frame.vlan is not None:
        parts.append(struct.pack("!HH", VLAN_TPID, frame.vlan.tci))
    parts.append(struct.pack("!H", frame.ethertype))
    parts.append(frame.payload)
    data = b"".join(parts)
    if len(data) < MIN_FRAME_LEN:
        data += bytes(MIN_FRAME_LEN - len(data))
    if fcs:
        data += struct.pack("<I", zlib.crc32(data) & 0xFFFFFFFF)
    return data


def decode_frame(data: bytes) -> EthFrame:
    if len(data) < ETH_HEADER_LEN:
        raise ParseError("truncated Ethernet header", len(data))
    dst, src = MacAddress(data[0:6]), MacAddress(data[6:12])
    (ethertype,) = struct.unpack_from("!H", data, 12)
    vlan = None
    offset = ETH_HEADER_LEN
    if ethertype == VLAN_TPID:
        if len(data) < ETH_HEADER_LEN + VLAN_TAG_LEN:
            raise ParseError("truncated 802.1Q tag", len(data))
        tci, ethertype = struct.unpack_from("!HH", data, 14)
        if tci & 0x0FFF == 0x0FFF:
            raise ParseError("reserved VLAN id 4095", 14)
        vlan = VlanTag.from_tci(tci)
        offset += VLAN_TAG_LEN
    return EthFrame(dst=dst, src=src, ethertype=ethertype, payload=bytes(data[offset:]), vlan=vlan)


def wire_length(frame_bytes: Union[bytes, int]) -> int:
    """On-the-wire size of an FCS-less frame: padded to 60, plus 4 bytes FCS."""
    n = frame_bytes if isinstance(frame_bytes, int) else len(frame_bytes)
    return max(n, MIN_FRAME_LEN) + FCS_LEN


def payload_offset(data: bytes) -> int:
    """Byte offset of the L2 payload (after an optional 802.1Q tag)."""
    if len(data) >= 16 and data[12] == 0x81 and data[13] == 0x00:
        return ETH_HEADER_LEN + VLAN_TAG_LEN
    return ETH_HEADER_LEN


# ---------------------------------------------------------------------------
# eCPRI


@dataclass(frozen=True)
class EcpriHeader:
    msg_type: int
    payload_size: int
    eaxc_id: int = 0
    seq_id: int = 0
    e_bit: int = 1
    subseq_id: int = 0
    revision: int = 1
    concatenation: int = 0

    def pack(self) -> bytes:
        _check_range("revision", self.revision, 4)
        _check_range("msg_type", self.msg_type, 8)
        _check_range("payload_size", self.payload_size, 16)
        _check_range("eaxc_id", self.eaxc_id, 16)
        _check_range("seq_id", self.seq_id, 8)
        _check_range("e_bit", self.e_bit, 1)
        _check_range("subseq_id", self.subseq_id, 7)
        first = (self.revision << 4) | (self.concatenation & 1)
        return struct.pack("!BBHHBB", first, self.msg_type, self.payload_size,
                           self.eaxc_id, self.seq_id, (self.e_bit << 7) | self.subseq_id)

    @classmethod
    def unpack(cls, data: bytes, offset: int = 0) -> "EcpriHeader":
        if len(data) - offset < ECPRI_HEADER_LEN:
            raise ParseError("truncated eCPRI header", len(data))
        first, msg_type, size, eaxc, seq, ebyte = struct.unpack_from("!BBHHBB", data, offset)
        return cls(msg_type=msg_type, payload_size=size, eaxc_id=eaxc, seq_id=seq,
                   e_bit=ebyte >> 7, subseq_id=ebyte & 0x7F, revision=first >> 4,
                   concatenation=first & 1)

    @property
    def app_len(self) -> int:
        return self.payload_size - ECPRI_ID_SEQ_LEN


@dataclass(frozen=True)
class EaxcLayout:
    """Display-only split of the 16-bit eAxC id into DU port / band-sector / CC / RU port."""

    du_port_bits: int = 4
    band_sector_bits: int = 4
    cc_bits: int = 4
    ru_port_bits: int = 4

    def __post_init__(self):
        if self.du_port_bits + self.band_sector_bits + self.cc_bits + self.ru_port_bits != 16:
            raise ValueError("eAxC bit partition must total 16 bits")

    def split(self, eaxc_id: int) -> dict:
        out = {}
        shift = 16
        for name, bits in (("du_port", self.du_port_bits), ("band_sector", self.band_sector_bits),
                           ("cc", self.cc_bits), ("ru_port", self.ru_port_bits)):
            shift -= bits
            out[name] = (eaxc_id >> shift) & ((1 << bits) - 1)
        return out


def _ecpri_wrap(msg_type: int, app: bytes, eaxc_id: int, seq_id: int) -> bytes:
    header = EcpriHeader(msg_type=msg_type, payload_size=len(app) + ECPRI_ID_SEQ_LEN,
                         eaxc_id=eaxc_id, seq_id=seq_id)
    return header.pack() + app


def _ecpri_unwrap(data: bytes, expected_type: int) -> Tuple[EcpriHeader, bytes]:
    header = EcpriHeader.unpack(data)
    if header.revision != 1:
        raise ParseError(f"unsupported eCPRI revision {header.revision}", 0)
    if header.msg_type != expected_type:
        raise ParseError(f"eCPRI message type {header.msg_type}, expected {expected_type}", 1)
    if header.payload_size < ECPRI_ID_SEQ_LEN:
        raise ParseError(f"eCPRI payload size {header.payload_size} too small", 2)
    end = ECPRI_HEADER_LEN + header.app_len
    if end > len(data):
        raise ParseError(f"eCPRI payload size {header.payload_size} runs past end of data", len(data))
    # anything beyond ``end`` is Ethernet padding
    return header, bytes(data[ECPRI_HEADER_LEN:end])


def _pack_bits(fields: Sequence[Tuple[int, int]]) -> bytes:
    acc = 0
    nbits = 0
    for value, bits in fields:
        acc = (acc << bits) | (value & ((1 << bits) - 1))
        nbits += bits
    return acc.to_bytes(nbits // 8, "big")


def _iq_width_code(width: int) -> int:
    if not 1 <= width <= 16:
        raise CodecError(f"IQ width {width} out of range [1, 16]")
    return width & 0x0F  # 16 is encoded as 0


def _iq_width_value(code: int) -> int:
    return code or 16


# ---------------------------------------------------------------------------
# C-Plane, Section Type 1


@dataclass(frozen=True)
class BfwExt1:
    """Beamforming-weight extension (extType 1), uncompressed weights only."""

    weights: Tuple[Tuple[int, int], ...] = ()
    bfw_iq_width: int = 16
    bfw_comp_meth: int = 0

    @property
    def payload_bits(self) -> int:
        return 2 * self.bfw_iq_width * len(self.weights)

    @property
    def ext_len(self) -> int:
        nbytes = 3 + (self.payload_bits + 7) // 8
        return (nbytes + 3) // 4

    def pack(self) -> bytes:
        if self.bfw_comp_meth != 0:
            raise CodecError("only uncompressed beamforming weights (bfwCompMeth=0) are supported")
        width = self.bfw_iq_width
        code = _iq_width_code(width)
        if not self.weights:
            raise CodecError("extType-1 needs at least one weight pair")
        if self.ext_len > 255:
            raise CodecError(f"extType-1 too long ({self.ext_len} words)")
        if _weights_in_ext(self.ext_len, width) != len(self.weights):
            raise CodecError(
                f"{len(self.weights)} weight pairs at width {width} are not recoverable from extLen; "
                "the 4-byte padding would hold another pair")
        flat = []
        for i, q in self.weights:
            _check_range("bfwI", i, width, signed=True)
            _check_range("bfwQ", q, width, signed=True)
            flat.append((i, width))
            flat.append((q, width))
        bits = self.payload_bits
        tail = (-bits) % 8
        body = _pack_bits(flat + [(0, tail)]) if flat else b""
        out = bytes([0x01, self.ext_len, (code << 4) | self.bfw_comp_meth]) + body
        return out + bytes(self.ext_len * 4 - len(out))


def _weights_in_ext(ext_len: int, width: int) -> int:
    return ((ext_len * 4 - 3) * 8) // (2 * width)


@dataclass(frozen=True)
class CSection1:
    section_id: int
    start_prbc: int = 0
    num_prbc: int = 1
    re_mask: int = 0xFFF
    num_symbol: int = 1
    beam_id: int = 0
    rb: int = 0
    sym_inc: int = 0
    ext: Optional[BfwExt1] = None

    @property
    def ef(self) -> int:
        return 1 if self.ext is not None else 0

    def pack(self) -> bytes:
        _check_range("sectionId", self.section_id, 12)
        _check_range("rb", self.rb, 1)
        _check_range("symInc", self.sym_inc, 1)
        _check_range("startPrbc", self.start_prbc, 10)
        _check_range("numPrbc", self.num_prbc, 8)
        _check_range("reMask", self.re_mask, 12)
        _check_range("numSymbol", self.num_symbol, 4)
        _check_range("beamId", self.beam_id, 15)
        if self.num_symbol < 1:
            raise CodecError("numSymbol must be at least 1")
        head = _pack_bits([
            (self.section_id, 12), (self.rb, 1), (self.sym_inc, 1), (self.start_prbc, 10),
            (self.num_prbc, 8), (self.re_mask, 12), (self.num_symbol, 4),
            (self.ef, 1), (self.beam_id, 15)])
        return head + (self.ext.pack() if self.ext is not None else b"")


@dataclass(frozen=True)
class CPlaneMessage:
    sections: Tuple[CSection1, ...]
    data_direction: int = DIR_DL
    frame_id: int = 0
    subframe_id: int = 0
    slot_id: int = 0
    start_symbol_id: int = 0
    payload_version: int = 1
    filter_index: int = 0
    ud_iq_width: int = 16
    ud_comp_meth: int = 0
    eaxc_id: int = 0
    seq_id: int = 0
    section_type: int = 1


@dataclass(frozen=True)
class USection:
    section_id: int
    iq: Tuple[Tuple[int, int], ...]
    start_prbu: int = 0
    num_prbu: int = 1
    rb: int = 0
    sym_inc: int = 0


@dataclass(frozen=True)
class UPlaneMessage:
    sections: Tuple[USection, ...]
    data_direction: int = DIR_DL
    frame_id: int = 0
    subframe_id: int = 0
    slot_id: int = 0
    symbol_id: int = 0
    payload_version: int = 1
    filter_index: int = 0
    eaxc_id: int = 0
    seq_id: int = 0


def _radio_common(direction, payload_version, filter_index, frame_id, subframe_id,
                  slot_id, symbol_id) -> bytes:
    _check_range("dataDirection", direction, 1)
    _check_range("payloadVersion", payload_version, 3)
    _check_range("filterIndex", filter_index, 4)
    _check_range("frameId", frame_id, 8)
    _check_range("subframeId", subframe_id, 4)
    _check_range("slotId", slot_id, 6)
    _check_range("symbolId", symbol_id, 6)
    return _pack_bits([(direction, 1), (payload_version, 3), (filter_index, 4), (frame_id, 8),
                       (subframe_id, 4), (slot_id, 6), (symbol_id, 6)])


def _unpack_radio_common(app: bytes) -> dict:
    b0, frame_id, rest = app[0], app[1], int.from_bytes(app[2:4], "big")
    return dict(data_direction=b0 >> 7, payload_version=(b0 >> 4) & 0x7, filter_index=b0 & 0xF,
                frame_id=frame_id, subframe_id=rest >> 12, slot_id=(rest >> 6) & 0x3F,
                symbol_id=rest & 0x3F)


def encode_cplane(msg: CPlaneMessage) -> bytes:
    """eCPRI real-time control message (msgType 2) carrying Section Type 1."""
    if msg.section_type != 1:
        raise UnsupportedSectionError(f"section type {msg.section_type} is not supported")
    if not msg.sections:
        raise CodecError("a C-Plane message needs at least one section")
    _check_range("numberOfSections", len(msg.sections), 8)
    _check_range("udCompMeth", msg.ud_comp_meth, 4)
    common = _radio_common(msg.data_direction, msg.payload_version, msg.filter_index,
                           msg.frame_id, msg.subframe_id, msg.slot_id, msg.start_symbol_id)
    ud_comp_hdr = (_iq_width_code(msg.ud_iq_width) << 4) | msg.ud_comp_meth
    app = b"".join([common, bytes([len(msg.sections), 1, ud_comp_hdr, 0])]
                   + [s.pack() for s in msg.sections])
    return _ecpri_wrap(MSG_RT_CONTROL, app, msg.eaxc_id, msg.seq_id)


def decode_cplane(data: bytes, num_bf_weights: Optional[int] = None) -> CPlaneMessage:
    """Inverse of :func:`encode_cplane`.

    Error offsets are relative to the start of ``data`` (the eCPRI header).
    The beamforming weight count is taken from ``num_bf_weights`` when given,
    otherwise derived from extLen and the weight width.
    """
    header, app = _ecpri_unwrap(data, MSG_RT_CONTROL)
    base = ECPRI_HEADER_LEN
    if len(app) < CPLANE_COMMON_LEN:
        raise ParseError("truncated C-Plane common header", base + len(app))
    common = _unpack_radio_common(app)
    nsections, section_type, ud_comp_hdr = app[4], app[5], app[6]
    if section_type != 1:
        raise UnsupportedSectionError(f"section type {section_type} is not supported", base + 5)
    pos = CPLANE_COMMON_LEN
    sections = []
    for _ in range(nsections):
        if len(app) - pos < CSECTION1_LEN:
            raise ParseError("truncated Section Type 1 header", base + len(app))
        w0 = int.from_bytes(app[pos:pos + 4], "big")
        w1 = int.from_bytes(app[pos + 4:pos + 8], "big")
        ef = (w1 >> 15) & 1
        fields = dict(section_id=w0 >> 20, rb=(w0 >> 19) & 1, sym_inc=(w0 >> 18) & 1,
                      start_prbc=(w0 >> 8) & 0x3FF, num_prbc=w0 & 0xFF, re_mask=w1 >> 20,
                      num_symbol=(w1 >> 16) & 0xF, beam_id=w1 & 0x7FFF)
        if fields["num_symbol"] < 1:
            raise ParseError("numSymbol is zero", base + pos + 5)
        pos += CSECTION1_LEN
        ext = None
        if ef:
            ext, pos = _decode_ext1(app, pos, base, num_bf_weights)
        sections.append(CSection1(ext=ext, **fields))
    if pos != len(app):
        raise ParseError(f"{len(app) - pos} unexpected trailing bytes in C-Plane message", base + pos)
    return CPlaneMessage(
        sections=tuple(sections), data_direction=common["data_direction"],
        frame_id=common["frame_id"], subframe_id=common["subframe_id"], slot_id=common["slot_id"],
        start_symbol_id=common["symbol_id"], payload_version=common["payload_version"],
        filter_index=common["filter_index"], ud_iq_width=_iq_width_value(ud_comp_hdr >> 4),
        ud_comp_meth=ud_comp_hdr & 0xF, eaxc_id=header.eaxc_id, seq_id=header.seq_id)


def _decode_ext1(app: bytes, pos: int, base: int, num_weights: Optional[int]):
    if len(app) - pos < 3:
        raise ParseError("truncated section extension header", base + len(app))
    ef, ext_type, ext_len, comp_hdr = app[pos] >> 7, app[pos] & 0x7F, app[pos + 1], app[pos + 2]
    if ext_type != 1:
        raise ParseError(f"unsupported section extension type {ext_type}", base + pos)
    if ef:
        raise ParseError("chained section extensions are not supported", base + pos)
    if ext_len == 0:
        raise ParseError("extLen of zero", base + pos + 1)
    end = pos + ext_len * 4
    if end > len(app):
        raise ParseError(f"extLen {ext_len} runs past the end of the message", base + len(app))
    width, comp_meth = _iq_width_value(comp_hdr >> 4), comp_hdr & 0xF
    if comp_meth != 0:
        raise ParseError(f"bfwCompMeth {comp_meth} is not supported", base + pos + 2)
    capacity = _weights_in_ext(ext_len, width)
    count = capacity if num_weights is None else num_weights
    if count > capacity or (num_weights is not None and BfwExt1(((0, 0),) * count, width).ext_len != ext_len):
        raise ParseError(f"extLen {ext_len} inconsistent with {count} weights of width {width}",
                         base + pos + 1)
    body = int.from_bytes(app[pos + 3:end], "big")
    body_bits = (end - pos - 3) * 8
    used = 2 * width * count
    weights = []
    mask, sign = (1 << width) - 1, 1 << (width - 1)
    shift = body_bits
    for _ in range(2 * count):
        shift -= width
        v = (body >> shift) & mask
        weights.append(v - (1 << width) if v & sign else v)
    if body & ((1 << (body_bits - used)) - 1):
        log.warning("non-zero padding after beamforming weights at offset %d", base + pos)
    pairs = tuple(zip(weights[0::2], weights[1::2]))
    return BfwExt1(weights=pairs, bfw_iq_width=width, bfw_comp_meth=comp_meth), end


# ---------------------------------------------------------------------------
# U-Plane


def encode_uplane(msg: UPlaneMessage) -> bytes:
    """eCPRI IQ data message (msgType 0) with uncompressed 16-bit samples."""
    if not msg.sections:
        raise CodecError("a U-Plane message needs at least one section")
    parts = [_radio_common(msg.data_direction, msg.payload_version, msg.filter_index,
                           msg.frame_id, msg.subframe_id, msg.slot_id, msg.symbol_id)]
    for s in msg.sections:
        _check_range("sectionId", s.section_id, 12)
        _check_range("rb", s.rb, 1)
        _check_range("symInc", s.sym_inc, 1)
        _check_range("startPrbu", s.start_prbu, 10)
        _check_range("numPrbu", s.num_prbu, 8)
        if s.num_prbu == 0:
            raise CodecError("numPrbu=0 (all PRBs) is not generated")
        if len(s.iq) != RE_PER_PRB * s.num_prbu:
            raise CodecError(f"section {s.section_id}: {len(s.iq)} IQ samples, "
                             f"expected {RE_PER_PRB * s.num_prbu}")
        parts.append(_pack_bits([(s.section_id, 12), (s.rb, 1), (s.sym_inc, 1),
                                 (s.start_prbu, 10), (s.num_prbu, 8)]))
        flat = [v for pair in s.iq for v in pair]
        try:
            parts.append(struct.pack(f"!{len(flat)}h", *flat))
        except struct.error as exc:
            raise CodecError(f"section {s.section_id}: IQ sample out of int16 range") from exc
    return _ecpri_wrap(MSG_IQ_DATA, b"".join(parts), msg.eaxc_id, msg.seq_id)


def decode_uplane(data: bytes) -> UPlaneMessage:
    header, app = _ecpri_unwrap(data, MSG_IQ_DATA)
    base = ECPRI_HEADER_LEN
    if len(app) < UPLANE_COMMON_LEN:
        raise ParseError("truncated U-Plane common header", base + len(app))
    common = _unpack_radio_common(app)
    pos = UPLANE_COMMON_LEN
    sections = []
    while pos < len(app):
        if len(app) - pos < USECTION_HEADER_LEN:
            raise ParseError("truncated U-Plane section header", base + len(app))
        w = int.from_bytes(app[pos:pos + 4], "big")
        num_prbu = w & 0xFF
        if num_prbu == 0:
            raise ParseError("numPrbu=0 needs out-of-band carrier configuration", base + pos + 3)
        nsamples = RE_PER_PRB * num_prbu
        start = pos + USECTION_HEADER_LEN
        end = start + nsamples * IQ_SAMPLE_LEN
        if end > len(app):
            raise ParseError(f"IQ data for {num_prbu} PRBs runs past the end of the message",
                             base + len(app))
        flat = struct.unpack_from(f"!{2 * nsamples}h", app, start)
        sections.append(USection(section_id=w >> 20, rb=(w >> 19) & 1, sym_inc=(w >> 18) & 1,
                                 start_prbu=(w >> 8) & 0x3FF, num_prbu=num_prbu,
                                 iq=tuple(zip(flat[0::2], flat[1::2]))))
        pos = end
    if not sections:
        raise ParseError("U-Plane message without sections", base + pos)
    return UPlaneMessage(
        sections=tuple(sections), data_direction=common["data_direction"],
        frame_id=common["frame_id"], subframe_id=common["subframe_id"], slot_id=common["slot_id"],
        symbol_id=common["symbol_id"], payload_version=common["payload_version"],
        filter_index=common["filter_index"], eaxc_id=header.eaxc_id, seq_id=header.seq_id)


# ---------------------------------------------------------------------------
# Classification


class FrameClass(str, enum.Enum):
    CPLANE_DL = "CPlaneDL"
    CPLANE_UL = "CPlaneUL"
    UPLANE_DL = "UPlaneDL"
    UPLANE_UL = "UPlaneUL"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value

    @property
    def is_cplane(self) -> bool:
        return self in (FrameClass.CPLANE_DL, FrameClass.CPLANE_UL)

    @property
    def is_uplane(self) -> bool:
        return self in (FrameClass.UPLANE_DL, FrameClass.UPLANE_UL)

    @property
    def direction(self) -> Optional[int]:
        if self is FrameClass.OTHER:
            return None
        return DIR_DL if self in (FrameClass.CPLANE_DL, FrameClass.UPLANE_DL) else DIR_UL


def classify(frame: Union[EthFrame, bytes]) -> FrameClass:
    """Total function: anything that does not decode cleanly is ``OTHER``."""
    try:
        if not isinstance(frame, EthFrame):
            frame = decode_frame(frame)
        if frame.ethertype != ECPRI_ETHERTYPE or len(frame.payload) < ECPRI_HEADER_LEN:
            return FrameClass.OTHER
        msg_type = frame.payload[1]
        if msg_type == MSG_RT_CONTROL:
            msg = decode_cplane(frame.payload)
            return FrameClass.CPLANE_DL if msg.data_direction == DIR_DL else FrameClass.CPLANE_UL
        if msg_type == MSG_IQ_DATA:
            msg = decode_uplane(frame.payload)
            return FrameClass.UPLANE_DL if msg.data_direction == DIR_DL else FrameClass.UPLANE_UL
    except CodecError:
        pass
    return FrameClass.OTHER


def decode_message(frame: EthFrame) -> Union[CPlaneMessage, UPlaneMessage]:
    """Decode the fronthaul message carried by an eCPRI frame."""
    if frame.ethertype != ECPRI_ETHERTYPE:
        raise ParseError(f"ethertype 0x{frame.ethertype:04x} is not eCPRI", 12)
    header = EcpriHeader.unpack(frame.payload)
    if header.msg_type == MSG_RT_CONTROL:
        return decode_cplane(frame.payload)
    if header.msg_type == MSG_IQ_DATA:
        return decode_uplane(frame.payload)
    raise ParseError(f"unsupported eCPRI message type {header.msg_type}", 1)


def ecpri_extent(data: bytes) -> Optional[int]:
    """Frame length without padding for an eCPRI frame, else ``None``."""
    off = payload_offset(data)
    if len(data) < off + ECPRI_HEADER_LEN or data[off - 2:off] != b"\xae\xfe":
        return None
    size = int.from_bytes(data[off + 2:off + 4], "big")
    end = off + 4 + size
    return end if end <= len(data) else None


def message_frame(msg: Union[CPlaneMessage, UPlaneMessage], dst: MacAddress, src: MacAddress,
                  vlan: Optional[VlanTag] = None) -> EthFrame:
    payload = encode_cplane(msg) if isinstance(msg, CPlaneMessage) else encode_uplane(msg)
    return EthFrame(dst=dst, src=src, ethertype=ECPRI_ETHERTYPE, payload=payload, vlan=vlan)


def uplane_wire_size(num_prbu: int, vlan: bool = False) -> int:
    """Wire bytes (with FCS) of a single-section U-Plane frame."""
    raw = (ETH_HEADER_LEN + (VLAN_TAG_LEN if vlan else 0) + ECPRI_HEADER_LEN + UPLANE_COMMON_LEN
           + USECTION_HEADER_LEN + RE_PER_PRB * IQ_SAMPLE_LEN * num_prbu)
    return wire_length(raw)
