"""Regenerate golden_frames.json from an independent scapy field layout.

This script never imports fhdos.  The eCPRI and O-RAN layers below are
written directly from the field tables (bit widths in wire order), and the
Ethernet/802.1Q framing is scapy's own.  Run it with scapy installed:

    python3 tests/data/make_golden.py
"""

import json
import os
import sys

from scapy import VERSION as SCAPY_VERSION
from scapy.fields import (
    BitField, ByteField, FieldListField, ShortField, SignedShortField, StrField,
)
from scapy.layers.l2 import Dot1Q, Ether
from scapy.packet import Packet

HERE = os.path.dirname(os.path.abspath(__file__))


class ECPRI(Packet):
    name = "eCPRI"
    fields_desc = [
        BitField("revision", 1, 4), BitField("reserved", 0, 3), BitField("c", 0, 1),
        ByteField("msgType", 2), ShortField("payloadSize", None),
        ShortField("pcid", 0), ByteField("seqId", 0), BitField("e", 1, 1), BitField("subSeqId", 0, 7),
    ]

    def post_build(self, p, pay):
        if self.payloadSize is None:
            # counts everything after the 4-byte common header
            size = len(p) - 4 + len(pay)
            p = p[:2] + size.to_bytes(2, "big") + p[4:]
        return p + pay


class CCommon(Packet):
    name = "C-Plane common header"
    fields_desc = [
        BitField("dataDirection", 1, 1), BitField("payloadVersion", 1, 3), BitField("filterIndex", 0, 4),
        ByteField("frameId", 0), BitField("subframeId", 0, 4), BitField("slotId", 0, 6),
        BitField("startSymbolid", 0, 6), ByteField("numberOfSections", 1), ByteField("sectionType", 1),
        BitField("udIqWidth", 0, 4), BitField("udCompMeth", 0, 4), ByteField("reserved", 0),
    ]


class CSection1(Packet):
    name = "Section Type 1"
    fields_desc = [
        BitField("sectionId", 0, 12), BitField("rb", 0, 1), BitField("symInc", 0, 1),
        BitField("startPrbc", 0, 10), ByteField("numPrbc", 1), BitField("reMask", 0xFFF, 12),
        BitField("numSymbol", 1, 4), BitField("ef", 0, 1), BitField("beamId", 0, 15),
    ]


class Ext1(Packet):
    name = "extType 1 (16-bit uncompressed weights)"
    fields_desc = [
        BitField("ef", 0, 1), BitField("extType", 1, 7), ByteField("extLen", None),
        BitField("bfwIqWidth", 0, 4), BitField("bfwCompMeth", 0, 4),
        FieldListField("bfw", [], SignedShortField("v", 0)),
    ]

    def post_build(self, p, pay):
        pad = (-len(p)) % 4
        p += b"\x00" * pad
        if self.extLen is None:
            p = p[:1] + bytes([len(p) // 4]) + p[2:]
        return p + pay


class UCommon(Packet):
    name = "U-Plane common header"
    fields_desc = [
        BitField("dataDirection", 1, 1), BitField("payloadVersion", 1, 3), BitField("filterIndex", 0, 4),
        ByteField("frameId", 0), BitField("subframeId", 0, 4), BitField("slotId", 0, 6),
        BitField("symbolId", 0, 6),
    ]


class USection(Packet):
    name = "U-Plane section"
    fields_desc = [
        BitField("sectionId", 0, 12), BitField("rb", 0, 1), BitField("symInc", 0, 1),
        BitField("startPrbu", 0, 10), ByteField("numPrbu", 1),
        FieldListField("iq", [], SignedShortField("v", 0)),
    ]


class Raw(Packet):
    fields_desc = [StrField("load", b"")]


DST = "02:00:00:00:00:01"
SRC = "02:00:00:00:00:02"


def ramp(n, start, step):
    return [((start + step * k + 32768) % 65536) - 32768 for k in range(n)]


def cases():
    # 1. minimal C-Plane DL, padded to the Ethernet minimum
    yield "cplane_minimal", Ether(dst=DST, src=SRC, type=0xAEFE) / ECPRI(msgType=2) / CCommon() / CSection1(
        sectionId=1, numPrbc=1, beamId=0)
    # 2. C-Plane UL with a VLAN tag and non-trivial header values
    yield "cplane_vlan_ul", (
        Ether(dst=DST, src=SRC) / Dot1Q(vlan=100, prio=7, type=0xAEFE)
        / ECPRI(msgType=2, pcid=0x1234, seqId=0xAB)
        / CCommon(dataDirection=0, frameId=0x9F, subframeId=9, slotId=33, startSymbolid=13,
                  numberOfSections=2)
        / CSection1(sectionId=0xFFF, rb=1, symInc=0, startPrbc=1023, numPrbc=255, reMask=0xA5A,
                    numSymbol=14, beamId=0x7FFF)
        / CSection1(sectionId=7, rb=0, symInc=1, startPrbc=0, numPrbc=16, reMask=0x001, numSymbol=1,
                    beamId=1)
    )
    # 3. C-Plane DL with extType 1: four 16-bit weight pairs (extLen 5)
    yield "cplane_ext1", (
        Ether(dst=DST, src=SRC, type=0xAEFE) / ECPRI(msgType=2, pcid=0x0001, seqId=5)
        / CCommon(frameId=1, subframeId=2, slotId=3, startSymbolid=4, numberOfSections=1)
        / CSection1(sectionId=2, startPrbc=10, numPrbc=20, numSymbol=2, ef=1, beamId=0x1234)
        / Ext1(bfw=[1, -1, 32767, -32768, 0, 256, -300, 12345])
    )
    # 4. U-Plane DL, one PRB
    yield "uplane_dl_1prb", (
        Ether(dst=DST, src=SRC, type=0xAEFE) / ECPRI(msgType=0, pcid=0x0102, seqId=200)
        / UCommon(frameId=17, subframeId=3, slotId=1, symbolId=6)
        / USection(sectionId=1, startPrbu=5, numPrbu=1, iq=ramp(24, -1200, 97))
    )
    # 5. U-Plane UL, two sections, VLAN tagged
    yield "uplane_ul_2sec", (
        Ether(dst=DST, src=SRC) / Dot1Q(vlan=4094, prio=3, dei=1, type=0xAEFE)
        / ECPRI(msgType=0, pcid=0xFFFF, seqId=255)
        / UCommon(dataDirection=0, frameId=255, subframeId=15, slotId=63, symbolId=63)
        / USection(sectionId=4095, rb=1, symInc=1, startPrbu=1023, numPrbu=1, iq=ramp(24, 32000, 1111))
        / USection(sectionId=3, startPrbu=0, numPrbu=2, iq=ramp(48, -32768, 1365))
    )


def build():
    out = []
    for name, pkt in cases():
        raw = bytes(pkt)
        if len(raw) < 60:
            raw += b"\x00" * (60 - len(raw))
        out.append({"name": name, "hex": raw.hex(), "wire_bytes": max(len(raw), 60) + 4})
    return out


def main():
    frames = build()
    doc = {"generator": "tests/data/make_golden.py", "scapy": SCAPY_VERSION, "frames": frames}
    path = os.path.join(HERE, "golden_frames.json")
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"wrote {len(frames)} frames to {path}", file=sys.stderr)


if __name__ == "__main__":
    main()
