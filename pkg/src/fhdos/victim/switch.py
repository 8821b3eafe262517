"""MAC-learning switch used by the victim simulator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional


@dataclass
class MacEntry:
    port: str
    last_seen: float


def is_group(mac: bytes) -> bool:
    return bool(mac[0] & 0x01)


class SwitchModel:
    """Last-writer-wins MAC table with aging and optional port security.

    The forwarding decision for a frame is taken from the table as it stood
    when the frame arrived; the frame's source is learned afterwards.  A frame
    whose destination resolves to its own ingress port is filtered.

    ``secure`` pins addresses to ports: a frame carrying a pinned source on
    any other port is discarded without being learned.
    """

    def __init__(self, ports: Iterable[str], aging_seconds: float = 300.0,
                 secure: Optional[Mapping[bytes, str]] = None):
        self.ports = list(ports)
        self.aging_seconds = aging_seconds
        self.secure = dict(secure or {})
        for mac, port in self.secure.items():
            if port not in self.ports:
                raise ValueError(f"secure entry for unknown port {port!r}")
        self.table: Dict[bytes, MacEntry] = {}
        self.anonymous_learned = 0
        self.security_drops = 0.0

    def violates_security(self, src: Optional[bytes], ingress: str) -> bool:
        pinned = self.secure.get(src) if src is not None else None
        return pinned is not None and pinned != ingress

    def expire(self, now: float) -> None:
        stale = [m for m, e in self.table.items() if now - e.last_seen >= self.aging_seconds]
        for m in stale:
            del self.table[m]

    def lookup(self, dst: bytes, now: float) -> Optional[str]:
        entry = self.table.get(dst)
        if entry is None:
            return None
        if now - entry.last_seen >= self.aging_seconds:
            del self.table[dst]
            return None
        return entry.port

    def learn(self, src: bytes, port: str, now: float) -> None:
        if is_group(src):
            return
        entry = self.table.get(src)
        if entry is None:
            self.table[src] = MacEntry(port, now)
        else:
            entry.port, entry.last_seen = port, now

    def flood_ports(self, ingress: str) -> List[str]:
        return [p for p in self.ports if p != ingress]

    def forward(self, src: bytes, dst: bytes, ingress: str, now: float) -> List[str]:
        """Egress ports for one frame; an empty list means it was dropped."""
        if ingress not in self.ports:
            raise ValueError(f"unknown ingress port {ingress!r}")
        if self.violates_security(src, ingress):
            self.security_drops += 1
            return []
        if is_group(dst):
            out = self.flood_ports(ingress)
        else:
            port = self.lookup(dst, now)
            if port is None:
                out = self.flood_ports(ingress)
            elif port == ingress:
                out = []
            else:
                out = [port]
        self.learn(src, ingress, now)
        return out
