"""Attack descriptions shared by the simulator and the campaign runner."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from . import addr
from .codec import FrameClass, MacAddress

TIERS_MBPS = (10, 100, 1000)
ATTACK_CLASSES = (FrameClass.CPLANE_DL, FrameClass.UPLANE_DL, FrameClass.UPLANE_UL)


class Target(str, enum.Enum):
    ODU = "O-DU"
    ORU = "O-RU"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AttackSpec:
    """One attack: traffic type x source strategy x tier x target x duration.

    ``dst_mac`` defaults to the target node's address; ``frame_bytes`` (wire
    size with FCS) defaults to the victim model's per-class attack size.
    """

    target: Target
    traffic: FrameClass
    source: addr.SourceMacStrategy
    tier_mbps: float
    duration_seconds: int = 30
    dst_mac: Optional[MacAddress] = None
    frame_bytes: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        object.__setattr__(self, "traffic", FrameClass(self.traffic))
        if self.traffic not in ATTACK_CLASSES:
            raise ValueError(f"unsupported attack traffic {self.traffic}")
        if not self.tier_mbps > 0:
            raise ValueError("tier must be positive")
        if self.duration_seconds < 1:
            raise ValueError("duration must be at least one second")
        if self.frame_bytes is not None and self.frame_bytes < 64:
            raise ValueError("frames are at least 64 bytes on the wire")

    def describe(self) -> str:
        return (f"{self.traffic.value} -> {self.target.value} src={addr.format_strategy(self.source)} "
                f"{tier_label(self.tier_mbps)} for {self.duration_seconds}s")


def tier_label(mbps: float) -> str:
    if mbps >= 1000 and mbps % 1000 == 0:
        return f"{int(mbps // 1000)} Gbps"
    return f"{mbps:g} Mbps"
