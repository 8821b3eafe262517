"""Source-MAC strategies for attack traffic.

Random addresses come from a counter-based generator (splitmix64 over
``seed`` and packet index) so any packet's address can be recomputed without
replaying the ones before it.  The batch path vectorizes the same function
with numpy and must agree with :func:`source_for` bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Union

import numpy as np

from .codec import BROADCAST, MacAddress, as_mac

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_ATTEMPT_STRIDE = 0xD1B54A32D192ED03


@dataclass(frozen=True)
class SpoofedPeer:
    mac: MacAddress


@dataclass(frozen=True)
class Fixed:
    mac: MacAddress


@dataclass(frozen=True)
class RandomPerPacket:
    seed: int = 0
    # addresses that must never be produced (victim, peers); re-drawn on hit
    exclude: FrozenSet[bytes] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Broadcast:
    pass


@dataclass(frozen=True)
class SameAsDestination:
    pass


SourceMacStrategy = Union[SpoofedPeer, Fixed, RandomPerPacket, Broadcast, SameAsDestination]


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _draw(seed: int, index: int, attempt: int) -> bytes:
    x = _splitmix64((seed * _GOLDEN + index + attempt * _ATTEMPT_STRIDE) & _MASK64)
    octets = bytearray((x >> 16).to_bytes(6, "big"))
    octets[0] = (octets[0] & 0xFC) | 0x02  # unicast, locally administered
    return bytes(octets)


def _random_octets(strategy: RandomPerPacket, dst: bytes, index: int) -> bytes:
    attempt = 0
    while True:
        octets = _draw(strategy.seed, index, attempt)
        if octets != dst and octets not in strategy.exclude:
            return octets
        attempt += 1


def source_for(strategy: SourceMacStrategy, dst: MacAddress, packet_index: int) -> MacAddress:
    if isinstance(strategy, (SpoofedPeer, Fixed)):
        return strategy.mac
    if isinstance(strategy, Broadcast):
        return BROADCAST
    if isinstance(strategy, SameAsDestination):
        return dst
    if isinstance(strategy, RandomPerPacket):
        return MacAddress(_random_octets(strategy, dst.octets, packet_index))
    raise TypeError(f"unknown source strategy {strategy!r}")


def _splitmix64_np(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def sources_for(strategy: SourceMacStrategy, dst: MacAddress, start: int, count: int) -> List[bytes]:
    """Source address octets for packets ``start .. start+count-1``."""
    if not isinstance(strategy, RandomPerPacket):
        return [source_for(strategy, dst, start).octets] * count
    if count <= 0:
        return []
    with np.errstate(over="ignore"):
        idx = np.arange(start, start + count, dtype=np.uint64)
        base = np.uint64((strategy.seed * _GOLDEN) & _MASK64)
        x = _splitmix64_np(base + idx) >> np.uint64(16)
    raw = x.astype(">u8").tobytes()
    out = []
    bad = strategy.exclude | {dst.octets}
    for k in range(count):
        chunk = raw[8 * k + 2:8 * k + 8]
        octets = bytes(((chunk[0] & 0xFC) | 0x02,)) + chunk[1:]
        if octets in bad:
            octets = _random_octets(strategy, dst.octets, start + k)
        out.append(octets)
    return out


def is_per_packet(strategy: SourceMacStrategy) -> bool:
    return isinstance(strategy, RandomPerPacket)


def parse_strategy(text: str, exclude: Optional[FrozenSet[bytes]] = None) -> SourceMacStrategy:
    """Parse the CLI spelling ``spoof:<mac> | random[:seed] | broadcast | same-as-dst | fixed:<mac>``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "spoof":
        return SpoofedPeer(as_mac(arg))
    if kind == "fixed":
        return Fixed(as_mac(arg))
    if kind == "random":
        seed = int(arg, 0) if arg else 0
        return RandomPerPacket(seed=seed, exclude=frozenset(exclude or ()))
    if kind == "broadcast" and not arg:
        return Broadcast()
    if kind == "same-as-dst" and not arg:
        return SameAsDestination()
    raise ValueError(f"bad source strategy {text!r}; expected spoof:<mac>, random[:seed], "
                     "broadcast, same-as-dst or fixed:<mac>")


def format_strategy(strategy: SourceMacStrategy) -> str:
    if isinstance(strategy, SpoofedPeer):
        return f"spoof:{strategy.mac}"
    if isinstance(strategy, Fixed):
        return f"fixed:{strategy.mac}"
    if isinstance(strategy, RandomPerPacket):
        return f"random:{strategy.seed}"
    if isinstance(strategy, Broadcast):
        return "broadcast"
    if isinstance(strategy, SameAsDestination):
        return "same-as-dst"
    raise TypeError(f"unknown source strategy {strategy!r}")
