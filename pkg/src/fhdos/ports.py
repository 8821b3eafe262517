"""Transmit/receive ports and the clocks that pace them.

The loopback port hands frames straight to an in-process receiver queue and
needs no privileges.  ``RawLinkPort`` injects at L2 through an AF_PACKET
socket (Linux, CAP_NET_RAW).
"""

from __future__ import annotations

import collections
import socket
import threading
import time
from dataclasses import dataclass
from typing import Deque, Iterator, List, Optional, Protocol, Sequence, Tuple


class PortError(OSError):
    pass


class SimClock:
    """Virtual time: sleeping just moves the clock forward."""

    def __init__(self, start: float = 0.0):
        self._now = start

    def now(self) -> float:
        return self._now

    def sleep_until(self, t: float) -> None:
        if t > self._now:
            self._now = t


class RealClock:
    def __init__(self):
        self._origin = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._origin

    def sleep_until(self, t: float) -> None:
        delay = t - self.now()
        if delay > 0:
            time.sleep(delay)


@dataclass(frozen=True)
class PortStats:
    frames: int
    bytes: int


class TxPort(Protocol):
    def send(self, frame: bytes) -> None: ...
    def send_many(self, frames: Sequence[bytes]) -> None: ...
    def flush(self) -> None: ...
    def stats(self) -> PortStats: ...
    def close(self) -> None: ...


class Receiver(Protocol):
    def batches(self, timeout: Optional[float] = None) -> Iterator[Tuple[float, Sequence[bytes], bool]]: ...


class LoopbackReceiver:
    """Queue of ``(timestamp, frames, outgoing)`` batches.

    Frames sent through the paired port are marked outgoing; frames pushed
    with :meth:`inject` stand in for traffic arriving from the network.
    """

    def __init__(self):
        self._queue: Deque[Tuple[float, List[bytes], bool]] = collections.deque()
        self._cond = threading.Condition()
        self.frames = 0
        self.bytes = 0

    def _push(self, ts: float, frames: List[bytes], outgoing: bool) -> None:
        with self._cond:
            self._queue.append((ts, frames, outgoing))
            self.frames += len(frames)
            self.bytes += sum(map(len, frames))
            self._cond.notify_all()

    def inject(self, ts: float, frames: Sequence[bytes]) -> None:
        self._push(ts, list(frames), False)

    def batches(self, timeout: Optional[float] = None):
        """Yield queued batches; with a timeout, wait that long for more before stopping."""
        while True:
            with self._cond:
                if not self._queue and timeout:
                    self._cond.wait(timeout)
                if not self._queue:
                    return
                item = self._queue.popleft()
            yield item

    def drain(self) -> Iterator[Tuple[float, bytes]]:
        for ts, frames, _ in self.batches():
            for f in frames:
                yield ts, f


class LoopbackPort:
    def __init__(self, clock=None, receiver: Optional[LoopbackReceiver] = None):
        self.clock = clock or SimClock()
        self.receiver = receiver or LoopbackReceiver()
        self._frames = 0
        self._bytes = 0
        self.closed = False

    def send(self, frame: bytes) -> None:
        self.send_many([frame])

    def send_many(self, frames: Sequence[bytes]) -> None:
        if self.closed:
            raise PortError("port is closed")
        frames = list(frames)
        if not frames:
            return
        self.receiver._push(self.clock.now(), frames, True)
        self._frames += len(frames)
        self._bytes += sum(map(len, frames))

    def flush(self) -> None:
        pass

    def stats(self) -> PortStats:
        return PortStats(self._frames, self._bytes)

    def close(self) -> None:
        self.closed = True


_ETH_P_ALL = 0x0003
_PACKET_OUTGOING = 4


class RawLinkPort:
    def __init__(self, ifname: str, clock=None):
        if not hasattr(socket, "AF_PACKET"):
            raise PortError("raw link ports need Linux AF_PACKET sockets")
        self.ifname = ifname
        self.clock = clock or RealClock()
        try:
            socket.if_nametoindex(ifname)
        except OSError as exc:
            raise PortError(f"no such interface: {ifname}") from exc
        try:
            self._sock = socket.socket(socket.AF_PACKET, socket.SOCK_RAW)
            self._sock.bind((ifname, 0))
        except PermissionError as exc:
            raise PortError(f"permission denied opening {ifname} (needs CAP_NET_RAW)") from exc
        except OSError as exc:
            raise PortError(f"cannot open {ifname}: {exc}") from exc
        self._frames = 0
        self._bytes = 0

    def send(self, frame: bytes) -> None:
        try:
            self._sock.send(frame)
        except OSError as exc:
            raise PortError(f"send on {self.ifname} failed: {exc}") from exc
        self._frames += 1
        self._bytes += len(frame)

    def send_many(self, frames: Sequence[bytes]) -> None:
        for f in frames:
            self.send(f)

    def flush(self) -> None:
        pass

    def stats(self) -> PortStats:
        return PortStats(self._frames, self._bytes)

    def close(self) -> None:
        self._sock.close()


class RawLinkReceiver:
    def __init__(self, ifname: str, clock=None):
        self.ifname = ifname
        self.clock = clock or RealClock()
        try:
            self._sock = socket.socket(socket.AF_PACKET, socket.SOCK_RAW, socket.htons(_ETH_P_ALL))
            self._sock.bind((ifname, 0))
        except (AttributeError, OSError) as exc:
            raise PortError(f"cannot capture on {ifname}: {exc}") from exc

    def batches(self, timeout: Optional[float] = None):
        self._sock.settimeout(timeout if timeout else 0.1)
        while True:
            try:
                data, address = self._sock.recvfrom(65535)
            except socket.timeout:
                return
            yield self.clock.now(), [data], address[2] == _PACKET_OUTGOING

    def close(self) -> None:
        self._sock.close()


def open_port(kind: str, clock=None):
    """``"loopback"`` or an interface name."""
    if kind == "loopback":
        return LoopbackPort(clock=clock)
    return RawLinkPort(kind, clock=clock)
