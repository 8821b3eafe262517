from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhdos import addr
from fhdos.codec import FrameClass, MacAddress, wire_length
from fhdos.pcapio import EditSet, synthesize_template
from fhdos.ports import LoopbackPort, PortError, SimClock
from fhdos.tx import AttackAborted, RateSchedule, expected_frames, run_attack

DST = MacAddress.parse("02:00:00:00:00:10")


def _run(schedule, size=64, edits=None, cls=FrameClass.CPLANE_DL, **kw):
    port = LoopbackPort(clock=SimClock())
    stats = run_attack([synthesize_template(cls, size, dst=DST)], schedule, port, edits, **kw)
    return port, stats


def test_ten_mbps_for_thirty_seconds():
    port, stats = _run(RateSchedule.constant(10, 30))
    assert stats.frames == 585937 == expected_frames(RateSchedule.constant(10, 30), 64)
    assert port.receiver.frames == stats.frames
    assert all(19531 <= s.frames <= 19532 for s in stats.per_second)
    assert 0 <= stats.shortfall_bits < 512
    assert stats.kept_pace and stats.wall_seconds == 30


def test_ramp_follows_schedule():
    sched = RateSchedule.ramp(1, 0.5, 10)
    _, stats = _run(sched, size=1000, cls=FrameClass.UPLANE_DL)
    for s in stats.per_second:
        assert s.scheduled_bits == Fraction(2 + s.second, 2) * 10**6
        assert abs(s.bits - s.scheduled_bits) <= 8000
    assert stats.frames == expected_frames(sched, 1000)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 400), st.sampled_from([64, 100, 1000, 1518]), st.integers(1, 3))
def test_shortfall_is_under_one_frame(mbps_tenths, size, duration):
    sched = RateSchedule.constant(mbps_tenths / 10, duration)
    _, stats = _run(sched, size=size, cls=FrameClass.CPLANE_DL if size < 82 else FrameClass.UPLANE_UL)
    assert 0 <= stats.shortfall_bits < size * 8
    assert stats.frames == expected_frames(sched, size)


def test_mixed_sizes_cycle_in_order():
    port = LoopbackPort()
    recs = [synthesize_template(FrameClass.CPLANE_DL, 64), synthesize_template(FrameClass.UPLANE_DL, 1000)]
    stats = run_attack(recs, RateSchedule.constant(1, 2), port)
    sizes = [wire_length(f) for _, f in port.receiver.drain()]
    assert sizes[:4] == [64, 1000, 64, 1000]
    assert 0 <= stats.shortfall_bits < 8000


def test_random_sources_per_frame():
    port, stats = _run(RateSchedule.constant(1, 1), edits=EditSet(src=addr.RandomPerPacket(seed=9)))
    srcs = [f[6:12] for _, f in port.receiver.drain()]
    assert len(srcs) == stats.frames == len(set(srcs))
    expected = addr.sources_for(addr.RandomPerPacket(seed=9), DST, 0, len(srcs))
    assert srcs == expected


def test_spoofed_source_is_constant():
    peer = MacAddress.parse("02:00:00:00:00:21")
    port, _ = _run(RateSchedule.constant(1, 1), edits=EditSet(src=addr.SpoofedPeer(peer)))
    assert {f[6:12] for _, f in port.receiver.drain()} == {peer.octets}


def test_on_second_callback():
    seen = []
    _run(RateSchedule.constant(1, 3), on_second=lambda s: seen.append(len(s.per_second)))
    assert seen == [1, 2, 3]


def test_port_failure_aborts_with_partial_stats():
    class Failing(LoopbackPort):
        def send_many(self, frames):
            if self._frames > 1000:
                raise PortError("link down")
            super().send_many(frames)

    with pytest.raises(AttackAborted) as info:
        run_attack([synthesize_template(FrameClass.CPLANE_DL, 64)], RateSchedule.constant(10, 5), Failing())
    stats = info.value.stats
    assert stats.aborted and "link down" in stats.error
    assert 1000 < stats.frames < 19532


def test_bad_schedules():
    with pytest.raises(ValueError):
        RateSchedule.constant(0)
    with pytest.raises(ValueError):
        RateSchedule.constant(1, 0)
    with pytest.raises(ValueError):
        RateSchedule.ramp(1, -1)
    with pytest.raises(ValueError):
        run_attack([], RateSchedule.constant(1), LoopbackPort())


def test_sim_clock():
    c = SimClock(5.0)
    c.sleep_until(4.0)
    assert c.now() == 5.0
    c.sleep_until(7.5)
    assert c.now() == 7.5
