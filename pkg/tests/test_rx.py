import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhdos.codec import FrameClass
from fhdos.pcapio import PacketRecord, synthesize_template
from fhdos.ports import LoopbackPort, SimClock
from fhdos.rx import Meter, detect_drop_and_recovery, meter, meter_pcap
from fhdos.tx import RateSchedule, run_attack


def _with_seq(template: bytes, seq: int, eaxc: int = 0) -> bytes:
    b = bytearray(template)
    b[18:20] = eaxc.to_bytes(2, "big")
    b[20] = seq
    return bytes(b)


def test_meter_conserves_frames_and_classes():
    port = LoopbackPort(clock=SimClock())
    recs = [synthesize_template(c, 200) for c in FrameClass if c is not FrameClass.OTHER]
    stats = run_attack(recs, RateSchedule.constant(2, 4), port)
    rep = meter(port.receiver, 4, start=0.0)
    assert rep.total().frames == stats.frames
    assert rep.total().bits == stats.bits
    assert len(rep.per_second) == 4
    hist = rep.class_histogram()
    assert set(hist) == {c for c in FrameClass if c is not FrameClass.OTHER}
    assert max(hist.values()) - min(hist.values()) <= 1
    assert rep.series(unit="frames") == [s.frames for s in stats.per_second]


def test_sequence_gaps():
    t = synthesize_template(FrameClass.CPLANE_DL, 64).record.data
    m = Meter()
    for seq in (0, 1, 3):
        m.feed(0.1, _with_seq(t, seq))
    # a different eAxC keeps its own counter
    for seq in (10, 11):
        m.feed(0.2, _with_seq(t, seq, eaxc=7))
    m.feed(0.3, _with_seq(t, 0, eaxc=7))
    assert m.report().seq_gaps == {0: 1, 7: 1}


def test_sequence_wraps_without_gap():
    t = synthesize_template(FrameClass.UPLANE_DL, 100).record.data
    m = Meter()
    for seq in (254, 255, 0, 1):
        m.feed(0, _with_seq(t, seq))
    assert m.report().seq_gaps == {}


def test_other_frames_are_counted_but_not_sequenced():
    m = Meter()
    m.feed(0, b"\x02" * 12 + b"\x08\x00" + b"\x00" * 46)
    m.feed(1.5, b"\xff" * 12 + b"\x08\x00" + b"\x00" * 46)
    rep = m.report()
    assert rep.class_histogram() == {FrameClass.OTHER: 2}
    assert rep.series() == [512, 512]


def test_detect_examples():
    series = [100] * 5 + [10] * 30 + [100] * 30
    assert detect_drop_and_recovery(series, 100) == (5, 35)
    series = [100] * 5 + [10] * 3 + [100] * 2 + [10] + [100] * 10
    assert detect_drop_and_recovery(series, 100) == (5, 11)
    assert detect_drop_and_recovery([100] * 40, 100) == (None, None)
    assert detect_drop_and_recovery([100] * 5 + [0] * 35, 100) == (5, None)
    # a recovery needs the full hold inside the window
    assert detect_drop_and_recovery([100] * 5 + [0] * 33 + [100] * 2, 100) == (5, None)
    with pytest.raises(ValueError):
        detect_drop_and_recovery([1], 1, drop_fraction=1.5)


@settings(max_examples=200)
@given(st.lists(st.integers(0, 200), min_size=1, max_size=80), st.integers(1, 200))
def test_detect_is_consistent(series, baseline):
    first, rec = detect_drop_and_recovery(series, baseline)
    thr = 0.5 * baseline
    if first is None:
        assert rec is None and all(v >= thr for v in series)
        return
    assert series[first] < thr and all(v >= thr for v in series[:first])
    if rec is not None:
        assert rec > first and all(v >= thr for v in series[rec:rec + 3])
        assert len(series[rec:rec + 3]) == 3
    # raising every sample can only move the drop later
    lifted = [v + baseline for v in series]
    assert detect_drop_and_recovery(lifted, baseline) == (None, None)


def test_report_detect_and_render():
    t = synthesize_template(FrameClass.UPLANE_UL, 100).record.data
    m = Meter()
    for s in range(20):
        n = 10 if s < 5 or s >= 12 else 1
        for _ in range(n):
            m.feed(s + 0.5, t)
    rep = m.report().detect(baseline_seconds=5)
    assert (rep.first_drop_second, rep.recovered_second) == (5, 12)
    text = rep.render_text()
    assert "first drop at second 5" in text and "recovered at second 12" in text
    assert rep.records()[0] == {"second": 0, "class": "UPlaneUL", "frames": 10, "bits": 8000}


def test_meter_pcap_uses_capture_time_and_sources():
    t = synthesize_template(FrameClass.CPLANE_UL, 64).record.data
    recs = [PacketRecord(100, 0, t), PacketRecord(100, 999999, t), PacketRecord(102, 1, b"\x02" * 6 + t[6:])]
    rep = meter_pcap(recs, track_sources=True)
    assert rep.series(unit="frames") == [2, 0, 1]
    assert sum(rep.sources.values()) == 3


def test_incoming_only_skips_own_traffic():
    port = LoopbackPort(clock=SimClock())
    t = synthesize_template(FrameClass.CPLANE_DL, 64).record.data
    port.send_many([t] * 5)
    port.receiver.inject(0.0, [t] * 3)
    rep = meter(port.receiver, 1, start=0.0, incoming_only=True)
    assert rep.total().frames == 3
