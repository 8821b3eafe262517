import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhdos import addr
from fhdos.codec import BROADCAST, MacAddress

DST = MacAddress.parse("02:00:00:00:00:10")
PEER = MacAddress.parse("02:00:00:00:00:21")


def test_fixed_strategies():
    assert addr.source_for(addr.SpoofedPeer(PEER), DST, 5) == PEER
    assert addr.source_for(addr.Fixed(PEER), DST, 0) == PEER
    assert addr.source_for(addr.Broadcast(), DST, 9) == BROADCAST
    assert addr.source_for(addr.SameAsDestination(), DST, 3) == DST


def test_random_addresses_are_unicast_local_and_fresh():
    s = addr.RandomPerPacket(seed=11, exclude=frozenset({PEER.octets}))
    seen = set()
    for i in range(2000):
        m = addr.source_for(s, DST, i)
        assert not m.is_multicast and m.is_local
        assert m != DST and m != PEER
        seen.add(m)
    assert len(seen) == 2000


def test_random_is_reproducible_per_index():
    s = addr.RandomPerPacket(seed=3)
    assert addr.source_for(s, DST, 1234) == addr.source_for(s, DST, 1234)
    assert addr.source_for(s, DST, 1) != addr.source_for(addr.RandomPerPacket(seed=4), DST, 1)


def test_exclusion_forces_a_redraw():
    plain = addr.RandomPerPacket(seed=5)
    first = addr.source_for(plain, DST, 0)
    avoiding = addr.RandomPerPacket(seed=5, exclude=frozenset({first.octets}))
    again = addr.source_for(avoiding, DST, 0)
    assert again != first and again.is_local and not again.is_multicast
    # the destination itself is always avoided
    assert addr.source_for(plain, first, 0) != first


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 10**9), st.integers(0, 300),
       st.sampled_from(["random", "spoof", "broadcast", "same", "fixed"]))
def test_batch_matches_scalar(seed, start, count, kind):
    s = {"random": addr.RandomPerPacket(seed=seed), "spoof": addr.SpoofedPeer(PEER),
         "broadcast": addr.Broadcast(), "same": addr.SameAsDestination(), "fixed": addr.Fixed(PEER)}[kind]
    batch = addr.sources_for(s, DST, start, count)
    assert batch == [addr.source_for(s, DST, start + i).octets for i in range(count)]


def test_batch_honours_exclusions():
    first = addr.source_for(addr.RandomPerPacket(seed=8), DST, 10)
    s = addr.RandomPerPacket(seed=8, exclude=frozenset({first.octets}))
    batch = addr.sources_for(s, DST, 0, 50)
    assert first.octets not in batch
    assert batch == [addr.source_for(s, DST, i).octets for i in range(50)]


@pytest.mark.parametrize("text", ["spoof:02:00:00:00:00:21", "fixed:02:00:00:00:00:21", "random:7",
                                  "broadcast", "same-as-dst"])
def test_parse_format_round_trip(text):
    assert addr.format_strategy(addr.parse_strategy(text)) == text


def test_parse_rejects_garbage():
    for bad in ("", "spoof", "spoof:zz", "broadcast:1", "sometimes"):
        with pytest.raises(ValueError):
            addr.parse_strategy(bad)
    assert addr.parse_strategy("random") == addr.RandomPerPacket(seed=0)


def test_per_packet_flag():
    assert addr.is_per_packet(addr.RandomPerPacket())
    assert not addr.is_per_packet(addr.SpoofedPeer(PEER))
