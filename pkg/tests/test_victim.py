import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhdos import addr
from fhdos.attacks import AttackSpec, Target
from fhdos.codec import BROADCAST, FrameClass, MacAddress
from fhdos.runner import resolve_calibration
from fhdos.victim import (
    ConfigError, NodeStatus, Severity, Simulation, SwitchModel, Verdict, load_topology, parse_topology, run_scenario,
)

ODU = bytes.fromhex("020000000010")
ORU = bytes.fromhex("020000000021")
ATT = bytes.fromhex("0200000000aa")

SMALL = """
sim.baseline_seconds = 2
sim.post_seconds = 5
node.odu.role = odu
node.odu.mac = 02:00:00:00:00:10
node.oru1.role = oru
node.oru1.mac = 02:00:00:00:00:21
"""


@pytest.fixture(scope="module")
def topo1():
    return load_topology(resolve_calibration("topology1.cfg"))


@pytest.fixture(scope="module")
def topo2():
    return load_topology(resolve_calibration("topology2.cfg"))


# -- switch -------------------------------------------------------------------

def test_switch_learns_floods_and_filters_hairpin():
    sw = SwitchModel(["a", "b", "c"])
    assert sorted(sw.forward(ODU, ORU, "a", 0)) == ["b", "c"]
    assert sw.forward(ORU, ODU, "b", 0) == ["a"]
    assert sw.forward(ODU, ORU, "a", 0) == ["b"]
    # dst learned on the ingress port: filtered
    assert sw.forward(ATT, ODU, "a", 0) == []
    assert sorted(sw.forward(ODU, BROADCAST.octets, "a", 0)) == ["b", "c"]


def test_switch_never_learns_group_sources():
    sw = SwitchModel(["a", "b"])
    sw.forward(BROADCAST.octets, ODU, "a", 0)
    assert BROADCAST.octets not in sw.table


def test_switch_aging():
    sw = SwitchModel(["a", "b", "c"], aging_seconds=10)
    sw.forward(ODU, ORU, "a", 0)
    assert sw.forward(ORU, ODU, "b", 9.9) == ["a"]
    assert sorted(sw.forward(ORU, ODU, "b", 10)) == ["a", "c"]


def test_switch_port_security():
    sw = SwitchModel(["a", "b", "c"], secure={ORU: "b"})
    sw.forward(ORU, ODU, "b", 0)
    assert sw.forward(ORU, ODU, "c", 1) == []
    assert sw.table[ORU].port == "b" and sw.security_drops == 1
    with pytest.raises(ValueError):
        sw.forward(ODU, ORU, "z", 0)
    with pytest.raises(ValueError):
        SwitchModel(["a"], secure={ORU: "b"})


macs = st.sampled_from([ODU, ORU, ATT, bytes.fromhex("020000000022"), BROADCAST.octets])


@settings(max_examples=200)
@given(st.lists(st.tuples(macs, macs, st.sampled_from("abc")), max_size=40))
def test_switch_invariants(frames):
    sw = SwitchModel(list("abc"))
    for t, (src, dst, port) in enumerate(frames):
        out = sw.forward(src, dst, port, float(t))
        assert port not in out
        if src[0] & 1 == 0:
            assert sw.table[src].port == port


# -- config -------------------------------------------------------------------

def test_parse_minimal_topology():
    topo = parse_topology(SMALL)
    assert topo.odu.name == "odu" and [r.name for r in topo.orus] == ["oru1"]
    assert set(topo.ports) == {"odu", "oru1", "attacker"}


@pytest.mark.parametrize("extra,needle", [
    ("node.odu.bogus = 1", "bogus"),
    ("node.oru1.role = odu", "odu"),
    ("node.oru1.mac = 02:00:00:00:00:10", "mac"),
    ("node.oru1.mac = 01:00:5e:00:00:01", "group"),
    ("sim.tick_seconds = 0.3", "tick"),
    ("switch.secure = oru9", "oru9"),
    ("node.odu.udl.theta = 2", "theta"),
    ("node.odu.cplane.accept = friends", "accept"),
    ("node.oru2.like = nobody", "nobody"),
    ("not a key value line", "key = value"),
])
def test_config_errors(extra, needle):
    with pytest.raises(ConfigError) as info:
        parse_topology(SMALL + extra + "\n")
    assert needle in str(info.value).lower()


def test_like_copies_policies(topo2):
    assert len(topo2.orus) == 7
    assert topo2.nodes["oru7"].planes == topo2.nodes["oru1"].planes
    assert topo2.nodes["oru7"].mac != topo2.nodes["oru1"].mac


# -- simulation ---------------------------------------------------------------

def _attack(target, cls, source, tier):
    return AttackSpec(target, cls, source, tier)


def test_no_attack_is_flat_pass(topo1):
    out = run_scenario(topo1)
    assert out.verdict is Verdict.PASS and out.severity is Severity.NONE
    assert out.first_drop_second is None and out.recovered_second is None
    for series in out.throughput.values():
        assert len(series) == 35
        assert max(series) <= 1.05 * min(series)
    assert set(out.block_error_proxy) == {0.0}
    assert out.state_timeline == []


def test_legit_only_tick_has_no_drops(topo1):
    sim = Simulation(topo1)
    r = sim.step()
    assert r.goodput == r.offered and not r.degraded


def test_spoofed_odu_frame_takes_over_switch_entry(topo1):
    sim = Simulation(topo1)
    sim.step()
    assert sim.switch.table[ODU].port == "odu"
    sim.send_frame(MacAddress(ODU), MacAddress(ORU), "attacker")
    assert sim.switch.table[ODU].port == "attacker"


def test_random_uplane_exhausts_flow_table_in_first_second(topo1):
    # 1953.2 frames per 100 ms tick against 4096 flow entries
    a = AttackSpec(Target.ODU, FrameClass.UPLANE_UL, addr.RandomPerPacket(seed=1), 19532 * 8000 / 1e6, 30)
    sim = Simulation(topo1, a)
    statuses = []
    for _ in range(sim.baseline_ticks + 10):
        statuses.append(sim.step().statuses["odu"])
    attack = statuses[sim.baseline_ticks:]
    assert NodeStatus.RESTARTING in attack
    assert attack.index(NodeStatus.RESTARTING) == 2
    cap = topo1.odu.planes["uul"].flow_capacity
    assert sim.nodes["odu"].planes["uul"].occupancy <= cap


def test_restart_lasts_exactly_restart_seconds(topo1):
    sim = Simulation(topo1)
    sim.step()
    node = sim.nodes["odu"]
    node.planes["udl"].flows.add(ATT)
    node.restart(20)
    seen = [sim.step().statuses["odu"] for _ in range(25)]
    assert seen[:20] == [NodeStatus.RESTARTING] * 20
    assert seen[20] is NodeStatus.UP
    assert ATT not in node.planes["udl"].flows


def test_back_to_back_restarts_are_whole_periods(topo1):
    a = _attack(Target.ODU, FrameClass.UPLANE_UL, addr.RandomPerPacket(seed=2), 1000)
    sim = Simulation(topo1, a)
    runs, current, before = [], 0, 0
    for _ in range(sim.total_ticks):
        status = sim.step().statuses["odu"]
        if status is NodeStatus.RESTARTING:
            if current == 0:
                before = sim.nodes["odu"].restarts - 1
            current += 1
        elif current:
            runs.append((current, sim.nodes["odu"].restarts - before))
            current = 0
    assert runs
    for length, count in runs:
        assert length == 20 * count


@pytest.mark.parametrize("tier", [10, 100])
def test_budget_caps_legit_goodput(topo1, tier):
    a = _attack(Target.ORU, FrameClass.UPLANE_DL, addr.SpoofedPeer(MacAddress(ODU)), tier)
    sim = Simulation(topo1, a)
    pol = topo1.nodes["oru1"].planes["udl"]
    cap = pol.budget * float(sim.tick_seconds) / pol.cost
    squeezed = 0
    for _ in range(sim.total_ticks):
        r = sim.step()
        got = r.goodput[("dl", "oru1")]
        assert got <= cap + 1e-6
        if r.attack_frames == 0 and not r.degraded:
            assert got == pytest.approx(r.offered[("dl", "oru1")])
        squeezed += got < r.offered[("dl", "oru1")] - 1e-6
    assert squeezed > 0


@pytest.mark.parametrize("cls", [FrameClass.CPLANE_DL, FrameClass.UPLANE_DL, FrameClass.UPLANE_UL])
def test_peer_spoof_toward_odu_passes(topo1, cls):
    out = run_scenario(topo1, _attack(Target.ODU, cls, addr.SpoofedPeer(MacAddress(ORU)), 1000))
    assert out.verdict is Verdict.PASS


def test_random_uplane_ul_at_ten_mbps_fails(topo1):
    out = run_scenario(topo1, _attack(Target.ODU, FrameClass.UPLANE_UL, addr.RandomPerPacket(seed=3), 10))
    assert out.verdict is Verdict.FAIL


@pytest.mark.parametrize("tier", [10, 100, 1000])
def test_topology2_cplane_outage(topo2, tier):
    out = run_scenario(topo2, _attack(Target.ODU, FrameClass.CPLANE_DL, addr.RandomPerPacket(seed=4), tier))
    assert out.verdict is Verdict.FAIL and out.severity is Severity.CRASH_RESTART


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(list(Target)), st.sampled_from([FrameClass.CPLANE_DL, FrameClass.UPLANE_DL,
                                                         FrameClass.UPLANE_UL]),
       st.sampled_from(["peer", "random", "same"]), st.sampled_from([10, 100, 1000]), st.integers(0, 99))
def test_outcome_is_deterministic_and_consistent(target, cls, source, tier, seed):
    topo = load_topology(resolve_calibration("topology1.cfg"))
    peer = MacAddress(ORU if target is Target.ODU else ODU)
    s = {"peer": addr.SpoofedPeer(peer), "random": addr.RandomPerPacket(seed=seed),
         "same": addr.SameAsDestination()}[source]
    a = AttackSpec(target, cls, s, tier, 10)
    one, two = run_scenario(topo, a, seed=seed), run_scenario(topo, a, seed=seed)
    assert json.dumps(one.to_record(), sort_keys=True) == json.dumps(two.to_record(), sort_keys=True)
    assert (one.verdict is Verdict.PASS) == (one.severity is Severity.NONE)
    if one.recovered_second is not None:
        assert one.first_drop_second is not None and one.recovered_second > one.first_drop_second
    if one.severity is Severity.CRASH_RESTART:
        assert sum(one.restarts.values()) > 0 or any(s == "DOWN" for _, _, s in one.state_timeline)
