import pytest
from hypothesis import given, settings, strategies as st

from core.errors import InvalidProtocolSpec
from core.knowledge import known_values
from core.model import CommunicationGraph, Decision, make_adversary, simulate, view
from protocols.registry import BINARY_ONLY, NEEDS_K, ProtocolId, ProtocolSpec
from protocols.table import ProtocolTable
from services.domain import EnumerationDomain, enumerate_adversaries
from tests.strategies import adversaries


def spec(name, n=3, t=1, values=2, k=None):
    return ProtocolSpec.parse(name, n, t, values, k)


def same_schedules(a, b, dom):
    return all(simulate(a, adv, dom.horizon) == simulate(b, adv, dom.horizon)
               for adv in enumerate_adversaries(dom))


# ==================== REGISTRY ====================

def test_parse_accepts_every_cli_name():
    for pid in ProtocolId:
        k = 1 if pid in (ProtocolId.OPT_MIN_K, ProtocolId.U_PROT_MIN_K) else None
        assert spec(pid.value, k=k).id == pid


def test_parse_rejects_unknown_protocol():
    with pytest.raises(InvalidProtocolSpec) as info:
        spec("opt2")
    assert "opt0" in str(info.value)


def test_k_protocols_validate_k():
    with pytest.raises(InvalidProtocolSpec):
        spec("opt-min-k", values=3)
    with pytest.raises(InvalidProtocolSpec):
        spec("opt-min-k", values=3, k=3)
    assert spec("opt-min-k", values=3, k=2).name == "opt-min-k[k=2]"


def test_binary_protocols_reject_larger_value_sets():
    with pytest.raises(InvalidProtocolSpec):
        spec("opt0", values=3)
    assert spec("opt-min", values=3).value_count == 3


# ==================== DECISION RULES ====================

def test_p0_decides_zero_at_once_and_one_at_t_plus_one():
    adv = make_adversary(3, 1, (0, 1, 1))
    sched = simulate(spec("p0"), adv)
    assert sched.decision_of(1) == Decision(0, 0)
    assert sched.decision_of(2) == Decision(1, 0)
    ones = simulate(spec("p0"), make_adversary(3, 1, (1, 1, 1)))
    assert ones.decision_times() == [2, 2, 2]


def test_opt0_decides_one_when_no_hidden_path():
    sched = simulate(spec("opt0"), make_adversary(3, 1, (1, 1, 1)))
    assert [d.value for d in sched.decisions] == [1, 1, 1]
    assert sched.decision_times() == [1, 1, 1]


def test_separating_scenario(separating):
    opt0 = simulate(spec("opt0", n=4, t=2), separating)
    hmw = simulate(spec("p0opt-hmw", n=4, t=2), separating)
    assert opt0.decision_of(1) == Decision(2, 1)
    assert hmw.decision_of(1) == Decision(3, 1)


def test_opt_min_k_decides_low_values_immediately():
    adv = make_adversary(4, 2, (0, 2, 2, 1))
    sched = simulate(spec("opt-min-k", n=4, t=2, values=3, k=2), adv)
    assert sched.decision_of(1) == Decision(0, 0)
    assert sched.decision_of(4) == Decision(0, 1)
    assert sched.decision_of(2).time >= 1


def test_opt_maj_follows_known_majority():
    adv = make_adversary(3, 1, (1, 1, 0))
    sched = simulate(spec("opt-maj"), adv)
    assert {d.value for d in sched.decisions} == {1}


def test_u_p0_waits_for_a_relay():
    adv = make_adversary(3, 1, (0, 1, 1))
    sched = simulate(spec("u-p0"), adv)
    # own 0 alone is not enough with t=1
    assert sched.decision_of(1).time == 1
    assert all(d.value == 0 for d in sched.decisions)


# ==================== COINCIDENCES ====================

def test_opt_min_k_with_k_one_is_opt_min():
    dom = EnumerationDomain(3, 1, value_count=3)
    assert same_schedules(spec("opt-min-k", values=3, k=1), spec("opt-min", values=3), dom)


def test_u_prot_min_k_with_k_one_is_u_opt0(small_domain):
    assert same_schedules(spec("u-prot-min-k", k=1), spec("u-opt0"), small_domain)


def test_u_opt0_is_opt0_without_crashes():
    dom = EnumerationDomain(3, 0)
    assert same_schedules(spec("u-opt0", t=0), spec("opt0", t=0), dom)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_opt1_mirrors_opt0(data):
    adv = data.draw(adversaries(n=4, t=2))
    mirrored = simulate(spec("opt0", n=4, t=2), adv.flipped())
    sched = simulate(spec("opt1", n=4, t=2), adv)
    for own, other in zip(sched.decisions, mirrored.decisions):
        assert (own is None) == (other is None)
        if own is not None:
            assert own.time == other.time
            assert own.value == 1 - other.value


# ==================== RULE PROPERTIES ====================

def full_spec(pid, n=4, t=2):
    """Binary rules on {0,1}; value-set rules on {0,1,2} with k=2"""
    values = 2 if pid in BINARY_ONLY else 3
    return ProtocolSpec(pid, n, t, values, 2 if pid in NEEDS_K else None)


@st.composite
def spec_and_adversary(draw):
    protocol = full_spec(draw(st.sampled_from(list(ProtocolId))))
    return protocol, draw(adversaries(n=4, t=2, value_count=protocol.value_count))


@settings(max_examples=100, deadline=None)
@given(spec_and_adversary())
def test_decisions_are_known_values(case):
    protocol, adv = case
    for i in range(1, adv.n + 1):
        previous = None
        for m in range(adv.t + 2):
            if not adv.active_at(i, m):
                break
            current = view(adv, i, m)
            value = protocol.decide(current, previous)
            if value is not None:
                known = known_values(current).vals
                if previous is not None:
                    known |= known_values(previous).vals
                assert value in known
            previous = current


@settings(max_examples=100, deadline=None)
@given(spec_and_adversary())
def test_rules_depend_only_on_their_views(case):
    protocol, adv = case
    for i in range(1, adv.n + 1):
        previous = None
        for m in range(adv.t + 2):
            if not adv.active_at(i, m):
                break
            current = view(adv, i, m)
            first = protocol.decide(current, previous)
            assert protocol.decide(current, previous) == first
            rebuilt_prev = view(adv, i, m - 1) if m > 0 else None
            assert protocol.decide(view(adv, i, m), rebuilt_prev) == first
            previous = current


@settings(max_examples=100, deadline=None)
@given(spec_and_adversary())
def test_simulate_is_repeatable(case):
    protocol, adv = case
    horizon = adv.t + 1
    first = simulate(protocol, adv)
    assert simulate(protocol, adv) == first
    assert simulate(protocol, adv, graph=CommunicationGraph(adv, horizon)) == first
    assert simulate(protocol, adv, graph=CommunicationGraph(adv, horizon + 2)) == first


# ==================== TABLES ====================

def test_tabulated_protocol_reproduces_schedules(small_domain):
    opt0 = spec("opt0")
    advs = list(enumerate_adversaries(small_domain))
    table = ProtocolTable.from_protocol(opt0, advs, small_domain.horizon)
    assert len(table) > 0
    for adv in advs:
        assert simulate(table, adv, small_domain.horizon) == simulate(opt0, adv, small_domain.horizon)


def test_table_json_round_trip_keeps_decisions(tiny_domain):
    table = ProtocolTable.from_protocol(spec("p0", n=2), enumerate_adversaries(tiny_domain), 2, name="p0-table")
    again = ProtocolTable.from_json(table.to_json())
    assert again == table


def test_table_rejects_compact_states(figure):
    view = CommunicationGraph(figure, 2).view(1, 2)
    table = ProtocolTable({view.fingerprint_key(): 1})
    assert table.decide(view, None) == 1
    with pytest.raises(TypeError):
        table.decide(object(), None)
