import pytest

from config.settings import config
from protocols.registry import ProtocolSpec
from services.domain import EnumerationDomain, count_adversaries
from services.search_service import Relation, compare, compare_last_decider, dominates


def spec(name, n=3, t=1):
    return ProtocolSpec.parse(name, n, t)


def test_opt0_strictly_dominates_p0(small_domain):
    report = compare(spec("opt0"), spec("p0"), small_domain, workers=1)
    assert report.relation == Relation.STRICTLY_DOMINATES
    assert report.forward_violations == 0
    assert report.witnesses
    witness = report.witnesses[0]
    assert witness.time_a < witness.time_b or witness.time_b is None
    assert report.runs == count_adversaries(small_domain)


def test_relation_is_reversed_when_arguments_swap(small_domain):
    report = compare(spec("p0"), spec("opt0"), small_domain, workers=1)
    assert report.relation == Relation.DOMINATED
    assert not dominates(report)


def test_opt0_and_opt1_are_incomparable(small_domain):
    report = compare(spec("opt0"), spec("opt1"), small_domain, workers=1)
    assert report.relation == Relation.INCOMPARABLE
    assert len(report.witnesses) == 2


def test_protocol_dominates_itself(small_domain):
    report = compare(spec("opt0"), spec("opt0"), small_domain, workers=1)
    assert report.relation == Relation.DOMINATES
    assert report.witnesses == []


@pytest.mark.parametrize("n,t", [(2, 1), (3, 2)])
def test_opt0_strictly_dominates_hmw(n, t):
    dom = EnumerationDomain(n, t)
    report = compare(spec("opt0", n, t), spec("p0opt-hmw", n, t), dom, workers=1)
    assert report.relation == Relation.STRICTLY_DOMINATES
    assert report.witnesses[0].adversary["crashes"]


def test_opt0_and_hmw_coincide_with_three_processes_and_one_crash(small_domain):
    report = compare(spec("opt0"), spec("p0opt-hmw"), small_domain, workers=1)
    assert report.relation == Relation.DOMINATES


@pytest.mark.parametrize("a,b", [("opt0", "p0"), ("opt0", "p0opt-hmw"), ("u-opt0", "u-p0"), ("opt0", "opt0")])
def test_per_process_domination_carries_to_last_decider(a, b):
    dom = EnumerationDomain(3, 2)
    per_process = compare(spec(a, 3, 2), spec(b, 3, 2), dom, workers=1)
    last_decider = compare_last_decider(spec(a, 3, 2), spec(b, 3, 2), dom, workers=1)
    if dominates(per_process):
        assert dominates(last_decider)
    assert last_decider.mode == "last-decider"


def test_report_serializes(small_domain):
    payload = compare(spec("opt0"), spec("p0"), small_domain, workers=1).to_dict()
    assert payload["relation"] == "strictly-dominates"
    assert payload["mode"] == "per-process"
    assert {"adversary", "process", "time_a", "time_b"} <= set(payload["witnesses"][0])


def test_comparisons_do_not_depend_on_worker_count(monkeypatch, small_domain):
    monkeypatch.setattr(config, "SWEEP_CHUNK_SIZE", 16)
    for compare_with in (compare, compare_last_decider):
        serial = compare_with(spec("opt0"), spec("p0"), small_domain, workers=1).to_dict()
        assert compare_with(spec("opt0"), spec("p0"), small_domain, workers=3).to_dict() == serial
