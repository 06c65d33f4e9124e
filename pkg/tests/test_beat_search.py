import pytest

from config.settings import config
from core.errors import DomainTooLarge, SearchBudgetExceeded
from core.model import simulate
from protocols.registry import ProtocolSpec
from services.beat_search import SearchMode, beat_search, build_catalog, solves
from services.domain import EnumerationDomain, enumerate_adversaries
from services.search_service import Relation, compare
from services.sim_service import TaskSpec

CONSENSUS = TaskSpec.parse("consensus")


def spec(name, n=2, t=1):
    return ProtocolSpec.parse(name, n, t)


def test_catalog_covers_every_run(tiny_domain):
    catalog = build_catalog(spec("opt0"), tiny_domain)
    assert len(catalog.runs) == 52
    assert len(catalog.keys) == len(catalog.index)
    for run in catalog.runs:
        for process, chain in run.chains.items():
            assert catalog.time[chain[0]] == 0
            for parent, child in zip(chain, chain[1:]):
                assert catalog.parent[child] == parent


@pytest.mark.parametrize("mode", list(SearchMode))
def test_opt0_is_unbeatable_with_two_processes(tiny_domain, mode):
    result = beat_search(spec("opt0"), CONSENSUS, tiny_domain, mode)
    assert not result.found
    assert result.certificate["exhaustive"]
    assert all(row["relation"] != Relation.STRICTLY_DOMINATES.value for row in result.audit["protocols_checked"])


def test_p0_is_beaten_with_two_processes(tiny_domain):
    result = beat_search(spec("p0"), CONSENSUS, tiny_domain)
    assert result.found
    assert result.audit["relation"] == Relation.STRICTLY_DOMINATES.value
    assert solves(result.table, CONSENSUS, tiny_domain)
    assert compare(result.table, spec("p0"), tiny_domain, workers=1).relation == Relation.STRICTLY_DOMINATES


def test_hmw_is_beaten_with_two_processes(tiny_domain):
    result = beat_search(spec("p0opt-hmw"), CONSENSUS, tiny_domain)
    assert result.found
    payload = result.to_dict()
    assert payload["table"]["decisions"]
    assert payload["mode"] == "per-process"


def test_witness_table_decides_wherever_target_did(tiny_domain):
    target = spec("p0")
    result = beat_search(target, CONSENSUS, tiny_domain, audit=False)
    for adv in enumerate_adversaries(tiny_domain):
        mine = simulate(result.table, adv, tiny_domain.horizon)
        theirs = simulate(target, adv, tiny_domain.horizon)
        for own, other in zip(mine.decisions, theirs.decisions):
            if other is not None:
                assert own is not None and own.time <= other.time


def test_guard_rejects_large_domains():
    with pytest.raises(DomainTooLarge):
        beat_search(spec("opt0", 4, 1), CONSENSUS, EnumerationDomain(4, 1))


def test_exhausted_budget_is_not_a_certificate(tiny_domain):
    with pytest.raises(SearchBudgetExceeded):
        beat_search(spec("opt0"), CONSENSUS, tiny_domain, budget=1)


@pytest.mark.slow
@pytest.mark.parametrize("mode", list(SearchMode))
@pytest.mark.parametrize("target,task", [("opt0", "consensus"), ("opt-maj", "majority-consensus")])
def test_unbeatable_with_three_processes(target, task, mode, small_domain):
    result = beat_search(spec(target, 3, 1), TaskSpec.parse(task), small_domain, mode, budget=config.SEARCH_DEFAULT_BUDGET)
    assert not result.found
    assert result.certificate["exhaustive"]


@pytest.mark.slow
def test_p0_is_beaten_with_three_processes(small_domain):
    assert beat_search(spec("p0", 3, 1), CONSENSUS, small_domain).found
