import pytest

from config.settings import config
from core.errors import CapacityTooSmall
from core.knowledge import hidden_profile
from core.model import figure_adversary, make_adversary, view
from services.domain import EnumerationDomain
from services.oracle_service import (
    FactId,
    FactKind,
    domain_facts,
    eval_fact,
    hidden_variant,
    hidden_variant_check,
    indistinguishable,
    knows,
    oracle_check,
)


# ==================== FACTS ====================

def test_domain_facts_include_majority_only_for_binary_values():
    assert FactId(FactKind.MAJ, 0) in domain_facts(2)
    assert all(f.kind != FactKind.MAJ for f in domain_facts(3))
    assert str(FactId(FactKind.EXISTS_CORRECT, 1)) == "exists-correct(1)"


def test_eval_fact_on_value_facts():
    adv = make_adversary(3, 1, (0, 0, 1))
    assert eval_fact(adv, 0, FactId(FactKind.EXISTS, 1))
    assert not eval_fact(adv, 0, FactId(FactKind.EXISTS, 2))
    assert eval_fact(adv, 0, FactId(FactKind.MAJ, 0))
    # ties go to 1
    tie = make_adversary(2, 1, (0, 1))
    assert eval_fact(tie, 0, FactId(FactKind.MAJ, 1))
    assert not eval_fact(tie, 0, FactId(FactKind.MAJ, 0))


def test_eval_fact_on_correct_knowledge():
    lost = make_adversary(3, 1, (0, 1, 1), [(1, 1, ())])
    assert not eval_fact(lost, 0, FactId(FactKind.EXISTS_CORRECT, 0))
    assert eval_fact(lost, 0, FactId(FactKind.NEVER_KNOWN, 0))
    assert not eval_fact(lost, 0, FactId(FactKind.EVENTUALLY_CORRECT, 0))

    relayed = make_adversary(3, 1, (0, 1, 1), [(1, 1, {2})])
    assert not eval_fact(relayed, 0, FactId(FactKind.EXISTS_CORRECT, 0))
    assert eval_fact(relayed, 1, FactId(FactKind.EXISTS_CORRECT, 0))
    assert eval_fact(relayed, 0, FactId(FactKind.EVENTUALLY_CORRECT, 0))
    assert not eval_fact(relayed, 0, FactId(FactKind.NEVER_KNOWN, 0))


def test_indistinguishable_runs_at_time_zero(tiny_domain):
    target = view(make_adversary(2, 1, (0, 1)), 1, 0)
    # every failure pattern, with process 1 starting on 0
    matches = indistinguishable(tiny_domain, target)
    assert len(matches) == 26
    assert all(adv.value_of(1) == 0 for adv in matches)
    assert knows(tiny_domain, target, FactId(FactKind.EXISTS, 0))
    assert not knows(tiny_domain, target, FactId(FactKind.EXISTS, 1))


# ==================== AGREEMENT ====================

@pytest.mark.parametrize("n", [2, 3])
def test_combinatorial_predicates_match_knowledge(n):
    report = oracle_check(EnumerationDomain(n, 1), workers=1)
    assert report.passed, [row.to_dict() for row in report.rows if row.disagreements]
    assert report.view_classes > 0
    assert report.exists_correct_variant()["at_time"]
    assert report.row("K∃v", "exists(0)").checked == report.view_classes


def test_oracle_report_serializes(tiny_domain):
    payload = oracle_check(tiny_domain, workers=1).to_dict()
    assert payload["passed"]
    assert {"at_time", "eventually"} == set(payload["exists_correct_variant"])
    informational = [row for row in payload["rows"] if row["informational"]]
    assert informational and all(row["fact"].startswith("eventually-correct") for row in informational)


def test_oracle_does_not_depend_on_worker_count(monkeypatch, small_domain):
    monkeypatch.setattr(config, "SWEEP_CHUNK_SIZE", 16)
    serial = oracle_check(small_domain, workers=1).to_dict()
    assert oracle_check(small_domain, workers=3).to_dict() == serial


@pytest.mark.slow
@pytest.mark.parametrize("n,t,values", [(3, 2, 2), (3, 1, 3), (3, 2, 3), (4, 1, 2)])
def test_combinatorial_predicates_on_larger_domains(n, t, values):
    assert oracle_check(EnumerationDomain(n, t, values)).passed


# ==================== HIDDEN VARIANTS ====================

def test_hidden_variant_plants_values_on_the_chains(figure):
    variant = hidden_variant(figure, 1, 2, (0, 0, 0))
    assert variant.values == (1, 0, 0, 0, 1, 1, 1, 1, 1, 1)
    assert view(variant, 1, 2) == view(figure, 1, 2)
    assert hidden_profile(view(variant, 1, 2)).capacity == 3


def test_hidden_variant_without_values_is_the_same_run(figure):
    assert hidden_variant(figure, 1, 2, ()) is figure


def test_hidden_variant_respects_capacity(figure):
    with pytest.raises(CapacityTooSmall):
        hidden_variant(figure, 1, 2, (0, 0, 0, 0))
    with pytest.raises(CapacityTooSmall):
        hidden_variant(figure_adversary(), 1, 0, (0,) * 10)


def test_every_positive_capacity_has_a_variant(small_domain):
    summary = hidden_variant_check(small_domain, workers=1)
    assert summary.checked > 0
    assert summary.passed, summary.failures


@pytest.mark.slow
def test_every_positive_capacity_has_a_variant_with_two_crashes():
    summary = hidden_variant_check(EnumerationDomain(4, 2))
    assert summary.passed, summary.failures
