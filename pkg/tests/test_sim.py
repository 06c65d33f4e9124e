import pytest
from hypothesis import given, settings, strategies as st

from config.settings import config
from core.errors import HorizonTooShort, InvalidTaskSpec
from core.logging import stats_snapshot
from core.model import Decision, DecisionSchedule, make_adversary, simulate
from protocols.registry import ProtocolSpec
from services.domain import EnumerationDomain, count_adversaries
from services.sim_service import TaskKind, TaskSpec, check_bounds, check_run, stopping_bound, verify
from tests.strategies import adversaries
from tools.utils import dumps_json


def schedule(decisions, horizon=2, crash_round=None):
    n = len(decisions)
    return DecisionSchedule(
        n, horizon,
        tuple(Decision(*d) if d is not None else None for d in decisions),
        tuple(crash_round or (None,) * n),
    )


# ==================== TASKS ====================

def test_task_parsing():
    assert TaskSpec.parse("majority").kind == TaskKind.MAJORITY_CONSENSUS
    assert TaskSpec.parse("uniform").uniform
    assert TaskSpec.parse("k-set", k=2, value_count=3).agreement_bound == 2
    assert TaskSpec.parse("consensus", k=2).k == 1
    with pytest.raises(InvalidTaskSpec):
        TaskSpec.parse("k-set", k=2, value_count=2)
    with pytest.raises(InvalidTaskSpec):
        TaskSpec.parse("leader-election")
    with pytest.raises(InvalidTaskSpec):
        TaskSpec(TaskKind.MAJORITY_CONSENSUS, value_count=3)


# ==================== SINGLE RUNS ====================

def test_check_run_reports_each_property():
    adv = make_adversary(3, 1, (0, 1, 1), [(3, 1, ())])
    consensus = TaskSpec(TaskKind.CONSENSUS)

    assert check_run(consensus, adv, schedule([(1, 0), (1, 0), None])).passed

    undecided = check_run(consensus, adv, schedule([(1, 0), None, None]))
    assert not undecided.decision
    assert undecided.failures[0].detail == {"processes": [2]}

    split = check_run(consensus, adv, schedule([(1, 0), (2, 1), None]))
    assert not split.agreement
    assert split.failures[0].property == "agreement"

    invalid = check_run(consensus, make_adversary(3, 1, (1, 1, 1)), schedule([(1, 0), (1, 0), (1, 0)]))
    assert not invalid.validity


def test_uniform_agreement_counts_faulty_deciders():
    adv = make_adversary(3, 1, (0, 1, 1), [(1, 2, ())])
    sched = schedule([(0, 0), (2, 1), (2, 1)])
    assert check_run(TaskSpec(TaskKind.CONSENSUS), adv, sched).passed
    verdict = check_run(TaskSpec(TaskKind.UNIFORM_CONSENSUS), adv, sched)
    assert [f.property for f in verdict.failures] == ["uniform-agreement"]


def test_majority_validity():
    adv = make_adversary(3, 1, (1, 1, 0))
    verdict = check_run(TaskSpec(TaskKind.MAJORITY_CONSENSUS), adv, schedule([(1, 0), (1, 0), (1, 0)]))
    assert verdict.majority_validity is False
    assert check_run(TaskSpec(TaskKind.CONSENSUS), adv, schedule([(1, 0), (1, 0), (1, 0)])).passed


def test_k_set_agreement_bound():
    adv = make_adversary(3, 1, (0, 1, 2))
    sched = schedule([(0, 0), (0, 1), (1, 0)])
    assert check_run(TaskSpec(TaskKind.K_SET, 2, 3), adv, sched).passed
    three = schedule([(0, 0), (0, 1), (0, 2)])
    assert not check_run(TaskSpec(TaskKind.K_SET, 2, 3), adv, three).agreement


def test_check_run_rejects_short_horizon():
    adv = make_adversary(3, 2, (0, 1, 1))
    with pytest.raises(HorizonTooShort):
        check_run(TaskSpec(TaskKind.CONSENSUS), adv, schedule([(0, 0)] * 3, horizon=2))


# ==================== STOPPING BOUNDS ====================

def test_stopping_bounds():
    opt_min_k = ProtocolSpec.parse("opt-min-k", 5, 4, 3, 2)
    assert [stopping_bound(opt_min_k, f) for f in range(5)] == [1, 1, 2, 2, 3]
    u_opt0 = ProtocolSpec.parse("u-opt0", 5, 3)
    assert [stopping_bound(u_opt0, f) for f in range(4)] == [2, 3, 3, 4]
    u_k = ProtocolSpec.parse("u-prot-min-k", 5, 3, 3, 2)
    assert [stopping_bound(u_k, f) for f in range(4)] == [2, 2, 2, 2]
    assert stopping_bound(ProtocolSpec.parse("opt0", 5, 3), 0) == 4


def test_check_bounds_flags_late_decisions():
    adv = make_adversary(3, 1, (1, 1, 1))
    spec = ProtocolSpec.parse("u-opt0", 3, 1)
    task = TaskSpec(TaskKind.UNIFORM_CONSENSUS)
    assert check_bounds(task, spec, adv, schedule([(1, 1)] * 3))
    assert not check_bounds(task, spec, adv, schedule([(2, 1)] * 3))


# ==================== SWEEPS ====================

CERTIFIED = [
    ("p0", "consensus", 2, None),
    ("opt0", "consensus", 2, None),
    ("opt1", "consensus", 2, None),
    ("p0opt-hmw", "consensus", 2, None),
    ("opt-maj", "majority-consensus", 2, None),
    ("u-p0", "uniform-consensus", 2, None),
    ("u-opt0", "uniform-consensus", 2, None),
    ("opt-min", "consensus", 3, None),
    ("opt-min-k", "k-set", 3, 2),
    ("u-prot-min-k", "uniform-k-set", 3, 2),
]


@pytest.mark.parametrize("t", [0, 1, 2])
@pytest.mark.parametrize("protocol,task,values,k", CERTIFIED)
def test_protocols_solve_their_tasks(protocol, task, values, k, t):
    dom = EnumerationDomain(3, t, values)
    spec = ProtocolSpec.parse(protocol, 3, t, values, k)
    summary = verify(spec, TaskSpec.parse(task, k, values), dom, workers=1)
    assert summary.runs == count_adversaries(dom)
    assert summary.failed_runs == 0, summary.failures
    assert summary.bound_violations == 0, summary.violations
    assert stats_snapshot()["runs_simulated"] == summary.runs


UNIFORM_CASES = [
    ("u-p0", 2, None, ("consensus", "uniform-consensus")),
    ("u-opt0", 2, None, ("consensus", "uniform-consensus")),
    ("u-prot-min-k", 3, 2, ("k-set", "uniform-k-set")),
]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(UNIFORM_CASES), st.data())
def test_uniform_protocols_also_solve_the_plain_task(case, data):
    protocol, values, k, tasks = case
    adv = data.draw(adversaries(n=4, t=2, value_count=values))
    sched = simulate(ProtocolSpec.parse(protocol, 4, 2, values, k), adv)
    for task in tasks:
        verdict = check_run(TaskSpec.parse(task, k, values), adv, sched)
        assert verdict.passed, verdict


def test_observed_maxima_follow_theorem_bound():
    dom = EnumerationDomain(3, 2, 3)
    summary = verify(ProtocolSpec.parse("opt-min-k", 3, 2, 3, 2), TaskSpec.parse("k-set", 2, 3), dom, workers=1)
    assert summary.max_time_by_f[0] == 1
    assert summary.max_time_by_f[2] <= 2


def test_verify_reports_failures_for_the_wrong_task(small_domain):
    summary = verify(ProtocolSpec.parse("opt0", 3, 1), TaskSpec.parse("uniform-consensus"), small_domain, workers=1)
    assert summary.failed_runs > 0
    assert 0 < len(summary.failures) <= config.WITNESS_LIMIT
    assert summary.failures[0]["failures"][0]["property"] == "uniform-agreement"


def test_sweeps_do_not_depend_on_worker_count(monkeypatch, small_domain):
    monkeypatch.setattr(config, "SWEEP_CHUNK_SIZE", 16)
    spec, task = ProtocolSpec.parse("p0opt-hmw", 3, 1), TaskSpec.parse("consensus")
    serial = verify(spec, task, small_domain, workers=1)
    parallel = verify(spec, task, small_domain, workers=3)
    assert dumps_json(serial.__dict__) == dumps_json(parallel.__dict__)


@pytest.mark.slow
@pytest.mark.parametrize("protocol,task", [("opt-min-k", "k-set"), ("u-prot-min-k", "uniform-k-set")])
@pytest.mark.parametrize("t", [1, 2, 3])
def test_k_set_protocols_at_four_processes(protocol, task, t):
    dom = EnumerationDomain(4, t, 3)
    summary = verify(ProtocolSpec.parse(protocol, 4, t, 3, 2), TaskSpec.parse(task, 2, 3), dom)
    assert summary.passed, summary.failures or summary.violations
