"""
Simulation service - task properties, stopping-time bounds and verification sweeps.

Features:
- TaskSpec for consensus, majority consensus, k-set and their uniform variants
- check_run(): Decision / Validity / (k-, uniform) Agreement / Majority Validity on one run
- check_bounds(): the stopping-time theorem bound applicable to a protocol
- verify(): exhaustive sweep over a domain, with observed decision-time maxima per f
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Dict, List, Optional, Tuple

from config.settings import config
from core.errors import HorizonTooShort, InvalidTaskSpec
from core.logging import safe_stats_update
from core.model import Adversary, CommunicationGraph, DecisionSchedule, simulate
from protocols.registry import ProtocolId, ProtocolSpec
from services.domain import EnumerationDomain, pattern_groups
from services.sweep import run_sweep
from tools.utils import log_activity

logger = logging.getLogger(__name__)


class TaskKind(str, Enum):
    CONSENSUS = "consensus"
    MAJORITY_CONSENSUS = "majority-consensus"
    K_SET = "k-set"
    UNIFORM_CONSENSUS = "uniform-consensus"
    UNIFORM_K_SET = "uniform-k-set"


UNIFORM_KINDS = {TaskKind.UNIFORM_CONSENSUS, TaskKind.UNIFORM_K_SET}
SET_KINDS = {TaskKind.K_SET, TaskKind.UNIFORM_K_SET}


@dataclass(frozen=True)
class TaskSpec:
    kind: TaskKind
    k: int = 1
    value_count: int = 2

    def __post_init__(self):
        if not isinstance(self.kind, TaskKind):
            object.__setattr__(self, "kind", TaskKind(self.kind))
        if self.k < 1:
            raise InvalidTaskSpec(f"k must be at least 1, got {self.k}")
        if self.kind in SET_KINDS and self.value_count < self.k + 1:
            raise InvalidTaskSpec(f"{self.kind.value} with k={self.k} needs at least {self.k + 1} values")
        if self.kind not in SET_KINDS and self.k != 1:
            raise InvalidTaskSpec(f"{self.kind.value} has k = 1")
        if self.kind == TaskKind.MAJORITY_CONSENSUS and self.value_count != 2:
            raise InvalidTaskSpec("majority consensus is binary")

    @classmethod
    def parse(cls, name: str, k: Optional[int] = None, value_count: int = 2) -> "TaskSpec":
        aliases = {"majority": TaskKind.MAJORITY_CONSENSUS, "uniform": TaskKind.UNIFORM_CONSENSUS}
        key = name.strip().lower()
        try:
            kind = aliases.get(key) or TaskKind(key)
        except ValueError:
            known = ", ".join(kind.value for kind in TaskKind)
            raise InvalidTaskSpec(f"unknown task '{name}' (known: {known})") from None
        return cls(kind, (k or 1) if kind in SET_KINDS else 1, value_count)

    @property
    def uniform(self) -> bool:
        return self.kind in UNIFORM_KINDS

    @property
    def agreement_bound(self) -> int:
        """Maximum number of distinct decided values"""
        return self.k if self.kind in SET_KINDS else 1

    def describe(self) -> dict:
        return {"kind": self.kind.value, "k": self.k, "values": self.value_count}


@dataclass(frozen=True)
class PropertyFailure:
    property: str
    detail: Dict[str, object]


@dataclass(frozen=True)
class RunVerdict:
    decision: bool
    agreement: bool
    validity: bool
    majority_validity: Optional[bool] = None
    failures: Tuple[PropertyFailure, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.failures


def check_run(task: TaskSpec, adv: Adversary, sched: DecisionSchedule) -> RunVerdict:
    if sched.horizon < adv.t + 1:
        raise HorizonTooShort(f"schedule horizon {sched.horizon} is below t+1={adv.t + 1}")
    failures: List[PropertyFailure] = []
    decided = {i: d for i, d in enumerate(sched.decisions, start=1) if d is not None}

    undecided = sorted(i for i in adv.correct if i not in decided)
    if undecided:
        failures.append(PropertyFailure("decision", {"processes": undecided}))

    invalid = sorted(i for i, d in decided.items() if d.value not in adv.values)
    if invalid:
        failures.append(PropertyFailure("validity", {
            "processes": invalid,
            "values": [decided[i].value for i in invalid],
        }))

    bound = task.agreement_bound
    group = decided if task.uniform else {i: d for i, d in decided.items() if i in adv.correct}
    if len({d.value for d in group.values()}) > bound:
        members = sorted(group)
        failures.append(PropertyFailure("uniform-agreement" if task.uniform else "agreement", {
            "processes": members,
            "values": [group[i].value for i in members],
            "times": [group[i].time for i in members],
        }))

    majority_ok: Optional[bool] = None
    if task.kind == TaskKind.MAJORITY_CONSENSUS:
        majority_ok = True
        for v in (0, 1):
            supporters = sum(1 for i in adv.correct if adv.value_of(i) == v)
            if 2 * supporters > adv.n:
                wrong = sorted(i for i, d in decided.items() if d.value != v)
                if wrong:
                    majority_ok = False
                    failures.append(PropertyFailure("majority-validity", {
                        "majority_value": v, "processes": wrong,
                    }))

    kinds = {failure.property for failure in failures}
    return RunVerdict(
        decision="decision" not in kinds,
        agreement=not kinds & {"agreement", "uniform-agreement"},
        validity="validity" not in kinds,
        majority_validity=majority_ok,
        failures=tuple(failures),
    )


def stopping_bound(spec: ProtocolSpec, f: int) -> int:
    """Latest decision time the protocol's theorem allows in a run with f crashes"""
    t, k = spec.t, spec.k or 1
    if spec.id == ProtocolId.OPT_MIN_K:
        return f // k + 1
    if spec.id == ProtocolId.U_OPT0:
        return f + 1 if f >= t - 1 else f + 2
    if spec.id == ProtocolId.U_PROT_MIN_K:
        if f == t - 1 and f % k == 0:
            return f // k + 1
        return min(t // k + 1, f // k + 2)
    return t + 1


def check_bounds(task: TaskSpec, spec: ProtocolSpec, adv: Adversary, sched: DecisionSchedule) -> bool:
    bound = stopping_bound(spec, adv.f)
    return all(time <= bound for time in sched.decision_times())


# ==================== VERIFICATION SWEEP ====================

@dataclass
class VerifySummary:
    runs: int = 0
    failed_runs: int = 0
    bound_violations: int = 0
    failures: List[dict] = field(default_factory=list)
    violations: List[dict] = field(default_factory=list)
    max_time_by_f: Dict[int, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failed_runs == 0 and self.bound_violations == 0

    def merge(self, other: "VerifySummary") -> "VerifySummary":
        self.runs += other.runs
        self.failed_runs += other.failed_runs
        self.bound_violations += other.bound_violations
        self.failures.extend(other.failures[: max(0, config.WITNESS_LIMIT - len(self.failures))])
        self.violations.extend(other.violations[: max(0, config.WITNESS_LIMIT - len(self.violations))])
        for f, time in other.max_time_by_f.items():
            self.max_time_by_f[f] = max(time, self.max_time_by_f.get(f, time))
        return self


def verify_chunk(spec: ProtocolSpec, task: TaskSpec, dom: EnumerationDomain, start: int, stop: int) -> VerifySummary:
    summary = VerifySummary()
    for group in pattern_groups(dom, start, stop):
        graph = CommunicationGraph(group[0], dom.horizon)
        for adv in group:
            sched = simulate(spec, adv, dom.horizon, graph=graph)
            summary.runs += 1
            verdict = check_run(task, adv, sched)
            if not verdict.passed:
                summary.failed_runs += 1
                if len(summary.failures) < config.WITNESS_LIMIT:
                    summary.failures.append({
                        "adversary": adv.describe(),
                        "failures": [{"property": f.property, "detail": f.detail} for f in verdict.failures],
                    })
            if not check_bounds(task, spec, adv, sched):
                summary.bound_violations += 1
                if len(summary.violations) < config.WITNESS_LIMIT:
                    summary.violations.append({
                        "adversary": adv.describe(),
                        "bound": stopping_bound(spec, adv.f),
                        "schedule": sched.describe(),
                    })
            latest = sched.last_decision_time
            if latest is not None:
                summary.max_time_by_f[adv.f] = max(latest, summary.max_time_by_f.get(adv.f, latest))
    return summary


def verify(spec: ProtocolSpec, task: TaskSpec, dom: EnumerationDomain, workers: Optional[int] = None) -> VerifySummary:
    """check_run and check_bounds on every adversary of the domain"""
    parts = run_sweep(dom, partial(verify_chunk, spec, task), workers, label=f"verify {spec.name}")
    summary = VerifySummary()
    for part in parts:
        summary.merge(part)
    safe_stats_update({"runs_simulated": summary.runs, "runs_failed": summary.failed_runs})
    log_activity(f"verify {spec.name} / {task.kind.value}: {summary.runs} runs, "
                 f"{summary.failed_runs} failing, {summary.bound_violations} over bound")
    return summary
