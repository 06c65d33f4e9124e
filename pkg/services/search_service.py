"""
Search service - domination between two protocols over an enumeration domain.

Usage:
    report = compare(ProtocolSpec.parse("opt0", 3, 1), ProtocolSpec.parse("p0", 3, 1), dom)
    report.relation   # Relation.STRICTLY_DOMINATES

compare() works per process: a dominates b when, wherever b decides, a has already
decided. compare_last_decider() looks only at the latest decision of each run.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import List, Optional

from config.settings import config
from core.logging import safe_stats_update
from core.model import CommunicationGraph, DecisionRule, simulate
from services.domain import EnumerationDomain, pattern_groups
from services.sweep import run_sweep
from tools.utils import log_activity

logger = logging.getLogger(__name__)


class Relation(str, Enum):
    DOMINATES = "dominates"
    STRICTLY_DOMINATES = "strictly-dominates"
    INCOMPARABLE = "incomparable"
    DOMINATED = "dominated"


@dataclass(frozen=True)
class Witness:
    adversary: dict
    process: Optional[int]
    time_a: Optional[int]
    time_b: Optional[int]

    def to_dict(self) -> dict:
        return {"adversary": self.adversary, "process": self.process, "time_a": self.time_a, "time_b": self.time_b}


@dataclass
class ComparisonChunk:
    runs: int = 0
    forward: int = 0
    backward: int = 0
    forward_witnesses: List[Witness] = field(default_factory=list)
    backward_witnesses: List[Witness] = field(default_factory=list)

    def add(self, direction: str, witness: Witness) -> None:
        if direction == "forward":
            self.forward += 1
            if len(self.forward_witnesses) < config.WITNESS_LIMIT:
                self.forward_witnesses.append(witness)
        else:
            self.backward += 1
            if len(self.backward_witnesses) < config.WITNESS_LIMIT:
                self.backward_witnesses.append(witness)

    def merge(self, other: "ComparisonChunk") -> "ComparisonChunk":
        self.runs += other.runs
        self.forward += other.forward
        self.backward += other.backward
        room = max(0, config.WITNESS_LIMIT - len(self.forward_witnesses))
        self.forward_witnesses.extend(other.forward_witnesses[:room])
        room = max(0, config.WITNESS_LIMIT - len(self.backward_witnesses))
        self.backward_witnesses.extend(other.backward_witnesses[:room])
        return self


@dataclass
class DominationReport:
    """
    `forward_violations` count places where a fails to dominate b (b decides, a has not yet),
    `backward_violations` the places where a decides strictly earlier than b.
    """
    relation: Relation
    witnesses: List[Witness]
    runs: int
    forward_violations: int
    backward_violations: int
    mode: str = "per-process"

    def to_dict(self) -> dict:
        return {
            "relation": self.relation.value,
            "mode": self.mode,
            "runs": self.runs,
            "forward_violations": self.forward_violations,
            "backward_violations": self.backward_violations,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


def _later(time: Optional[int], than: int) -> bool:
    return time is None or time > than


def per_process_chunk(a: DecisionRule, b: DecisionRule, dom: EnumerationDomain, start: int, stop: int) -> ComparisonChunk:
    chunk = ComparisonChunk()
    for group in pattern_groups(dom, start, stop):
        graph = CommunicationGraph(group[0], dom.horizon)
        for adv in group:
            run_a = simulate(a, adv, dom.horizon, graph=graph)
            run_b = simulate(b, adv, dom.horizon, graph=graph)
            chunk.runs += 1
            for i in range(1, adv.n + 1):
                da, db = run_a.decision_of(i), run_b.decision_of(i)
                ta = da.time if da else None
                tb = db.time if db else None
                if tb is not None and _later(ta, tb):
                    chunk.add("forward", Witness(adv.describe(), i, ta, tb))
                if ta is not None and _later(tb, ta):
                    chunk.add("backward", Witness(adv.describe(), i, ta, tb))
    return chunk


def last_decider_chunk(a: DecisionRule, b: DecisionRule, dom: EnumerationDomain, start: int, stop: int) -> ComparisonChunk:
    chunk = ComparisonChunk()
    for group in pattern_groups(dom, start, stop):
        graph = CommunicationGraph(group[0], dom.horizon)
        for adv in group:
            la = simulate(a, adv, dom.horizon, graph=graph).last_decision_time
            lb = simulate(b, adv, dom.horizon, graph=graph).last_decision_time
            chunk.runs += 1
            if la is None or lb is None:
                continue
            if la > lb:
                chunk.add("forward", Witness(adv.describe(), None, la, lb))
            elif la < lb:
                chunk.add("backward", Witness(adv.describe(), None, la, lb))
    return chunk


def classify(chunk: ComparisonChunk, mode: str) -> DominationReport:
    if chunk.forward == 0 and chunk.backward == 0:
        relation, witnesses = Relation.DOMINATES, []
    elif chunk.forward == 0:
        relation, witnesses = Relation.STRICTLY_DOMINATES, chunk.backward_witnesses
    elif chunk.backward == 0:
        relation, witnesses = Relation.DOMINATED, chunk.forward_witnesses
    else:
        relation = Relation.INCOMPARABLE
        witnesses = chunk.backward_witnesses[:1] + chunk.forward_witnesses[:1]
    return DominationReport(relation, list(witnesses), chunk.runs, chunk.forward, chunk.backward, mode)


def _compare(worker, a: DecisionRule, b: DecisionRule, dom: EnumerationDomain,
             workers: Optional[int], mode: str) -> DominationReport:
    name_a, name_b = getattr(a, "name", "a"), getattr(b, "name", "b")
    total = ComparisonChunk()
    for part in run_sweep(dom, partial(worker, a, b), workers, label=f"compare {name_a} vs {name_b}"):
        total.merge(part)
    report = classify(total, mode)
    safe_stats_update({"runs_simulated": 2 * total.runs})
    log_activity(f"compare ({mode}) {name_a} vs {name_b}: {report.relation.value} over {total.runs} adversaries")
    return report


def compare(a: DecisionRule, b: DecisionRule, dom: EnumerationDomain, workers: Optional[int] = None) -> DominationReport:
    return _compare(per_process_chunk, a, b, dom, workers, "per-process")


def compare_last_decider(a: DecisionRule, b: DecisionRule, dom: EnumerationDomain,
                         workers: Optional[int] = None) -> DominationReport:
    return _compare(last_decider_chunk, a, b, dom, workers, "last-decider")


def dominates(report: DominationReport) -> bool:
    """a ≼ b in the report's mode"""
    return report.relation in (Relation.DOMINATES, Relation.STRICTLY_DOMINATES)
