"""
Beat search - looks for a decision table that solves a task and strictly dominates a target.

Every reachable view class of a tiny domain gets one Boolean per value ("the table decides v
here"). Task properties, the domination constraint and the strictness requirement become
clauses over those Booleans and z3 decides satisfiability:

- sat:     the model is a witness table, re-checked by simulation before it is returned
- unsat:   no table over the whole space beats the target; the result is a certificate
- unknown: the resource limit ran out (SearchBudgetExceeded), never reported as "none"

Per-process mode only creates variables for views at which the target has not decided at an
earlier time, since a dominating table must have decided at all later ones.
"""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import z3

from config.settings import config
from core.errors import DomainTooLarge, InvalidProtocolSpec, SearchAuditError, SearchBudgetExceeded
from core.logging import safe_stats_update
from core.model import Adversary, CommunicationGraph, DecisionRule, simulate
from protocols.registry import NEEDS_K, ProtocolId, ProtocolSpec
from protocols.table import ProtocolTable
from services.domain import EnumerationDomain, enumerate_adversaries, pattern_groups
from services.search_service import DominationReport, Relation, compare, compare_last_decider
from services.sim_service import TaskKind, TaskSpec, check_run
from tools.utils import log_activity

logger = logging.getLogger(__name__)

RLIMIT_MAX = 2 ** 32 - 1


class SearchMode(str, Enum):
    PER_PROCESS = "per-process"
    LAST_DECIDER = "last-decider"


@dataclass
class RunChains:
    """One adversary: per process the view ids at times 0..last active time, and the target's decision time"""
    adversary: Adversary
    chains: Dict[int, List[int]]
    target_times: Dict[int, Optional[int]]

    @property
    def last_decision(self) -> Optional[int]:
        return max((t for t in self.target_times.values() if t is not None), default=None)


@dataclass
class ViewCatalog:
    keys: List[str] = field(default_factory=list)
    index: Dict[str, int] = field(default_factory=dict)
    parent: List[Optional[int]] = field(default_factory=list)
    time: List[int] = field(default_factory=list)
    runs: List[RunChains] = field(default_factory=list)
    target_decision_views: set = field(default_factory=set)
    undecided_region: set = field(default_factory=set)

    def intern(self, key: str, parent: Optional[int], at: int) -> int:
        known = self.index.get(key)
        if known is not None:
            return known
        self.index[key] = len(self.keys)
        self.keys.append(key)
        self.parent.append(parent)
        self.time.append(at)
        return self.index[key]


def build_catalog(target: DecisionRule, dom: EnumerationDomain) -> ViewCatalog:
    catalog = ViewCatalog()
    for group in pattern_groups(dom):
        graph = CommunicationGraph(group[0], dom.horizon)
        for adv in group:
            schedule = simulate(target, adv, dom.horizon, graph=graph)
            chains: Dict[int, List[int]] = {}
            times: Dict[int, Optional[int]] = {}
            for i in range(1, adv.n + 1):
                chain: List[int] = []
                for m in range(dom.horizon + 1):
                    if not adv.active_at(i, m):
                        break
                    key = graph.view(i, m, adv.values).fingerprint_key()
                    chain.append(catalog.intern(key, chain[-1] if chain else None, m))
                decision = schedule.decision_of(i)
                times[i] = decision.time if decision else None
                chains[i] = chain
                limit = len(chain) if decision is None else decision.time + 1
                catalog.undecided_region.update(chain[:limit])
                if decision is not None:
                    catalog.target_decision_views.add(chain[decision.time])
            catalog.runs.append(RunChains(adv, chains, times))
    return catalog


@dataclass
class SearchResult:
    target: str
    task: dict
    mode: SearchMode
    domain: dict
    table: Optional[ProtocolTable]
    certificate: dict
    audit: dict
    elapsed: float

    @property
    def found(self) -> bool:
        return self.table is not None

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "task": self.task,
            "mode": self.mode.value,
            "domain": self.domain,
            "found": self.found,
            "table": self.table.to_json() if self.table is not None else None,
            "certificate": self.certificate,
            "audit": self.audit,
            "elapsed": round(self.elapsed, 3),
        }


class TableEncoding:
    """z3 encoding of the decision tables over one view catalog"""

    def __init__(self, catalog: ViewCatalog, task: TaskSpec, mode: SearchMode, value_count: int):
        self.catalog = catalog
        self.task = task
        self.mode = mode
        self.values = range(value_count)
        self.solver = z3.Solver()

        if mode == SearchMode.PER_PROCESS:
            self.free = sorted(catalog.undecided_region)
        else:
            self.free = list(range(len(catalog.keys)))
        free = set(self.free)
        self.decide = {(w, v): z3.Bool(f"d_{w}_{v}") for w in self.free for v in self.values}
        self.decided_by: Dict[int, z3.BoolRef] = {}
        for w in range(len(catalog.keys)):
            self.decided_by[w] = z3.Bool(f"b_{w}") if w in free else z3.BoolVal(True)

        for w in self.free:
            here = [self.decide[w, v] for v in self.values]
            self.solver.add(z3.AtMost(*here, 1))
            parent = catalog.parent[w]
            before = self.decided_by[parent] if parent is not None else z3.BoolVal(False)
            self.solver.add(self.decided_by[w] == z3.Or(before, *here))
            self.solver.add(z3.Implies(z3.Or(*here), z3.Not(before)))

    def has(self, w: int) -> z3.BoolRef:
        if (w, 0) not in self.decide:
            return z3.BoolVal(False)
        return z3.Or(*(self.decide[w, v] for v in self.values))

    def decides(self, chain: List[int], v: int) -> z3.BoolRef:
        terms = [self.decide[w, v] for w in chain if (w, v) in self.decide]
        return z3.Or(*terms) if terms else z3.BoolVal(False)

    def add_task(self) -> None:
        for run in self.catalog.runs:
            adv = run.adversary
            for i in sorted(adv.correct):
                self.solver.add(self.decided_by[run.chains[i][-1]])
            for v in self.values:
                if v not in adv.values:
                    for chain in run.chains.values():
                        self.solver.add(z3.Not(self.decides(chain, v)))
            group = range(1, adv.n + 1) if self.task.uniform else sorted(adv.correct)
            used = [z3.Or(*(self.decides(run.chains[i], v) for i in group)) for v in self.values]
            if self.task.agreement_bound < len(used):
                self.solver.add(z3.AtMost(*used, self.task.agreement_bound))
            if self.task.kind == TaskKind.MAJORITY_CONSENSUS:
                for v in (0, 1):
                    if 2 * sum(1 for i in adv.correct if adv.value_of(i) == v) > adv.n:
                        for chain in run.chains.values():
                            self.solver.add(z3.Not(self.decides(chain, 1 - v)))

    def add_per_process_domination(self) -> None:
        for w in sorted(self.catalog.target_decision_views):
            self.solver.add(self.decided_by[w])
        earlier = [self.has(w) for w in self.free if w not in self.catalog.target_decision_views]
        self.solver.add(z3.Or(*earlier) if earlier else z3.BoolVal(False))

    def add_last_decider_domination(self) -> None:
        strict = []
        for run in self.catalog.runs:
            last = run.last_decision
            if last is None:
                continue
            for chain in run.chains.values():
                for w in chain[last + 1:]:
                    self.solver.add(z3.Not(self.has(w)))
            if last >= 1:
                at_last = [self.has(chain[last]) for chain in run.chains.values() if len(chain) > last]
                strict.append(z3.Not(z3.Or(*at_last)) if at_last else z3.BoolVal(True))
        self.solver.add(z3.Or(*strict) if strict else z3.BoolVal(False))

    def table(self, model: z3.ModelRef, name: str) -> ProtocolTable:
        decisions = {}
        for (w, v), var in self.decide.items():
            if z3.is_true(model.eval(var, model_completion=True)):
                decisions[self.catalog.keys[w]] = v
        return ProtocolTable(decisions, name)


def check_guard(dom: EnumerationDomain) -> None:
    if dom.n > config.SEARCH_MAX_N or dom.t > config.SEARCH_MAX_T or dom.value_count > config.SEARCH_MAX_VALUES:
        raise DomainTooLarge(
            f"beat-search is limited to n <= {config.SEARCH_MAX_N}, t <= {config.SEARCH_MAX_T}, "
            f"|V| <= {config.SEARCH_MAX_VALUES}; got {dom.describe()}"
        )


def solves(protocol: DecisionRule, task: TaskSpec, dom: EnumerationDomain) -> bool:
    return all(check_run(task, adv, simulate(protocol, adv, dom.horizon)).passed
               for adv in enumerate_adversaries(dom))


def _relation(mode: SearchMode, a: DecisionRule, b: DecisionRule, dom: EnumerationDomain,
              workers: Optional[int]) -> DominationReport:
    if mode == SearchMode.PER_PROCESS:
        return compare(a, b, dom, workers)
    return compare_last_decider(a, b, dom, workers)


def implemented_protocols(dom: EnumerationDomain) -> List[ProtocolSpec]:
    found = []
    for pid in ProtocolId:
        try:
            found.append(ProtocolSpec(pid, dom.n, dom.t, dom.value_count, 1 if pid in NEEDS_K else None))
        except InvalidProtocolSpec:
            continue
    return found


def beat_search(target: DecisionRule, task: TaskSpec, dom: EnumerationDomain,
                mode: SearchMode = SearchMode.PER_PROCESS, budget: Optional[int] = None,
                workers: Optional[int] = 1, audit: bool = True) -> SearchResult:
    """Witness table strictly dominating `target` on `task`, or a certificate that none exists"""
    check_guard(dom)
    mode = SearchMode(mode)
    budget = config.SEARCH_DEFAULT_BUDGET if budget is None else budget
    name = getattr(target, "name", "target")
    started = time.perf_counter()

    catalog = build_catalog(target, dom)
    encoding = TableEncoding(catalog, task, mode, dom.value_count)
    encoding.add_task()
    if mode == SearchMode.PER_PROCESS:
        encoding.add_per_process_domination()
    else:
        encoding.add_last_decider_domination()
    encoding.solver.set("rlimit", min(int(budget), RLIMIT_MAX))
    log_activity(f"beat-search {name} ({mode.value}): {len(catalog.keys)} view classes, "
                 f"{len(encoding.decide)} decision variables, {len(catalog.runs)} adversaries")

    verdict = encoding.solver.check()
    if verdict == z3.unknown:
        raise SearchBudgetExceeded(
            f"solver gave up ({encoding.solver.reason_unknown()}) within resource limit {budget}"
        )

    certificate = {
        "view_classes": len(catalog.keys),
        "decision_variables": len(encoding.decide),
        "adversaries": len(catalog.runs),
        "exhaustive": verdict == z3.unsat,
    }
    table: Optional[ProtocolTable] = None
    report: Dict[str, object] = {}
    if verdict == z3.sat:
        table = encoding.table(encoding.solver.model(), f"beats-{name}")
        if audit:
            report = audit_witness(table, target, task, dom, mode, workers)
    elif audit:
        report = audit_certificate(target, task, dom, mode, workers)

    elapsed = time.perf_counter() - started
    log_activity(f"beat-search {name}: {'witness found' if table else 'no dominating table'} in {elapsed:.2f}s")
    return SearchResult(name, task.describe(), mode, dom.describe(), table, certificate, report, elapsed)


def audit_witness(table: ProtocolTable, target: DecisionRule, task: TaskSpec, dom: EnumerationDomain,
                  mode: SearchMode, workers: Optional[int]) -> dict:
    if not solves(table, task, dom):
        raise SearchAuditError("witness table does not solve the task under simulation")
    relation = _relation(mode, table, target, dom, workers)
    safe_stats_update({"tables_audited": 1})
    if relation.relation != Relation.STRICTLY_DOMINATES:
        raise SearchAuditError(f"witness table {relation.relation.value} the target instead of strictly dominating")
    return {"witness_solves_task": True, "relation": relation.relation.value, "entries": len(table)}


def audit_certificate(target: DecisionRule, task: TaskSpec, dom: EnumerationDomain,
                      mode: SearchMode, workers: Optional[int]) -> dict:
    """No implemented protocol solving the task may strictly dominate the target"""
    checked = []
    for spec in implemented_protocols(dom):
        if not solves(spec, task, dom):
            continue
        relation = _relation(mode, spec, target, dom, workers)
        safe_stats_update({"tables_audited": 1})
        if relation.relation == Relation.STRICTLY_DOMINATES:
            raise SearchAuditError(f"{spec.name} strictly dominates the target despite an unsat certificate")
        checked.append({"protocol": spec.name, "relation": relation.relation.value})
    return {"protocols_checked": checked}
