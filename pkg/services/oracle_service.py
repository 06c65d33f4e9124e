"""
Oracle service - brute-force knowledge over an enumeration domain.

A fact is known at a view when it holds in every adversary of the domain that produces the
same view. Views do not depend on the protocol, so indistinguishability is a relation on
adversaries alone. The agreement sweep groups every reachable view of a domain into its
indistinguishability class once, then checks each combinatorial predicate of core.knowledge
against the class-wide conjunction of the matching fact.

Also builds hidden-value variants: adversaries that keep a view intact while planting chosen
values on the witness chains of its hidden capacity.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from config.settings import config
from core.errors import CapacityTooSmall, CrashBudgetExceeded, HiddenVariantError, TooManyCrashes
from core.knowledge import hidden_path_exists, hidden_profile, known_values, knows_exists_correct, knows_majority
from core.logging import safe_stats_update
from core.model import (
    Adversary,
    CommunicationGraph,
    Crash,
    ProcessId,
    Value,
    View,
    iter_processes,
    validate_adversary,
    view as view_of,
)
from services.domain import EnumerationDomain, enumerate_adversaries, pattern_groups
from services.sweep import run_sweep
from tools.utils import log_activity

logger = logging.getLogger(__name__)


class FactKind(str, Enum):
    EXISTS = "exists"
    EXISTS_CORRECT = "exists-correct"
    NEVER_KNOWN = "never-known"
    MAJ = "maj"
    EVENTUALLY_CORRECT = "eventually-correct"


@dataclass(frozen=True, order=True)
class FactId:
    kind: FactKind
    value: Value

    def __str__(self) -> str:
        return f"{self.kind.value}({self.value})"


def domain_facts(value_count: int) -> List[FactId]:
    """Every fact the oracle tracks for a value set of the given size"""
    kinds = [FactKind.EXISTS, FactKind.EXISTS_CORRECT, FactKind.NEVER_KNOWN, FactKind.EVENTUALLY_CORRECT]
    if value_count == 2:
        kinds.append(FactKind.MAJ)
    return [FactId(kind, v) for kind in kinds for v in range(value_count)]


# ==================== FACT EVALUATION ====================

def _values_known(graph: CommunicationGraph, values: Sequence[Value], i: ProcessId, time: int) -> set:
    level0 = graph.seen_mask(i, time) & ((1 << graph.n) - 1)
    return {values[j - 1] for j in iter_processes(level0)}


def _some_correct_knows(adv: Adversary, graph: CommunicationGraph, v: Value, time: int) -> bool:
    return any(v in _values_known(graph, adv.values, i, time) for i in sorted(adv.correct))


def fact_horizon(adv: Adversary, m: int) -> int:
    """Latest time eval_fact needs to look at"""
    return max(m, adv.last_crash_round + 1)


def eval_fact(adv: Adversary, m: int, fact: FactId, graph: Optional[CommunicationGraph] = None) -> bool:
    v = fact.value
    if fact.kind == FactKind.EXISTS:
        return v in adv.values
    if fact.kind == FactKind.MAJ:
        count = sum(1 for value in adv.values if value == v)
        return 2 * count > adv.n if v == 0 else 2 * count >= adv.n
    if graph is None or graph.horizon < fact_horizon(adv, m):
        graph = CommunicationGraph(adv, fact_horizon(adv, m))
    if fact.kind == FactKind.EXISTS_CORRECT:
        return _some_correct_knows(adv, graph, v, m)
    settled = adv.last_crash_round + 1
    if fact.kind == FactKind.NEVER_KNOWN:
        return not _some_correct_knows(adv, graph, v, settled)
    return _some_correct_knows(adv, graph, v, max(m, settled))


def indistinguishable(dom: EnumerationDomain, target: View) -> List[Adversary]:
    """Every adversary of the domain under which the owner of `target` has exactly that view"""
    i, m = target.owner.process, target.owner.time
    matches = []
    for group in pattern_groups(dom):
        if not group[0].active_at(i, m):
            continue
        graph = CommunicationGraph(group[0], m)
        for adv in group:
            if graph.view(i, m, adv.values) == target:
                matches.append(adv)
    return matches


def knows(dom: EnumerationDomain, target: View, fact: FactId) -> bool:
    return all(eval_fact(adv, target.owner.time, fact) for adv in indistinguishable(dom, target))


# ==================== EPISTEMIC INDEX ====================

@dataclass
class ViewClass:
    """One indistinguishability class: a representative run plus the facts true in all members"""
    adversary: Adversary
    process: ProcessId
    time: int
    facts_mask: int
    members: int = 1


def index_chunk(dom: EnumerationDomain, start: int, stop: int) -> Dict[Tuple, ViewClass]:
    facts = domain_facts(dom.value_count)
    classes: Dict[Tuple, ViewClass] = {}
    for group in pattern_groups(dom, start, stop):
        pattern_adv = group[0]
        graph = CommunicationGraph(pattern_adv, dom.horizon + 2)
        for adv in group:
            for m in range(dom.horizon + 1):
                mask = 0
                for bit, fact in enumerate(facts):
                    if eval_fact(adv, m, fact, graph):
                        mask |= 1 << bit
                for i in range(1, dom.n + 1):
                    if not adv.active_at(i, m):
                        continue
                    key = graph.view(i, m, adv.values).fingerprint
                    known = classes.get(key)
                    if known is None:
                        classes[key] = ViewClass(adv, i, m, mask)
                    else:
                        known.facts_mask &= mask
                        known.members += 1
    return classes


class EpistemicIndex:
    """Every reachable view of a domain, grouped by fingerprint"""

    def __init__(self, dom: EnumerationDomain, workers: Optional[int] = None):
        self.dom = dom
        self.facts = domain_facts(dom.value_count)
        self.classes: Dict[Tuple, ViewClass] = {}
        for part in run_sweep(dom, index_chunk, workers, label="epistemic index"):
            for key, cls in part.items():
                known = self.classes.get(key)
                if known is None:
                    self.classes[key] = cls
                else:
                    known.facts_mask &= cls.facts_mask
                    known.members += cls.members
        log_activity(f"epistemic index: {len(self.classes)} view classes")

    def __len__(self) -> int:
        return len(self.classes)

    def known(self, cls: ViewClass, fact: FactId) -> bool:
        return bool(cls.facts_mask >> self.facts.index(fact) & 1)

    def views(self, cls: ViewClass) -> Tuple[View, Optional[View]]:
        graph = CommunicationGraph(cls.adversary, cls.time)
        now = graph.view(cls.process, cls.time)
        prev = graph.view(cls.process, cls.time - 1) if cls.time > 0 else None
        return now, prev


# ==================== AGREEMENT SWEEP ====================

@dataclass
class PredicateRow:
    predicate: str
    fact: str
    checked: int = 0
    disagreements: int = 0
    examples: List[dict] = field(default_factory=list)
    informational: bool = False

    def record(self, combinatorial: bool, semantic: bool, cls: ViewClass) -> None:
        self.checked += 1
        if combinatorial != semantic:
            self.disagreements += 1
            if len(self.examples) < config.WITNESS_LIMIT:
                self.examples.append({
                    "adversary": cls.adversary.describe(),
                    "process": cls.process,
                    "time": cls.time,
                    "combinatorial": combinatorial,
                    "semantic": semantic,
                })

    def to_dict(self) -> dict:
        return {
            "predicate": self.predicate,
            "fact": self.fact,
            "checked": self.checked,
            "disagreements": self.disagreements,
            "passed": self.disagreements == 0,
            "informational": self.informational,
            "examples": self.examples,
        }


@dataclass
class OracleReport:
    domain: dict
    view_classes: int
    rows: List[PredicateRow]

    @property
    def passed(self) -> bool:
        return all(row.disagreements == 0 for row in self.rows if not row.informational)

    def row(self, predicate: str, fact: str) -> PredicateRow:
        return next(r for r in self.rows if r.predicate == predicate and r.fact == fact)

    def exists_correct_variant(self) -> Dict[str, bool]:
        """Which reading of ∃correct the K∃correct test agrees with on this domain"""
        at_time = [r for r in self.rows if r.fact.startswith(FactKind.EXISTS_CORRECT.value)]
        eventually = [r for r in self.rows if r.fact.startswith(FactKind.EVENTUALLY_CORRECT.value)]
        return {
            "at_time": all(r.disagreements == 0 for r in at_time),
            "eventually": all(r.disagreements == 0 for r in eventually),
        }

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "view_classes": self.view_classes,
            "passed": self.passed,
            "exists_correct_variant": self.exists_correct_variant(),
            "rows": [row.to_dict() for row in self.rows],
        }


def oracle_check(dom: EnumerationDomain, workers: Optional[int] = None) -> OracleReport:
    index = EpistemicIndex(dom, workers)
    values = range(dom.value_count)
    binary = dom.value_count == 2
    rows: Dict[Tuple[str, FactId], PredicateRow] = {}

    def row(name: str, fact: FactId, informational: bool = False) -> PredicateRow:
        key = (name, fact)
        if key not in rows:
            rows[key] = PredicateRow(name, str(fact), informational=informational)
        return rows[key]

    for cls in index.classes.values():
        now, prev = index.views(cls)
        vals = known_values(now).vals
        no_hidden_path = not hidden_path_exists(now)
        for v in values:
            row("K∃v", FactId(FactKind.EXISTS, v)).record(
                v in vals, index.known(cls, FactId(FactKind.EXISTS, v)), cls)
            exists_correct = knows_exists_correct(now, prev, v, dom.t)
            row("K∃correct(v)", FactId(FactKind.EXISTS_CORRECT, v)).record(
                exists_correct, index.known(cls, FactId(FactKind.EXISTS_CORRECT, v)), cls)
            row("K∃correct(v)", FactId(FactKind.EVENTUALLY_CORRECT, v), informational=True).record(
                exists_correct, index.known(cls, FactId(FactKind.EVENTUALLY_CORRECT, v)), cls)
            row("¬K∃v ∧ no hidden path", FactId(FactKind.NEVER_KNOWN, v)).record(
                v not in vals and no_hidden_path, index.known(cls, FactId(FactKind.NEVER_KNOWN, v)), cls)
            if binary:
                row("K(Maj=v)", FactId(FactKind.MAJ, v)).record(
                    knows_majority(now, v, dom.n), index.known(cls, FactId(FactKind.MAJ, v)), cls)

    report = OracleReport(dom.describe(), len(index), [rows[key] for key in sorted(rows, key=lambda k: (k[0], k[1]))])
    disagreements = sum(r.disagreements for r in report.rows if not r.informational)
    safe_stats_update({"views_checked": len(index), "oracle_disagreements": disagreements})
    log_activity(f"oracle check {dom.describe()}: {len(index)} view classes, {disagreements} disagreements")
    return report


# ==================== HIDDEN-VALUE VARIANTS ====================

def witness_chains(target: View, count: int) -> List[List[ProcessId]]:
    """chains[level][b]: the lowest-numbered `count` hidden processes of every level"""
    profile = hidden_profile(target)
    return [sorted(level)[:count] for level in profile.hidden_by_level]


def hidden_variant(adv: Adversary, i: ProcessId, m: int, values: Sequence[Value]) -> Adversary:
    """
    An adversary indistinguishable to <i,m> in which witness chain b carries values[b]: the
    level-0 witness starts with it, every lower witness crashes right after its level reaching
    only the next witness of its chain, and each witness hears what i heard at its level.
    """
    values = tuple(values)
    original = view_of(adv, i, m)
    capacity = hidden_profile(original).capacity
    if len(values) > capacity:
        raise CapacityTooSmall(f"<{i},{m}> has hidden capacity {capacity}, {len(values)} values requested")
    if not values:
        return adv

    chains = witness_chains(original, len(values))
    witnesses = {w for level in chains for w in level}

    new_values = list(adv.values)
    for w, v in zip(chains[0], values):
        new_values[w - 1] = v

    crashes: Dict[ProcessId, Crash] = {}
    for crash in adv.pattern.crashes:
        if crash.process in witnesses:
            continue
        delivers = set(crash.delivers_to)
        if crash.round <= m:
            for w in chains[crash.round]:
                if i in crash.delivers_to:
                    delivers.add(w)
                else:
                    delivers.discard(w)
        crashes[crash.process] = Crash(crash.process, crash.round, frozenset(delivers))
    for level in range(m):
        for w, successor in zip(chains[level], chains[level + 1]):
            crashes[w] = Crash(w, level + 1, frozenset({successor}))
    for w in chains[m]:
        crash = adv.crash_of(w)
        if crash is not None:
            crashes[w] = crash if crash.round > m else Crash(w, m + 1, frozenset())

    variant = adv.with_values(new_values).with_crashes(crashes.values())
    try:
        validate_adversary(variant)
    except TooManyCrashes as exc:
        raise CrashBudgetExceeded(str(exc)) from exc

    graph = CommunicationGraph(variant, m)
    if graph.view(i, m) != original:
        raise HiddenVariantError(f"variant changes the view of <{i},{m}>")
    for level, chain in enumerate(chains):
        for w, v in zip(chain, values):
            if v not in _values_known(graph, variant.values, w, level):
                raise HiddenVariantError(f"witness <{w},{level}> does not know planted value {v}")
    return variant


@dataclass
class VariantSummary:
    checked: int = 0
    failed: int = 0
    failures: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failed == 0


def variant_chunk(dom: EnumerationDomain, start: int, stop: int) -> VariantSummary:
    summary = VariantSummary()
    for adv in enumerate_adversaries(dom, start, stop):
        for m in range(dom.horizon + 1):
            for i in range(1, dom.n + 1):
                if not adv.active_at(i, m):
                    continue
                capacity = hidden_profile(view_of(adv, i, m)).capacity
                if capacity == 0:
                    continue
                planted = tuple((adv.value_of(i) + 1 + b) % dom.value_count for b in range(capacity))
                summary.checked += 1
                try:
                    hidden_variant(adv, i, m, planted)
                except (HiddenVariantError, CrashBudgetExceeded) as exc:
                    summary.failed += 1
                    if len(summary.failures) < config.WITNESS_LIMIT:
                        summary.failures.append({
                            "adversary": adv.describe(), "process": i, "time": m, "error": str(exc),
                        })
    return summary


def hidden_variant_check(dom: EnumerationDomain, workers: Optional[int] = None) -> VariantSummary:
    """Build a variant for every (adversary, process, time) with positive hidden capacity"""
    total = VariantSummary()
    for part in run_sweep(dom, variant_chunk, workers, label="hidden variants"):
        total.checked += part.checked
        total.failed += part.failed
        total.failures.extend(part.failures[: max(0, config.WITNESS_LIMIT - len(total.failures))])
    log_activity(f"hidden variants {dom.describe()}: {total.checked} checked, {total.failed} failing")
    return total
