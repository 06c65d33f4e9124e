"""
Knowledge - the combinatorial epistemic predicates the decision rules consume.

Every function reads a LocalState: a full View or the codec's reconstructed state.
- known values (K_i∃v), their minimum and the low values of a k-set task
- failure knowledge (earliest proven crash, knownf)
- hidden nodes, hidden capacity and hidden paths (literal and observation variants)
- K_i∃correct(v), K_i(Maj=v) and MajVals
"""
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

import networkx as nx

from core.errors import MismatchedViews, NonBinaryTask
from core.model import LocalState, ProcessId, Value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KnownValueSet:
    vals: FrozenSet[Value]
    min: Optional[Value]
    lows: FrozenSet[Value]


@dataclass(frozen=True)
class FailureKnowledge:
    known_crashed_by: Dict[ProcessId, int]
    knownf: int


@dataclass(frozen=True)
class HiddenProfile:
    hidden_by_level: Tuple[FrozenSet[ProcessId], ...]
    capacity: int

    @property
    def hidden_path_exists(self) -> bool:
        return self.capacity >= 1


def known_values(view: LocalState, k: Optional[int] = None) -> KnownValueSet:
    if k is not None and k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    vals = frozenset(view.initial_values.values())
    lows = frozenset(v for v in vals if v < k) if k is not None else frozenset()
    return KnownValueSet(vals, min(vals) if vals else None, lows)


def failure_knowledge(view: LocalState) -> FailureKnowledge:
    return FailureKnowledge(dict(view.crash_evidence), len(view.silent_senders))


def proven_crashed(view: LocalState) -> FrozenSet[ProcessId]:
    return frozenset(view.crash_evidence)


def knownf(view: LocalState) -> int:
    return len(view.silent_senders)


def hidden(view: LocalState, j: ProcessId, level: int) -> bool:
    """<j,level> is unseen and nothing seen proves j inactive at a time <= level"""
    if level > view.owner.time:
        raise ValueError(f"level {level} is later than the view's time {view.owner.time}")
    if j == view.owner.process:
        return False
    if view.last_seen_levels.get(j, -1) >= level:
        return False
    proven_at = view.crash_evidence.get(j)
    return proven_at is None or proven_at > level


def hidden_profile(view: LocalState, include_current_level: bool = True) -> HiddenProfile:
    """
    Hidden processes per level and the hidden capacity. With include_current_level=False only
    levels below the view's time count (the observation variant; all levels at time 0).
    """
    m = view.owner.time
    by_level = tuple(
        frozenset(j for j in range(1, view.n + 1) if hidden(view, j, level))
        for level in range(m + 1)
    )
    counted = by_level if include_current_level or m == 0 else by_level[:m]
    return HiddenProfile(by_level, min(len(level) for level in counted))


def hidden_capacity(view: LocalState) -> int:
    return hidden_profile(view).capacity


def hidden_path_exists(view: LocalState, include_current_level: bool = True) -> bool:
    return hidden_profile(view, include_current_level).capacity >= 1


def _hidden_layers(view: LocalState) -> nx.DiGraph:
    profile = hidden_profile(view)
    graph = nx.DiGraph()
    graph.add_node("source")
    graph.add_node("sink")
    for level, processes in enumerate(profile.hidden_by_level):
        for j in processes:
            graph.add_edge((j, level, "in"), (j, level, "out"), capacity=1)
            if level == 0:
                graph.add_edge("source", (j, level, "in"), capacity=1)
            else:
                for prev in profile.hidden_by_level[level - 1]:
                    graph.add_edge((prev, level - 1, "out"), (j, level, "in"), capacity=1)
            if level == view.owner.time:
                graph.add_edge((j, level, "out"), "sink", capacity=1)
    return graph


def hidden_path_by_search(view: LocalState) -> bool:
    """Independent check: a path of hidden nodes through every level 0..m"""
    return nx.has_path(_hidden_layers(view), "source", "sink")


def hidden_capacity_by_flow(view: LocalState) -> int:
    """Independent check: number of node-disjoint hidden paths through every level"""
    graph = _hidden_layers(view)
    if not nx.has_path(graph, "source", "sink"):
        return 0
    return int(nx.maximum_flow_value(graph, "source", "sink"))


def is_low(view: LocalState, k: int) -> bool:
    return bool(known_values(view, k).lows)


def knows_exists_correct(view_now: LocalState, view_prev: Optional[LocalState], v: Value, t: int) -> bool:
    """
    K_i∃correct(v): v is known and either it was already known one step earlier, or enough
    directly-heard processes knew it one step earlier that not all of them can still crash.
    """
    m = view_now.owner.time
    if (view_prev is None) != (m == 0):
        raise MismatchedViews(f"predecessor view must be supplied exactly when time > 0 (time {m})")
    if view_prev is not None and (
        view_prev.owner.process != view_now.owner.process or view_prev.owner.time != m - 1
    ):
        raise MismatchedViews(f"{view_prev.owner} is not the predecessor of {view_now.owner}")

    if v not in view_now.initial_values.values():
        return False
    if view_prev is not None and v in view_prev.initial_values.values():
        return True
    if m == 0:
        # clause (b) needs witnesses one step back; only t = 0 makes the threshold vacuous
        return t <= 0
    witnesses = sum(1 for vals in view_now.peer_value_sets.values() if v in vals)
    return witnesses >= t - knownf(view_now)


def _require_binary(view: LocalState) -> None:
    if any(value not in (0, 1) for value in view.initial_values.values()):
        raise NonBinaryTask("majority predicates need a binary value set")


def knows_majority(view: LocalState, v: Value, n: int) -> bool:
    if v not in (0, 1):
        raise NonBinaryTask(f"majority is defined for values 0 and 1, got {v}")
    _require_binary(view)
    count = sum(1 for value in view.initial_values.values() if value == v)
    if v == 0:
        return 2 * count > n
    return 2 * count >= n


def maj_vals(view: LocalState) -> Value:
    _require_binary(view)
    values = list(view.initial_values.values())
    zeros = sum(1 for value in values if value == 0)
    return 0 if 2 * zeros > len(values) else 1
