"""
Model - adversaries, crash semantics, communication graphs and views.

Features:
- Crash / FailurePattern / Adversary value objects and their validation
- Node existence and the seen relation (message chains through delivered edges)
- Views of the communication graph, kept as node bitmasks over the run's edge table
- simulate(): evaluates a full-information decision rule at every active, undecided node
- Reference adversaries used across the test-suite and the CLI
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Protocol, Sequence, Tuple

import networkx as nx

from core.errors import (
    DuplicateCrash,
    HorizonTooShort,
    InactiveProcess,
    InvalidProcess,
    NonexistentNode,
    SelfDelivery,
    TooManyCrashes,
    ValueOutOfRange,
)

logger = logging.getLogger(__name__)

Value = int
ProcessId = int


def iter_processes(mask: int) -> Iterator[ProcessId]:
    """Process ids (1-indexed) of the set bits of a process mask, ascending"""
    while mask:
        low = mask & -mask
        yield low.bit_length()
        mask ^= low


# ==================== VALUE OBJECTS ====================

@dataclass(frozen=True, order=True)
class Node:
    process: ProcessId
    time: int

    def __str__(self) -> str:
        return f"<{self.process},{self.time}>"


@dataclass(frozen=True)
class Crash:
    """Correct in rounds < round, round-`round` messages reach exactly delivers_to, silent afterwards"""
    process: ProcessId
    round: int
    delivers_to: FrozenSet[ProcessId] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "delivers_to", frozenset(self.delivers_to))


@dataclass(frozen=True)
class FailurePattern:
    crashes: Tuple[Crash, ...] = ()
    t: int = 0

    def __post_init__(self):
        ordered = tuple(sorted(self.crashes, key=lambda c: (c.process, c.round, sorted(c.delivers_to))))
        object.__setattr__(self, "crashes", ordered)

    @cached_property
    def by_process(self) -> Dict[ProcessId, Crash]:
        return {crash.process: crash for crash in self.crashes}


@dataclass(frozen=True)
class Adversary:
    """Input vector plus failure pattern; the only source of nondeterminism of a run"""
    n: int
    values: Tuple[Value, ...]
    pattern: FailurePattern

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def t(self) -> int:
        return self.pattern.t

    def crash_of(self, i: ProcessId) -> Optional[Crash]:
        return self.pattern.by_process.get(i)

    def crash_round(self, i: ProcessId) -> Optional[int]:
        crash = self.pattern.by_process.get(i)
        return crash.round if crash else None

    def value_of(self, i: ProcessId) -> Value:
        return self.values[i - 1]

    @cached_property
    def faulty(self) -> FrozenSet[ProcessId]:
        return frozenset(self.pattern.by_process)

    @cached_property
    def correct(self) -> FrozenSet[ProcessId]:
        return frozenset(i for i in range(1, self.n + 1) if i not in self.pattern.by_process)

    @property
    def f(self) -> int:
        return len(self.pattern.crashes)

    @property
    def last_crash_round(self) -> int:
        return max((crash.round for crash in self.pattern.crashes), default=0)

    def active_at(self, i: ProcessId, m: int) -> bool:
        crash = self.pattern.by_process.get(i)
        return crash is None or crash.round > m

    def delivered(self, sender: ProcessId, receiver: ProcessId, rnd: int) -> bool:
        """Whether the round-`rnd` edge <sender,rnd-1> -> <receiver,rnd> exists (self-edges model memory)"""
        crash = self.pattern.by_process.get(sender)
        if sender == receiver:
            return crash is None or crash.round > rnd
        if crash is None or crash.round > rnd:
            return True
        return crash.round == rnd and receiver in crash.delivers_to

    def flipped(self) -> "Adversary":
        """Binary mirror: every initial value v replaced by 1 - v"""
        return replace(self, values=tuple(1 - v for v in self.values))

    def with_values(self, values: Sequence[Value]) -> "Adversary":
        return replace(self, values=tuple(values))

    def with_crashes(self, crashes: Iterable[Crash]) -> "Adversary":
        return replace(self, pattern=FailurePattern(tuple(crashes), self.t))

    def describe(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "t": self.t,
            "values": list(self.values),
            "crashes": [
                {"process": c.process, "round": c.round, "delivers_to": sorted(c.delivers_to)}
                for c in self.pattern.crashes
            ],
        }


@dataclass(frozen=True)
class Decision:
    time: int
    value: Value


@dataclass(frozen=True)
class DecisionSchedule:
    """First decision (if any) of every process in one run, with crash metadata"""
    n: int
    horizon: int
    decisions: Tuple[Optional[Decision], ...]
    crash_round: Tuple[Optional[int], ...]

    def decision_of(self, i: ProcessId) -> Optional[Decision]:
        return self.decisions[i - 1]

    def decision_times(self) -> List[int]:
        return [d.time for d in self.decisions if d is not None]

    @property
    def last_decision_time(self) -> Optional[int]:
        return max(self.decision_times(), default=None)

    def describe(self) -> Dict[str, object]:
        return {
            "horizon": self.horizon,
            "processes": [
                {
                    "process": i,
                    "decision_time": d.time if d else None,
                    "decision_value": d.value if d else None,
                    "crash_round": self.crash_round[i - 1],
                }
                for i, d in enumerate(self.decisions, start=1)
            ],
        }


# ==================== VALIDATION ====================

def validate_adversary(adv: Adversary, value_count: Optional[int] = None) -> None:
    """Raise the first violated invariant; value_count = |V| when the value set is known"""
    if adv.n < 2:
        raise InvalidProcess(f"n must be at least 2, got {adv.n}")
    if len(adv.values) != adv.n:
        raise ValueOutOfRange(f"expected {adv.n} initial values, got {len(adv.values)}")
    if not 0 <= adv.t <= adv.n - 1:
        raise TooManyCrashes(f"t={adv.t} must lie in 0..n-1={adv.n - 1}")
    for i, v in enumerate(adv.values, start=1):
        if v < 0 or (value_count is not None and v >= value_count):
            raise ValueOutOfRange(f"value {v} of process {i} outside 0..{(value_count or 1) - 1}")

    processes = set()
    for crash in adv.pattern.crashes:
        if not 1 <= crash.process <= adv.n:
            raise InvalidProcess(f"crash of unknown process {crash.process}")
        if crash.process in processes:
            raise DuplicateCrash(f"process {crash.process} crashes more than once")
        processes.add(crash.process)
        if crash.round < 1:
            raise InvalidProcess(f"crash round {crash.round} of process {crash.process} must be >= 1")
        if crash.process in crash.delivers_to:
            raise SelfDelivery(f"process {crash.process} lists itself in delivers_to")
        for target in crash.delivers_to:
            if not 1 <= target <= adv.n:
                raise InvalidProcess(f"process {crash.process} delivers to unknown process {target}")
    if len(processes) > adv.t:
        raise TooManyCrashes(f"{len(processes)} crashes exceed t={adv.t}")


def active_at(adv: Adversary, i: ProcessId, m: int) -> bool:
    return adv.active_at(i, m)


def node_exists(adv: Adversary, node: Node) -> bool:
    return 1 <= node.process <= adv.n and node.time >= 0 and adv.active_at(node.process, node.time)


# ==================== COMMUNICATION GRAPH ====================

class CommunicationGraph:
    """
    The run's communication graph up to a horizon.

    Node <j,l> is bit l*n + (j-1). `in_masks[bit]` is the process mask of the senders whose
    round-l message reached <j,l> (the node's own process included); `seen[m][i-1]` is the
    node mask of everything <i,m> has seen, or None when i is inactive at m.
    """

    def __init__(self, adv: Adversary, horizon: int):
        self.adv = adv
        self.n = adv.n
        self.horizon = horizon
        n = adv.n

        in_masks = [0] * (n * (horizon + 1))
        row: List[Optional[int]] = [1 << (i - 1) for i in range(1, n + 1)]
        self.seen: List[List[Optional[int]]] = [row]
        for m in range(1, horizon + 1):
            prev, row = row, [None] * n
            for i in range(1, n + 1):
                if not adv.active_at(i, m):
                    continue
                incoming = 0
                mask = 1 << (m * n + i - 1)
                for j in range(1, n + 1):
                    if adv.delivered(j, i, m):
                        incoming |= 1 << (j - 1)
                        mask |= prev[j - 1]
                in_masks[m * n + i - 1] = incoming
                row[i - 1] = mask
            self.seen.append(row)
        self.in_masks: Tuple[int, ...] = tuple(in_masks)

    def seen_mask(self, i: ProcessId, m: int) -> int:
        if m > self.horizon or not 1 <= i <= self.n:
            raise NonexistentNode(f"<{i},{m}> lies outside the graph")
        mask = self.seen[m][i - 1]
        if mask is None:
            raise InactiveProcess(f"process {i} is not active at time {m}")
        return mask

    def view(self, i: ProcessId, m: int, values: Optional[Sequence[Value]] = None) -> "View":
        """Views depend on the failure pattern; values relabel level 0 for another input vector"""
        labels = self.adv.values if values is None else tuple(values)
        return View(self.n, Node(i, m), self.seen_mask(i, m), self.in_masks, labels)


def seen(adv: Adversary, src: Node, dst: Node) -> bool:
    """Whether a message chain leads from src to dst"""
    if src.time > dst.time:
        raise NonexistentNode(f"{src} is later than {dst}")
    for node in (src, dst):
        if not node_exists(adv, node):
            raise NonexistentNode(f"{node} does not exist under this failure pattern")
    graph = CommunicationGraph(adv, dst.time)
    mask = graph.seen_mask(dst.process, dst.time)
    return bool(mask >> (src.time * adv.n + src.process - 1) & 1)


def view(adv: Adversary, i: ProcessId, m: int) -> "View":
    if not adv.active_at(i, m):
        raise InactiveProcess(f"process {i} is not active at time {m}")
    return CommunicationGraph(adv, m).view(i, m)


# ==================== VIEWS ====================

class LocalState(Protocol):
    """What a decision rule may read about the node it runs at"""
    n: int
    owner: Node

    @property
    def initial_values(self) -> Mapping[ProcessId, Value]: ...

    @property
    def crash_evidence(self) -> Mapping[ProcessId, int]: ...

    @property
    def last_seen_levels(self) -> Mapping[ProcessId, int]: ...

    @property
    def silent_senders(self) -> FrozenSet[ProcessId]: ...

    @property
    def peer_value_sets(self) -> Mapping[ProcessId, FrozenSet[Value]]: ...


class View:
    """
    G(i,m): the nodes seen by <i,m>, the delivered edges among them and the initial values
    labelling the seen level-0 nodes. The run-wide edge table and input vector are shared;
    every accessor is restricted to seen nodes, and equality is by fingerprint.
    """

    def __init__(self, n: int, owner: Node, seen_mask: int, in_masks: Tuple[int, ...], values: Tuple[Value, ...]):
        self.n = n
        self.owner = owner
        self.seen_mask = seen_mask
        self._in_masks = in_masks
        self._values = values
        self._full = (1 << n) - 1

    def _bit(self, node: Node) -> int:
        return node.time * self.n + node.process - 1

    def contains(self, node: Node) -> bool:
        if node.time < 0 or node.time > self.owner.time or not 1 <= node.process <= self.n:
            return False
        return bool(self.seen_mask >> self._bit(node) & 1)

    def level_mask(self, level: int) -> int:
        return (self.seen_mask >> (level * self.n)) & self._full

    def in_mask(self, node: Node) -> int:
        """Senders whose message reached a seen node (0 for level 0 or unseen nodes)"""
        if node.time == 0 or not self.contains(node):
            return 0
        return self._in_masks[self._bit(node)]

    @cached_property
    def seen(self) -> FrozenSet[Node]:
        return frozenset(
            Node(j, level)
            for level in range(self.owner.time + 1)
            for j in iter_processes(self.level_mask(level))
        )

    @cached_property
    def edges(self) -> FrozenSet[Tuple[Node, Node]]:
        result = set()
        for level in range(1, self.owner.time + 1):
            for j in iter_processes(self.level_mask(level)):
                target = Node(j, level)
                for sender in iter_processes(self.in_mask(target)):
                    result.add((Node(sender, level - 1), target))
        return frozenset(result)

    @cached_property
    def initial_values(self) -> Dict[ProcessId, Value]:
        return {j: self._values[j - 1] for j in iter_processes(self.level_mask(0))}

    @cached_property
    def fingerprint(self) -> Tuple:
        level_in = tuple(
            self._in_masks[level * self.n + j - 1]
            for level in range(1, self.owner.time + 1)
            for j in iter_processes(self.level_mask(level))
        )
        values = tuple(sorted(self.initial_values.items()))
        return (self.owner.process, self.owner.time, self.seen_mask, level_in, values)

    def fingerprint_key(self) -> str:
        """Canonical text form of the fingerprint, used as ProtocolTable key"""
        i, m, mask, level_in, values = self.fingerprint
        edges = ".".join(format(x, "x") for x in level_in)
        vals = ".".join(f"{j}={v}" for j, v in values)
        return f"{i}@{m}|{mask:x}|{edges}|{vals}"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, View) and self.n == other.n and self.fingerprint == other.fingerprint

    def __hash__(self) -> int:
        return hash((self.n, self.fingerprint))

    def __repr__(self) -> str:
        return f"View({self.owner}, seen={len(self.seen)} nodes)"

    # ---------- derived facts consumed by the knowledge module ----------

    def closure_mask(self, node: Node) -> int:
        """Nodes seen by a node of this view (its own past within the view)"""
        if not self.contains(node):
            raise NonexistentNode(f"{node} is not part of the view of {self.owner}")
        mask = 1 << self._bit(node)
        frontier = 1 << (node.process - 1)
        for level in range(node.time, 0, -1):
            below = 0
            for j in iter_processes(frontier):
                below |= self._in_masks[level * self.n + j - 1]
            frontier = below
            mask |= below << ((level - 1) * self.n)
        return mask

    def values_seen_by(self, node: Node) -> FrozenSet[Value]:
        level0 = self.closure_mask(node) & self._full
        return frozenset(self._values[j - 1] for j in iter_processes(level0))

    @cached_property
    def crash_evidence(self) -> Dict[ProcessId, int]:
        """j -> least time l such that a seen node at level l lacks the edge from <j,l-1>"""
        evidence: Dict[ProcessId, int] = {}
        for level in range(1, self.owner.time + 1):
            for x in iter_processes(self.level_mask(level)):
                missing = self._full & ~self._in_masks[level * self.n + x - 1]
                for j in iter_processes(missing):
                    evidence.setdefault(j, level)
        return evidence

    @cached_property
    def last_seen_levels(self) -> Dict[ProcessId, int]:
        levels: Dict[ProcessId, int] = {}
        for level in range(self.owner.time + 1):
            for j in iter_processes(self.level_mask(level)):
                levels[j] = level
        return levels

    @cached_property
    def silent_senders(self) -> FrozenSet[ProcessId]:
        if self.owner.time == 0:
            return frozenset()
        return frozenset(iter_processes(self._full & ~self.in_mask(self.owner)))

    @cached_property
    def peer_value_sets(self) -> Dict[ProcessId, FrozenSet[Value]]:
        """Vals<j,m-1> for every j whose <j,m-1> is seen (the owner included)"""
        m = self.owner.time
        if m == 0:
            return {}
        return {j: self.values_seen_by(Node(j, m - 1)) for j in iter_processes(self.in_mask(self.owner))}

    def to_digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for node in self.seen:
            graph.add_node(node, value=self.initial_values.get(node.process) if node.time == 0 else None)
        graph.add_edges_from(self.edges)
        return graph


# ==================== SIMULATION ====================

class DecisionRule(Protocol):
    def decide(self, view_now: LocalState, view_prev: Optional[LocalState]) -> Optional[Value]: ...


def simulate(protocol: DecisionRule, adv: Adversary, horizon: Optional[int] = None,
             graph: Optional[CommunicationGraph] = None) -> DecisionSchedule:
    """Run a full-information protocol: first decision of every process over times 0..horizon"""
    horizon = adv.t + 1 if horizon is None else horizon
    if horizon < adv.t + 1:
        raise HorizonTooShort(f"horizon {horizon} is below t+1={adv.t + 1}")
    if graph is None or graph.horizon < horizon:
        graph = CommunicationGraph(adv, horizon)
    decisions: List[Optional[Decision]] = [None] * adv.n
    for i in range(1, adv.n + 1):
        previous = None
        for m in range(horizon + 1):
            if not adv.active_at(i, m):
                break
            current = graph.view(i, m, adv.values)
            value = protocol.decide(current, previous)
            if value is not None:
                decisions[i - 1] = Decision(m, value)
                break
            previous = current
    crash_rounds = tuple(adv.crash_round(i) for i in range(1, adv.n + 1))
    return DecisionSchedule(adv.n, horizon, tuple(decisions), crash_rounds)


# ==================== REFERENCE ADVERSARIES ====================

def make_adversary(n: int, t: int, values: Sequence[Value], crashes: Iterable[Tuple[int, int, Iterable[int]]] = ()) -> Adversary:
    """Shorthand: crashes given as (process, round, delivers_to) triples"""
    pattern = FailurePattern(tuple(Crash(p, r, frozenset(d)) for p, r, d in crashes), t)
    return Adversary(n, tuple(values), pattern)


def figure_adversary(values: Optional[Sequence[Value]] = None) -> Adversary:
    """
    Three disjoint silent chains seen from <1,2>: processes 2,3,4 crash in round 1 reaching
    only 5,6,7; those crash in round 2 reaching only 8,9,10. Hidden capacity of <1,2> is 3.
    """
    crashes = [(2, 1, {5}), (3, 1, {6}), (4, 1, {7}), (5, 2, {8}), (6, 2, {9}), (7, 2, {10})]
    return make_adversary(10, 6, values if values is not None else (1,) * 10, crashes)


def separating_adversary() -> Adversary:
    """
    All ones, n=4, t=2: process 2 crashes in round 1 reaching only 3, process 4 crashes in
    round 2 reaching nobody. <1,2> has seen every level-0 node yet has discovered a new
    failure in each of the first two rounds.
    """
    return make_adversary(4, 2, (1, 1, 1, 1), [(2, 1, {3}), (4, 2, set())])
