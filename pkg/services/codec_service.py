"""
Codec service - compact messaging with exact local-state reconstruction.

Instead of whole views, each process sends per round only what changed since its last message:

- VALUE(j, v)          once per newly learned initial value (its own in round 1)
- FAILED_AT(j, F, w)   crash evidence F for j, and whether it has seen <j,F-1> (w)
- ALIVE                when there is nothing else to report

Crash evidence for a process crashing in round c is always c or c+1. With F = c+1 the flag is
always clear, since <j,c> does not exist; only F = c can come with a set flag. So (F, w)
changes at most twice per subject. A receiver mirrors the reports of
every sender it hears from; together with its own reception record this rebuilds every
quantity the decision rules read, and the same rules run on the rebuilt state.

Wire format (big-endian, fixed width):
    count   bit_length(2n) bits
    kind    2 bits                              VALUE=0, FAILED_AT=1, ALIVE=2
    subject max(1, ceil(log2 n)) bits           process id - 1
    value   max(1, ceil(log2 |V|)) bits         VALUE only
    round   max(1, ceil(log2 (horizon+1))) bits FAILED_AT only, followed by the 1-bit flag
"""
import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import partial
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from config.settings import config
from core.errors import BudgetViolation, HorizonTooShort, ReconstructionMismatch
from core.logging import safe_stats_update
from core.model import (
    Adversary,
    CommunicationGraph,
    Decision,
    DecisionSchedule,
    Node,
    ProcessId,
    Value,
    View,
    simulate,
)
from protocols.registry import ProtocolSpec
from services.domain import EnumerationDomain, pattern_groups, sample_adversaries
from services.sweep import run_sweep
from tools.utils import log_activity

logger = logging.getLogger(__name__)

MAX_VALUE_REPORTS = 1
MAX_FAILED_REPORTS = 2


class ReportKind(IntEnum):
    VALUE = 0
    FAILED_AT = 1
    ALIVE = 2


@dataclass(frozen=True)
class Report:
    kind: ReportKind
    subject: Optional[ProcessId] = None
    payload: Optional[int] = None
    flag: bool = False


# ==================== WIRE FORMAT ====================

@dataclass(frozen=True)
class WireFormat:
    n: int
    horizon: int
    value_count: int = 2

    @property
    def count_bits(self) -> int:
        return (2 * self.n).bit_length()

    @property
    def process_bits(self) -> int:
        return max(1, (self.n - 1).bit_length())

    @property
    def round_bits(self) -> int:
        return max(1, self.horizon.bit_length())

    @property
    def value_bits(self) -> int:
        return max(1, (self.value_count - 1).bit_length())

    def report_bits(self, kind: ReportKind) -> int:
        if kind == ReportKind.VALUE:
            return 2 + self.process_bits + self.value_bits
        if kind == ReportKind.FAILED_AT:
            return 2 + self.process_bits + self.round_bits + 1
        return 2


class BitWriter:
    def __init__(self):
        self.value = 0
        self.length = 0

    def write(self, field_value: int, width: int) -> None:
        if not 0 <= field_value < (1 << width):
            raise ValueError(f"{field_value} does not fit in {width} bits")
        self.value = (self.value << width) | field_value
        self.length += width


class BitReader:
    def __init__(self, value: int, length: int):
        self.value = value
        self.length = length
        self.position = 0

    def read(self, width: int) -> int:
        if self.position + width > self.length:
            raise ValueError("read past the end of the message")
        shift = self.length - self.position - width
        self.position += width
        return (self.value >> shift) & ((1 << width) - 1)


@dataclass(frozen=True)
class EncodedMessage:
    bits: int
    length: int
    reports: Tuple[Report, ...]


def encode_reports(fmt: WireFormat, reports: Sequence[Report]) -> EncodedMessage:
    writer = BitWriter()
    writer.write(len(reports), fmt.count_bits)
    for report in reports:
        writer.write(int(report.kind), 2)
        if report.kind == ReportKind.VALUE:
            writer.write(report.subject - 1, fmt.process_bits)
            writer.write(report.payload, fmt.value_bits)
        elif report.kind == ReportKind.FAILED_AT:
            writer.write(report.subject - 1, fmt.process_bits)
            writer.write(report.payload, fmt.round_bits)
            writer.write(int(report.flag), 1)
    return EncodedMessage(writer.value, writer.length, tuple(reports))


def decode_reports(fmt: WireFormat, bits: int, length: int) -> List[Report]:
    reader = BitReader(bits, length)
    reports = []
    for _ in range(reader.read(fmt.count_bits)):
        kind = ReportKind(reader.read(2))
        if kind == ReportKind.VALUE:
            subject = reader.read(fmt.process_bits) + 1
            reports.append(Report(kind, subject, reader.read(fmt.value_bits)))
        elif kind == ReportKind.FAILED_AT:
            subject = reader.read(fmt.process_bits) + 1
            failed_at = reader.read(fmt.round_bits)
            reports.append(Report(kind, subject, failed_at, bool(reader.read(1))))
        else:
            reports.append(Report(kind))
    return reports


def pair_bit_bound(n: int, horizon: int, value_count: int = 2, t: Optional[int] = None) -> int:
    """Worst case bits one process can send another over a run of `horizon` rounds"""
    fmt = WireFormat(n, horizon, value_count)
    crashes = n - 1 if t is None else t
    return (horizon * (fmt.count_bits + fmt.report_bits(ReportKind.ALIVE))
            + n * fmt.report_bits(ReportKind.VALUE)
            + MAX_FAILED_REPORTS * crashes * fmt.report_bits(ReportKind.FAILED_AT))


def declared_bound(n: int, constant: Optional[int] = None) -> float:
    """C * n * log2(n)"""
    return (config.CODEC_BIT_CONSTANT if constant is None else constant) * n * math.log2(n)


# ==================== RECONSTRUCTED STATE ====================

@dataclass(frozen=True)
class CompactView:
    """LocalState rebuilt from reports; consumed by the same decision rules as a View"""
    n: int
    owner: Node
    initial_values: Dict[ProcessId, Value]
    crash_evidence: Dict[ProcessId, int]
    last_seen_levels: Dict[ProcessId, int]
    silent_senders: FrozenSet[ProcessId]
    peer_value_sets: Dict[ProcessId, FrozenSet[Value]]


class CompactState:
    """One process: what it knows, what it has reported, and its mirror of every sender"""

    def __init__(self, n: int, process: ProcessId, value: Value):
        self.n = n
        self.process = process
        self.time = 0
        self.values: Dict[ProcessId, Value] = {process: value}
        self.failed_at: Dict[ProcessId, int] = {}
        self.last_seen: Dict[ProcessId, int] = {process: 0}
        self.silent: FrozenSet[ProcessId] = frozenset()
        self.peer_values: Dict[ProcessId, FrozenSet[Value]] = {}

        self.mirror_values: Dict[ProcessId, Set[Value]] = {}
        self.mirror_failed: Dict[ProcessId, Dict[ProcessId, Tuple[int, bool]]] = {}

        self.reported_values: Set[ProcessId] = set()
        self.reported_failed: Dict[ProcessId, Tuple[int, bool]] = {}
        self.value_reports: Dict[ProcessId, int] = {}
        self.failed_reports: Dict[ProcessId, int] = {}
        self.bits_sent: Dict[ProcessId, int] = {}

    def witnessed(self, j: ProcessId) -> bool:
        return self.last_seen.get(j, -1) == self.failed_at[j] - 1

    def pending_reports(self) -> List[Report]:
        reports = [Report(ReportKind.VALUE, j, self.values[j]) for j in sorted(self.values) if j not in self.reported_values]
        for j in sorted(self.failed_at):
            current = (self.failed_at[j], self.witnessed(j))
            if self.reported_failed.get(j) != current:
                reports.append(Report(ReportKind.FAILED_AT, j, current[0], current[1]))
        return reports or [Report(ReportKind.ALIVE)]

    def record_delivery(self, receiver: ProcessId, length: int) -> None:
        self.bits_sent[receiver] = self.bits_sent.get(receiver, 0) + length

    def mark_sent(self, reports: Sequence[Report]) -> None:
        for report in reports:
            if report.kind == ReportKind.VALUE:
                self.value_reports[report.subject] = self.value_reports.get(report.subject, 0) + 1
                if self.value_reports[report.subject] > MAX_VALUE_REPORTS:
                    raise BudgetViolation(f"process {self.process} reports the value of {report.subject} twice")
                self.reported_values.add(report.subject)
            elif report.kind == ReportKind.FAILED_AT:
                self.failed_reports[report.subject] = self.failed_reports.get(report.subject, 0) + 1
                if self.failed_reports[report.subject] > MAX_FAILED_REPORTS:
                    raise BudgetViolation(
                        f"process {self.process} reports a crash of {report.subject} a third time")
                self.reported_failed[report.subject] = (report.payload, report.flag)

    def _mirror_level(self, sender: ProcessId, j: ProcessId, rnd: int) -> int:
        """Latest level of j the sender had seen when it sent its round-rnd message"""
        failed = self.mirror_failed[sender].get(j)
        if failed is not None:
            failed_at, witnessed = failed
            return failed_at - 1 if witnessed else failed_at - 2
        return rnd - 1 if j == sender else rnd - 2

    def receive(self, rnd: int, messages: Dict[ProcessId, List[Report]]) -> None:
        """Advance from time rnd-1 to rnd given the round-rnd messages that arrived"""
        previous_values = frozenset(self.values.values())
        for sender, reports in messages.items():
            values = self.mirror_values.setdefault(sender, set())
            failed = self.mirror_failed.setdefault(sender, {})
            for report in reports:
                if report.kind == ReportKind.VALUE:
                    values.add(report.payload)
                    self.values.setdefault(report.subject, report.payload)
                elif report.kind == ReportKind.FAILED_AT:
                    failed[report.subject] = (report.payload, report.flag)

        self.silent = frozenset(j for j in range(1, self.n + 1) if j != self.process and j not in messages)
        for sender in messages:
            for j, (failed_at, _) in self.mirror_failed[sender].items():
                self.failed_at[j] = min(failed_at, self.failed_at.get(j, failed_at))
        for j in self.silent:
            self.failed_at[j] = min(rnd, self.failed_at.get(j, rnd))

        for sender in messages:
            for j in range(1, self.n + 1):
                level = self._mirror_level(sender, j, rnd)
                if level > self.last_seen.get(j, -1):
                    self.last_seen[j] = level
        self.last_seen[self.process] = rnd

        self.peer_values = {sender: frozenset(self.mirror_values[sender]) for sender in messages}
        self.peer_values[self.process] = previous_values
        self.time = rnd

    def view(self) -> CompactView:
        return CompactView(
            self.n,
            Node(self.process, self.time),
            dict(self.values),
            dict(self.failed_at),
            {j: level for j, level in self.last_seen.items() if level >= 0},
            self.silent,
            dict(self.peer_values),
        )


def encode_round(state: CompactState, sender: ProcessId, rnd: int, fmt: WireFormat) -> EncodedMessage:
    """The sender's round-rnd message, built from its state at time rnd-1"""
    if state.process != sender or state.time != rnd - 1:
        raise ValueError(f"state of <{state.process},{state.time}> cannot send round {rnd} for {sender}")
    reports = state.pending_reports()
    state.mark_sent(reports)
    return encode_reports(fmt, reports)


def compare_views(compact: CompactView, full: View) -> None:
    checks = {
        "initial_values": (compact.initial_values, full.initial_values),
        "crash_evidence": (compact.crash_evidence, full.crash_evidence),
        "last_seen_levels": (compact.last_seen_levels, full.last_seen_levels),
        "silent_senders": (compact.silent_senders, full.silent_senders),
        "peer_value_sets": (compact.peer_value_sets, full.peer_value_sets),
    }
    for name, (rebuilt, expected) in checks.items():
        if rebuilt != expected:
            raise ReconstructionMismatch(f"{name} of {full.owner}: rebuilt {rebuilt}, expected {expected}")


# ==================== COMPACT RUNS ====================

@dataclass
class CompactRun:
    schedule: Optional[DecisionSchedule]
    bits_sent: Dict[Tuple[ProcessId, ProcessId], int]
    value_reports: int
    failed_reports: int

    @property
    def max_pair_bits(self) -> int:
        return max(self.bits_sent.values(), default=0)


def run_compact(spec: Optional[ProtocolSpec], adv: Adversary, horizon: Optional[int] = None,
                strict: Optional[bool] = None, value_count: Optional[int] = None) -> CompactRun:
    """
    Round machinery over encoded reports. With spec=None only the messaging runs (bit
    measurements). strict compares every rebuilt state with the full view.
    """
    horizon = adv.t + 1 if horizon is None else horizon
    if horizon < adv.t + 1:
        raise HorizonTooShort(f"horizon {horizon} is below t+1={adv.t + 1}")
    strict = config.CODEC_STRICT if strict is None else strict
    if value_count is None:
        value_count = spec.value_count if spec is not None else max(2, max(adv.values) + 1)
    fmt = WireFormat(adv.n, horizon, value_count)
    graph = CommunicationGraph(adv, horizon) if strict else None

    states = {p: CompactState(adv.n, p, adv.value_of(p)) for p in range(1, adv.n + 1)}
    decisions: List[Optional[Decision]] = [None] * adv.n
    previous: Dict[ProcessId, CompactView] = {}

    for m in range(horizon + 1):
        if m > 0:
            outgoing = {q: encode_round(states[q], q, m, fmt) for q in states if adv.active_at(q, m - 1)}
            for p in range(1, adv.n + 1):
                if not adv.active_at(p, m):
                    continue
                received = {}
                for q, message in outgoing.items():
                    if q != p and adv.delivered(q, p, m):
                        received[q] = decode_reports(fmt, message.bits, message.length)
                        states[q].record_delivery(p, message.length)
                states[p].receive(m, received)
        if spec is None:
            continue
        for p in range(1, adv.n + 1):
            if not adv.active_at(p, m) or decisions[p - 1] is not None:
                continue
            current = states[p].view()
            if graph is not None:
                compare_views(current, graph.view(p, m))
            value = spec.decide(current, previous.get(p))
            if value is not None:
                decisions[p - 1] = Decision(m, value)
            previous[p] = current

    schedule = None
    if spec is not None:
        crash_rounds = tuple(adv.crash_round(i) for i in range(1, adv.n + 1))
        schedule = DecisionSchedule(adv.n, horizon, tuple(decisions), crash_rounds)
    return CompactRun(
        schedule,
        {(q, p): bits for q, state in states.items() for p, bits in state.bits_sent.items()},
        sum(sum(s.value_reports.values()) for s in states.values()),
        sum(sum(s.failed_reports.values()) for s in states.values()),
    )


def decode_and_decide(spec: ProtocolSpec, adv: Adversary, horizon: Optional[int] = None,
                      strict: Optional[bool] = None) -> DecisionSchedule:
    return run_compact(spec, adv, horizon, strict).schedule


# ==================== SWEEPS ====================

@dataclass
class CodecSummary:
    runs: int = 0
    mismatches: int = 0
    examples: List[dict] = field(default_factory=list)
    max_pair_bits: int = 0

    @property
    def passed(self) -> bool:
        return self.mismatches == 0

    def merge(self, other: "CodecSummary") -> "CodecSummary":
        self.runs += other.runs
        self.mismatches += other.mismatches
        self.examples.extend(other.examples[: max(0, config.WITNESS_LIMIT - len(self.examples))])
        self.max_pair_bits = max(self.max_pair_bits, other.max_pair_bits)
        return self


def codec_chunk(specs: Sequence[ProtocolSpec], strict: bool, dom: EnumerationDomain, start: int, stop: int) -> CodecSummary:
    summary = CodecSummary()
    for group in pattern_groups(dom, start, stop):
        graph = CommunicationGraph(group[0], dom.horizon)
        for adv in group:
            for spec in specs:
                summary.runs += 1
                expected = simulate(spec, adv, dom.horizon, graph=graph)
                try:
                    run = run_compact(spec, adv, dom.horizon, strict)
                except ReconstructionMismatch as exc:
                    run, detail = None, str(exc)
                else:
                    detail = None if run.schedule == expected else "schedules differ"
                if run is not None:
                    summary.max_pair_bits = max(summary.max_pair_bits, run.max_pair_bits)
                if detail is not None:
                    summary.mismatches += 1
                    if len(summary.examples) < config.WITNESS_LIMIT:
                        summary.examples.append({
                            "protocol": spec.name,
                            "adversary": adv.describe(),
                            "detail": detail,
                            "expected": expected.describe(),
                            "compact": run.schedule.describe() if run is not None else None,
                        })
    return summary


def codec_check(specs: Sequence[ProtocolSpec], dom: EnumerationDomain, workers: Optional[int] = None,
                strict: Optional[bool] = None) -> CodecSummary:
    """Compact schedules against full-information schedules on every adversary of the domain"""
    strict = config.CODEC_STRICT if strict is None else strict
    summary = CodecSummary()
    for part in run_sweep(dom, partial(codec_chunk, tuple(specs), strict), workers, label="codec check"):
        summary.merge(part)
    safe_stats_update({"runs_simulated": summary.runs, "codec_mismatches": summary.mismatches})
    log_activity(f"codec check {dom.describe()}: {summary.runs} runs, {summary.mismatches} mismatches, "
                 f"max {summary.max_pair_bits} bits per pair")
    return summary


@dataclass
class BitSummary:
    n: int
    t: int
    horizon: int
    samples: int
    max_pair_bits: int
    declared_bound: float
    analytic_bound: int

    @property
    def passed(self) -> bool:
        return self.max_pair_bits <= min(self.declared_bound, self.analytic_bound)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "t": self.t, "horizon": self.horizon, "samples": self.samples,
            "max_pair_bits": self.max_pair_bits, "declared_bound": self.declared_bound,
            "analytic_bound": self.analytic_bound, "passed": self.passed,
        }


def measure_bits(n: int, samples: int, seed: int = 0, value_count: int = 2) -> BitSummary:
    """Per-pair bits over random adversaries with t = floor((n-1)/2) and horizon t+1"""
    t = (n - 1) // 2
    horizon = t + 1
    worst = 0
    for adv in sample_adversaries(n, t, value_count, horizon, samples, seed):
        worst = max(worst, run_compact(None, adv, horizon, strict=False, value_count=value_count).max_pair_bits)
    return BitSummary(n, t, horizon, samples, worst, declared_bound(n), pair_bit_bound(n, horizon, value_count, t))
