"""
Table protocols - a full-information protocol given as an explicit decision table.

Full-information protocols differ only in the decisions taken at nodes, so a map from
view fingerprints to values is a complete protocol. Views missing from the table are
undecided.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional

from core.model import CommunicationGraph, LocalState, Value, View, simulate

logger = logging.getLogger(__name__)


@dataclass
class ProtocolTable:
    decision: Dict[str, Value] = field(default_factory=dict)
    name: str = "table"

    def decide(self, view_now: LocalState, view_prev: Optional[LocalState]) -> Optional[Value]:
        if not isinstance(view_now, View):
            raise TypeError("table protocols are defined on full views only")
        return self.decision.get(view_now.fingerprint_key())

    def __len__(self) -> int:
        return len(self.decision)

    @classmethod
    def from_protocol(cls, protocol, adversaries: Iterable, horizon: int, name: Optional[str] = None) -> "ProtocolTable":
        """Tabulate the first-decision views of any protocol over a set of adversaries"""
        table: Dict[str, Value] = {}
        for adv in adversaries:
            schedule = simulate(protocol, adv, horizon)
            decided = [(i, d) for i, d in enumerate(schedule.decisions, start=1) if d is not None]
            if not decided:
                continue
            graph = CommunicationGraph(adv, horizon)
            for i, d in decided:
                table[graph.view(i, d.time).fingerprint_key()] = d.value
        return cls(table, name or getattr(protocol, "name", "table"))

    def to_json(self) -> Dict[str, object]:
        return {"name": self.name, "decisions": dict(sorted(self.decision.items()))}

    @classmethod
    def from_json(cls, payload: Mapping[str, object]) -> "ProtocolTable":
        decisions = payload.get("decisions", {})
        return cls({str(key): int(value) for key, value in dict(decisions).items()}, str(payload.get("name", "table")))
