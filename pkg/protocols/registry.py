"""
Protocol registry - identifiers, parameters and CLI names of the implemented protocols.

Usage:
    from protocols.registry import ProtocolSpec

    spec = ProtocolSpec.parse("opt-min-k", n=4, t=2, value_count=3, k=2)
    schedule = simulate(spec, adversary)
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from core.errors import InvalidProtocolSpec
from core.model import LocalState, Value
from protocols.rules import RULES, DecisionRuleInput

logger = logging.getLogger(__name__)


class ProtocolId(str, Enum):
    P0 = "p0"
    OPT0 = "opt0"
    OPT1 = "opt1"
    OPT_MIN = "opt-min"
    OPT_MAJ = "opt-maj"
    OPT_MIN_K = "opt-min-k"
    U_P0 = "u-p0"
    U_OPT0 = "u-opt0"
    U_PROT_MIN_K = "u-prot-min-k"
    P0OPT_HMW = "p0opt-hmw"


BINARY_ONLY = {
    ProtocolId.P0, ProtocolId.OPT0, ProtocolId.OPT1, ProtocolId.OPT_MAJ,
    ProtocolId.U_P0, ProtocolId.U_OPT0, ProtocolId.P0OPT_HMW,
}
NEEDS_K = {ProtocolId.OPT_MIN_K, ProtocolId.U_PROT_MIN_K}


@dataclass(frozen=True)
class ProtocolSpec:
    """A decision rule plus the parameters it reads; callable as a full-information protocol"""
    id: ProtocolId
    n: int
    t: int
    value_count: int = 2
    k: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.id, ProtocolId):
            object.__setattr__(self, "id", ProtocolId(self.id))
        if self.n < 2 or not 0 <= self.t <= self.n - 1:
            raise InvalidProtocolSpec(f"need n >= 2 and 0 <= t <= n-1, got n={self.n}, t={self.t}")
        if self.value_count < 2:
            raise InvalidProtocolSpec(f"value set needs at least two values, got {self.value_count}")
        if self.id in BINARY_ONLY and self.value_count != 2:
            raise InvalidProtocolSpec(f"{self.id.value} requires a binary value set")
        if self.id in NEEDS_K:
            if self.k is None or self.k < 1:
                raise InvalidProtocolSpec(f"{self.id.value} requires k >= 1")
            if self.k > self.value_count - 1:
                raise InvalidProtocolSpec(f"{self.id.value} requires k <= d={self.value_count - 1}")
        elif self.k is not None and self.k != 1:
            raise InvalidProtocolSpec(f"{self.id.value} takes no k parameter")

    @classmethod
    def parse(cls, name: str, n: int, t: int, value_count: int = 2, k: Optional[int] = None) -> "ProtocolSpec":
        try:
            protocol_id = ProtocolId(name.strip().lower())
        except ValueError:
            known = ", ".join(p.value for p in ProtocolId)
            raise InvalidProtocolSpec(f"unknown protocol '{name}' (known: {known})") from None
        if protocol_id not in NEEDS_K:
            k = None
        return cls(protocol_id, n, t, value_count, k)

    @property
    def name(self) -> str:
        return self.id.value if self.k is None else f"{self.id.value}[k={self.k}]"

    def decide(self, view_now: LocalState, view_prev: Optional[LocalState]) -> Optional[Value]:
        return RULES[self.id.name](DecisionRuleInput(view_now, view_prev, self))

    def describe(self) -> dict:
        return {"id": self.id.value, "n": self.n, "t": self.t, "values": self.value_count, "k": self.k}
