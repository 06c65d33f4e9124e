"""
Decision rules - one function per protocol box, guarded commands in printed order.

Each rule maps (view now, predecessor view, spec) to a value or None and is consulted
only while the process is undecided.
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, Optional

from core.knowledge import (
    hidden_capacity,
    hidden_path_exists,
    known_values,
    knows_exists_correct,
    knows_majority,
    maj_vals,
    proven_crashed,
)
from core.model import LocalState, Value

if TYPE_CHECKING:
    from protocols.registry import ProtocolSpec


@dataclass(frozen=True)
class DecisionRuleInput:
    view_now: LocalState
    view_prev: Optional[LocalState]
    spec: "ProtocolSpec"

    @property
    def time(self) -> int:
        return self.view_now.owner.time


def decide_P0(inp: DecisionRuleInput) -> Optional[Value]:
    if 0 in known_values(inp.view_now).vals:
        return 0
    if inp.time == inp.spec.t + 1:
        return 1
    return None


def decide_OPT0(inp: DecisionRuleInput) -> Optional[Value]:
    if 0 in known_values(inp.view_now).vals:
        return 0
    if not hidden_path_exists(inp.view_now):
        return 1
    return None


def decide_OPT1(inp: DecisionRuleInput) -> Optional[Value]:
    if 1 in known_values(inp.view_now).vals:
        return 1
    if not hidden_path_exists(inp.view_now):
        return 0
    return None


def decide_OPT_MIN(inp: DecisionRuleInput) -> Optional[Value]:
    known = known_values(inp.view_now)
    if 0 in known.vals:
        return 0
    if not hidden_path_exists(inp.view_now):
        return known.min
    return None


def decide_OPT_MAJ(inp: DecisionRuleInput) -> Optional[Value]:
    view, n = inp.view_now, inp.spec.n
    if knows_majority(view, 0, n):
        return 0
    if knows_majority(view, 1, n):
        return 1
    if not hidden_path_exists(view):
        return maj_vals(view)
    return None


def _low_or_narrow(view: LocalState, k: int) -> bool:
    """Low, or hidden capacity below k"""
    return bool(known_values(view, k).lows) or hidden_capacity(view) < k


def decide_OPT_MIN_K(inp: DecisionRuleInput) -> Optional[Value]:
    if _low_or_narrow(inp.view_now, inp.spec.k):
        return known_values(inp.view_now).min
    return None


def decide_U_P0(inp: DecisionRuleInput) -> Optional[Value]:
    if knows_exists_correct(inp.view_now, inp.view_prev, 0, inp.spec.t):
        return 0
    if inp.time == inp.spec.t + 1:
        return 1
    return None


def decide_U_OPT0(inp: DecisionRuleInput) -> Optional[Value]:
    view = inp.view_now
    if knows_exists_correct(view, inp.view_prev, 0, inp.spec.t):
        return 0
    if not hidden_path_exists(view) and 0 not in known_values(view).vals:
        return 1
    return None


def decide_U_PROT_MIN_K(inp: DecisionRuleInput) -> Optional[Value]:
    view, prev, spec = inp.view_now, inp.view_prev, inp.spec
    k = spec.k
    current_min = known_values(view).min
    if _low_or_narrow(view, k) and knows_exists_correct(view, prev, current_min, spec.t):
        return current_min
    if inp.time > 0 and prev is not None and _low_or_narrow(prev, k):
        return known_values(prev).min
    if inp.time == spec.t // k + 1:
        return current_min
    return None


def decide_P0OPT_HMW(inp: DecisionRuleInput) -> Optional[Value]:
    """Decide 1 after a round in which no new failure was discovered"""
    if 0 in known_values(inp.view_now).vals:
        return 0
    if inp.time >= 1 and inp.view_prev is not None:
        if proven_crashed(inp.view_now) == proven_crashed(inp.view_prev):
            return 1
    return None


RULES: Dict[str, Callable[[DecisionRuleInput], Optional[Value]]] = {
    "P0": decide_P0,
    "OPT0": decide_OPT0,
    "OPT1": decide_OPT1,
    "OPT_MIN": decide_OPT_MIN,
    "OPT_MAJ": decide_OPT_MAJ,
    "OPT_MIN_K": decide_OPT_MIN_K,
    "U_P0": decide_U_P0,
    "U_OPT0": decide_U_OPT0,
    "U_PROT_MIN_K": decide_U_PROT_MIN_K,
    "P0OPT_HMW": decide_P0OPT_HMW,
}
