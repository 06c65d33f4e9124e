# core/router.py
"""
Verb router - turns a parsed flag map into library calls and a report.

Verbs:
- simulate       one run of a protocol against an adversary file
- verify         task properties and stopping bounds over an enumeration
- compare        per-process and last-decider domination between two protocols
- beat-search    look for a table strictly dominating a target
- oracle-check   combinatorial predicates against semantic knowledge (+ hidden variants)
- codec-check    compact messaging against full information, or sampled bit counts
- predicates     every knowledge predicate at one node of an adversary file

Exit codes: 0 passed, 1 finding or certification failure, 2 usage / input error.
"""
import logging
from typing import Any, Dict, List, Optional, Tuple

from config.settings import config
from core.errors import InvalidProtocolSpec
from core.graph import SweepWorkflow, VerbHandler
from core.knowledge import (
    failure_knowledge,
    hidden_capacity_by_flow,
    hidden_path_by_search,
    hidden_profile,
    known_values,
    knows_exists_correct,
    knows_majority,
    maj_vals,
)
from core.model import simulate, view
from protocols.registry import NEEDS_K, ProtocolId, ProtocolSpec
from services.beat_search import SearchMode, beat_search
from services.codec_service import codec_check, declared_bound, measure_bits, pair_bit_bound
from services.domain import EnumerationDomain
from services.oracle_service import hidden_variant_check, oracle_check
from services.search_service import compare, compare_last_decider, dominates
from services.sim_service import TaskSpec, check_run, verify
from tools.adversary_loader import load_adversary
from tools.report_schema import Report, build_report
from tools.utils import log_activity

logger = logging.getLogger(__name__)


def _given(options: Dict[str, Any], key: str, default: Any) -> Any:
    """An explicit option, zero included, or the default when the flag was left out"""
    value = options.get(key)
    return default if value is None else value


def _domain(options: Dict[str, Any]) -> EnumerationDomain:
    return EnumerationDomain(options["n"], options["t"], _given(options, "values", 2), options.get("horizon"))


def _str_keys(mapping: Dict[Any, Any]) -> Dict[str, Any]:
    return {str(key): value for key, value in sorted(mapping.items())}


def _protocol_list(names: Optional[str], dom: EnumerationDomain, k: Optional[int]) -> List[ProtocolSpec]:
    """Comma-separated protocol ids, or every protocol the domain admits for 'all'"""
    if not names or names.strip().lower() == "all":
        specs = []
        for pid in ProtocolId:
            try:
                specs.append(ProtocolSpec(pid, dom.n, dom.t, dom.value_count, (k or 1) if pid in NEEDS_K else None))
            except InvalidProtocolSpec:
                logger.debug(f"{pid.value} skipped on {dom.describe()}")
        return specs
    return [ProtocolSpec.parse(name, dom.n, dom.t, dom.value_count, k) for name in names.split(",") if name.strip()]


# ==================== SIMULATE ====================

def prepare_simulate(options: Dict[str, Any]) -> Dict[str, Any]:
    values = _given(options, "values", 2)
    adv = load_adversary(options["adversary"], values)
    spec = ProtocolSpec.parse(options["protocol"], adv.n, adv.t, values, options.get("k"))
    task = TaskSpec.parse(options["task"], options.get("k"), values) if options.get("task") else None
    return {"adversary": adv, "spec": spec, "task": task, "horizon": _given(options, "horizon", adv.t + 1)}


def execute_simulate(inputs: Dict[str, Any]) -> Dict[str, Any]:
    adv, spec, task = inputs["adversary"], inputs["spec"], inputs["task"]
    schedule = simulate(spec, adv, inputs["horizon"])
    verdict = None
    if task is not None:
        run = check_run(task, adv, schedule)
        verdict = {
            "task": task.describe(),
            "passed": run.passed,
            "failures": [{"property": f.property, "detail": f.detail} for f in run.failures],
        }
    return {"protocol": spec.describe(), "adversary": adv.describe(), "schedule": schedule.describe(), "verdict": verdict}


def judge_simulate(result: Dict[str, Any]) -> bool:
    return result["verdict"] is None or result["verdict"]["passed"]


# ==================== VERIFY ====================

def prepare_verify(options: Dict[str, Any]) -> Dict[str, Any]:
    dom = _domain(options)
    return {
        "domain": dom,
        "spec": ProtocolSpec.parse(options["protocol"], dom.n, dom.t, dom.value_count, options.get("k")),
        "task": TaskSpec.parse(options["task"], options.get("k"), dom.value_count),
        "workers": options.get("workers"),
    }


def execute_verify(inputs: Dict[str, Any]) -> Dict[str, Any]:
    spec, task, dom = inputs["spec"], inputs["task"], inputs["domain"]
    summary = verify(spec, task, dom, inputs["workers"])
    return {
        "protocol": spec.describe(),
        "task": task.describe(),
        "domain": dom.describe(),
        "runs": summary.runs,
        "failed_runs": summary.failed_runs,
        "bound_violations": summary.bound_violations,
        "max_time_by_f": _str_keys(summary.max_time_by_f),
        "failures": summary.failures,
        "violations": summary.violations,
    }


def judge_verify(result: Dict[str, Any]) -> bool:
    return result["failed_runs"] == 0 and result["bound_violations"] == 0


# ==================== COMPARE ====================

def prepare_compare(options: Dict[str, Any]) -> Dict[str, Any]:
    dom = _domain(options)
    return {
        "domain": dom,
        "a": ProtocolSpec.parse(options["a"], dom.n, dom.t, dom.value_count, options.get("k")),
        "b": ProtocolSpec.parse(options["b"], dom.n, dom.t, dom.value_count, options.get("k")),
        "workers": options.get("workers"),
    }


def execute_compare(inputs: Dict[str, Any]) -> Dict[str, Any]:
    a, b, dom = inputs["a"], inputs["b"], inputs["domain"]
    per_process = compare(a, b, dom, inputs["workers"])
    last_decider = compare_last_decider(a, b, dom, inputs["workers"])
    return {
        "a": a.name,
        "b": b.name,
        "domain": dom.describe(),
        "per_process": per_process.to_dict(),
        "last_decider": last_decider.to_dict(),
    }


def judge_compare(result: Dict[str, Any]) -> bool:
    """Per-process domination must carry over to the last decider"""
    per_process = result["per_process"]["relation"]
    last_decider = result["last_decider"]["relation"]
    if per_process in ("dominates", "strictly-dominates"):
        return last_decider in ("dominates", "strictly-dominates")
    return True


# ==================== BEAT SEARCH ====================

def prepare_beat_search(options: Dict[str, Any]) -> Dict[str, Any]:
    dom = _domain(options)
    return {
        "domain": dom,
        "target": ProtocolSpec.parse(options["target"], dom.n, dom.t, dom.value_count, options.get("k")),
        "task": TaskSpec.parse(options["task"], options.get("k"), dom.value_count),
        "mode": SearchMode(options.get("mode") or SearchMode.PER_PROCESS.value),
        "budget": options.get("budget"),
        "workers": _given(options, "workers", 1),
    }


def execute_beat_search(inputs: Dict[str, Any]) -> Dict[str, Any]:
    result = beat_search(inputs["target"], inputs["task"], inputs["domain"], inputs["mode"],
                         inputs["budget"], inputs["workers"])
    return result.to_dict()


def judge_beat_search(result: Dict[str, Any]) -> bool:
    """Passing means the target is unbeatable on this domain"""
    return not result["found"]


# ==================== ORACLE ====================

def prepare_oracle(options: Dict[str, Any]) -> Dict[str, Any]:
    return {"domain": _domain(options), "workers": options.get("workers"), "variants": bool(options.get("variants"))}


def execute_oracle(inputs: Dict[str, Any]) -> Dict[str, Any]:
    dom = inputs["domain"]
    result = oracle_check(dom, inputs["workers"]).to_dict()
    if inputs["variants"]:
        variants = hidden_variant_check(dom, inputs["workers"])
        result["hidden_variants"] = {
            "checked": variants.checked,
            "failed": variants.failed,
            "passed": variants.passed,
            "failures": variants.failures,
        }
    return result


def judge_oracle(result: Dict[str, Any]) -> bool:
    variants = result.get("hidden_variants")
    return result["passed"] and (variants is None or variants["passed"])


# ==================== CODEC ====================

def prepare_codec(options: Dict[str, Any]) -> Dict[str, Any]:
    values = _given(options, "values", 2)
    if options.get("samples"):
        return {"samples": options["samples"], "seed": _given(options, "seed", 0), "n": options["n"], "values": values}
    dom = _domain(options)
    return {
        "domain": dom,
        "specs": _protocol_list(options.get("protocol"), dom, options.get("k")),
        "workers": options.get("workers"),
        "strict": options.get("strict"),
    }


def execute_codec(inputs: Dict[str, Any]) -> Dict[str, Any]:
    if "samples" in inputs:
        bits = measure_bits(inputs["n"], inputs["samples"], inputs["seed"], inputs["values"])
        return {
            "protocols": [],
            "domain": {"n": bits.n, "t": bits.t, "values": inputs["values"], "horizon": bits.horizon,
                       "samples": bits.samples, "seed": inputs["seed"]},
            "sampled": True,
            "runs": bits.samples,
            "max_pair_bits": bits.max_pair_bits,
            "declared_bound": bits.declared_bound,
            "analytic_bound": bits.analytic_bound,
        }
    dom, specs = inputs["domain"], inputs["specs"]
    summary = codec_check(specs, dom, inputs["workers"], inputs["strict"])
    return {
        "protocols": [spec.name for spec in specs],
        "domain": dom.describe(),
        "runs": summary.runs,
        "mismatches": summary.mismatches,
        "examples": summary.examples,
        "max_pair_bits": summary.max_pair_bits,
        "declared_bound": declared_bound(dom.n),
        "analytic_bound": pair_bit_bound(dom.n, dom.horizon, dom.value_count, dom.t),
    }


def judge_codec(result: Dict[str, Any]) -> bool:
    if result.get("sampled"):
        return result["max_pair_bits"] <= min(result["declared_bound"], result["analytic_bound"])
    return result["mismatches"] == 0 and result["max_pair_bits"] <= result["analytic_bound"]


# ==================== PREDICATES ====================

def prepare_predicates(options: Dict[str, Any]) -> Dict[str, Any]:
    values = _given(options, "values", 2)
    adv = load_adversary(options["adversary"], values)
    return {"adversary": adv, "process": options["process"], "time": options["time"],
            "values": values, "k": options.get("k")}


def execute_predicates(inputs: Dict[str, Any]) -> Dict[str, Any]:
    adv, i, m = inputs["adversary"], inputs["process"], inputs["time"]
    now = view(adv, i, m)
    prev = view(adv, i, m - 1) if m > 0 else None
    vals = known_values(now, inputs["k"])
    failures = failure_knowledge(now)
    literal = hidden_profile(now)
    observation = hidden_profile(now, include_current_level=False)
    result = {
        "node": {"process": i, "time": m},
        "known_values": {
            "vals": sorted(vals.vals),
            "min": vals.min,
            "lows": sorted(vals.lows) if inputs["k"] is not None else None,
        },
        "failure_knowledge": {
            "known_crashed_by": _str_keys(failures.known_crashed_by),
            "knownf": failures.knownf,
        },
        "hidden": {
            "by_level": [sorted(level) for level in literal.hidden_by_level],
            "capacity": literal.capacity,
            "path_exists": literal.hidden_path_exists,
            "capacity_by_flow": hidden_capacity_by_flow(now),
            "path_by_search": hidden_path_by_search(now),
        },
        "hidden_observation": {
            "capacity": observation.capacity,
            "path_exists": observation.hidden_path_exists,
        },
        "exists_correct": {str(v): knows_exists_correct(now, prev, v, adv.t) for v in range(inputs["values"])},
    }
    if inputs["values"] == 2:
        result["majority"] = {
            "knows_0": knows_majority(now, 0, adv.n),
            "knows_1": knows_majority(now, 1, adv.n),
            "maj_vals": maj_vals(now),
        }
    return result


def judge_predicates(result: Dict[str, Any]) -> bool:
    """The networkx cross-checks must agree with the level profile"""
    hidden = result["hidden"]
    return hidden["capacity"] == hidden["capacity_by_flow"] and hidden["path_exists"] == hidden["path_by_search"]


HANDLERS = {
    "simulate": VerbHandler("simulate", prepare_simulate, execute_simulate, judge_simulate),
    "verify": VerbHandler("verify", prepare_verify, execute_verify, judge_verify),
    "compare": VerbHandler("compare", prepare_compare, execute_compare, judge_compare),
    "beat-search": VerbHandler("beat-search", prepare_beat_search, execute_beat_search, judge_beat_search),
    "oracle-check": VerbHandler("oracle-check", prepare_oracle, execute_oracle, judge_oracle),
    "codec-check": VerbHandler("codec-check", prepare_codec, execute_codec, judge_codec),
    "predicates": VerbHandler("predicates", prepare_predicates, execute_predicates, judge_predicates),
}


class ConsensusRouter:
    """Runs verbs through the shared workflow and wraps the outcome in a Report"""

    def __init__(self):
        self.graph = SweepWorkflow(HANDLERS)
        self.workflow = self.graph.workflow

    def process(self, verb: str, options: Dict[str, Any]) -> Tuple[Report, int]:
        final_state = self.graph.run(verb, options)
        echo = {key: value for key, value in sorted(options.items()) if value is not None}
        report = build_report(
            verb,
            echo,
            final_state.get("result") if not final_state.get("error") else None,
            final_state.get("elapsed", 0.0),
            passed=final_state.get("passed", False),
            error=final_state.get("error"),
        )
        return report, final_state.get("exit_code", 1)


router_instance: Optional[ConsensusRouter] = None


def initialize_system() -> ConsensusRouter:
    global router_instance
    if router_instance is None:
        router_instance = ConsensusRouter()
        log_activity(f"Router initialized (report schema {config.REPORT_SCHEMA_VERSION})")
    return router_instance


def run_verb(verb: str, options: Dict[str, Any]) -> Tuple[Report, int]:
    return initialize_system().process(verb, options)
