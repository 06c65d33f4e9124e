"""
Report schema - the JSON envelope every CLI verb prints, plus CSV renderings.

Usage:
    report = build_report("verify", options, results, elapsed)
    sys.stdout.buffer.write(dumps_json(report.model_dump(mode="json")))
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from config.settings import config
from tools.utils import dicts_to_csv, rows_to_csv


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CommandEcho(StrictModel):
    verb: str
    options: Dict[str, Any] = Field(default_factory=dict)


class Timing(StrictModel):
    wall_seconds: float


class Report(StrictModel):
    schema_version: str
    command: CommandEcho
    passed: bool
    error: Optional[str] = None
    results: Dict[str, Any] = Field(default_factory=dict)
    timing: Timing


# ==================== PER-VERB RESULTS ====================

class SimulateResult(StrictModel):
    protocol: Dict[str, Any]
    adversary: Dict[str, Any]
    schedule: Dict[str, Any]
    verdict: Optional[Dict[str, Any]] = None


class VerifyResult(StrictModel):
    protocol: Dict[str, Any]
    task: Dict[str, Any]
    domain: Dict[str, Any]
    runs: int
    failed_runs: int
    bound_violations: int
    max_time_by_f: Dict[str, int]
    failures: List[Dict[str, Any]]
    violations: List[Dict[str, Any]]


class CompareResult(StrictModel):
    a: str
    b: str
    domain: Dict[str, Any]
    per_process: Dict[str, Any]
    last_decider: Dict[str, Any]


class BeatSearchResult(StrictModel):
    target: str
    task: Dict[str, Any]
    mode: str
    domain: Dict[str, Any]
    found: bool
    table: Optional[Dict[str, Any]] = None
    certificate: Dict[str, Any]
    audit: Dict[str, Any]
    elapsed: float


class OracleResult(StrictModel):
    domain: Dict[str, Any]
    view_classes: int
    passed: bool
    exists_correct_variant: Dict[str, bool]
    rows: List[Dict[str, Any]]
    hidden_variants: Optional[Dict[str, Any]] = None


class CodecResult(StrictModel):
    protocols: List[str]
    domain: Dict[str, Any]
    sampled: bool = False
    runs: int
    mismatches: int = 0
    examples: List[Dict[str, Any]] = Field(default_factory=list)
    max_pair_bits: int
    declared_bound: float
    analytic_bound: int


class PredicatesResult(StrictModel):
    node: Dict[str, int]
    known_values: Dict[str, Any]
    failure_knowledge: Dict[str, Any]
    hidden: Dict[str, Any]
    hidden_observation: Dict[str, Any]
    exists_correct: Dict[str, bool]
    majority: Optional[Dict[str, Any]] = None


RESULT_MODELS = {
    "simulate": SimulateResult,
    "verify": VerifyResult,
    "compare": CompareResult,
    "beat-search": BeatSearchResult,
    "oracle-check": OracleResult,
    "codec-check": CodecResult,
    "predicates": PredicatesResult,
}


def build_report(verb: str, options: Dict[str, Any], results: Optional[Dict[str, Any]], elapsed: float,
                 passed: bool = True, error: Optional[str] = None) -> Report:
    """Validates verb results against their model (when present) and wraps them"""
    if results:
        results = RESULT_MODELS[verb].model_validate(results).model_dump(mode="json")
    return Report(
        schema_version=config.REPORT_SCHEMA_VERSION,
        command=CommandEcho(verb=verb, options=options),
        passed=passed,
        error=error,
        results=results or {},
        timing=Timing(wall_seconds=round(elapsed, 3)),
    )


def report_json_schema() -> Dict[str, Any]:
    return Report.model_json_schema()


def result_json_schema(verb: str) -> Dict[str, Any]:
    return RESULT_MODELS[verb].model_json_schema()


# ==================== CSV ====================

def schedule_csv(schedule: Dict[str, Any]) -> str:
    return dicts_to_csv(schedule.get("processes", []))


def per_f_csv(max_time_by_f: Dict[str, int]) -> str:
    return rows_to_csv(["f", "max_decision_time"], sorted(((int(f), t) for f, t in max_time_by_f.items())))


def timing_csv(report: Report) -> str:
    return rows_to_csv(["verb", "passed", "wall_seconds"], [[report.command.verb, report.passed, report.timing.wall_seconds]])


def report_to_csv(report: Report) -> str:
    """Schedules for simulate, per-f maxima for verify, the timing row otherwise"""
    if report.command.verb == "simulate" and report.results:
        return schedule_csv(report.results["schedule"])
    if report.command.verb == "verify" and report.results:
        return per_f_csv(report.results["max_time_by_f"])
    return timing_csv(report)
