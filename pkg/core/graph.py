# core/graph.py
"""
LangGraph workflow that drives every CLI verb.

prepare → execute → audit → finalize, with error_handler reachable from each step.
A verb is a VerbHandler (see core/router.py): prepare builds typed inputs from the flag map,
execute runs the library call, judge decides pass/fail from the result dictionary.
"""
import logging
import time
import uuid
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, TypedDict

from langgraph.graph import END, StateGraph

from core.errors import ConsensusLabError
from core.logging import safe_activity_log, safe_stats_update
from tools.report_schema import RESULT_MODELS
from tools.utils import log_activity

logger = logging.getLogger(__name__)


class WorkflowState(TypedDict):
    verb: str
    options: Dict[str, Any]
    thread_id: str
    inputs: Dict[str, Any]
    result: Dict[str, Any]
    passed: bool
    error: Optional[str]
    exit_code: int
    started: float
    elapsed: float
    processing_stage: str


@dataclass(frozen=True)
class VerbHandler:
    verb: str
    prepare: Callable[[Dict[str, Any]], Dict[str, Any]]
    execute: Callable[[Dict[str, Any]], Dict[str, Any]]
    judge: Callable[[Dict[str, Any]], bool]


class SweepWorkflow:
    """Compiles one StateGraph shared by all verbs; the handler is chosen from state['verb']"""

    def __init__(self, handlers: Dict[str, VerbHandler]):
        self.handlers = handlers
        self.workflow = self._build_workflow()

    def _build_workflow(self):
        graph = StateGraph(WorkflowState)

        graph.add_node("prepare", self.node_prepare)
        graph.add_node("execute", self.node_execute)
        graph.add_node("audit", self.node_audit)
        graph.add_node("finalize", self.node_finalize)
        graph.add_node("error_handler", self.node_handle_error)

        graph.set_entry_point("prepare")

        graph.add_conditional_edges(
            "prepare",
            self._check_prepared,
            {"execute": "execute", "error": "error_handler"}
        )
        graph.add_conditional_edges(
            "execute",
            self._check_executed,
            {"audit": "audit", "error": "error_handler"}
        )
        graph.add_conditional_edges(
            "audit",
            self._check_audited,
            {"finalize": "finalize", "error": "error_handler"}
        )
        graph.add_edge("finalize", END)
        graph.add_edge("error_handler", END)

        compiled = graph.compile()
        log_activity("LangGraph workflow built successfully")
        return compiled

    # ==================== NODES ====================

    def _fail(self, state: WorkflowState, error: Exception) -> WorkflowState:
        if isinstance(error, ConsensusLabError):
            state["exit_code"] = error.exit_code
            logger.debug(f"{type(error).__name__}: {error}")
        else:
            state["exit_code"] = 1
            logger.exception(f"Unexpected failure in {state['processing_stage']}")
        state["error"] = f"{type(error).__name__}: {error}"
        return state

    def node_prepare(self, state: WorkflowState) -> WorkflowState:
        state["processing_stage"] = "preparing"
        handler = self.handlers.get(state["verb"])
        if handler is None:
            state["error"] = f"unknown verb '{state['verb']}'"
            state["exit_code"] = 2
            return state
        try:
            state["inputs"] = handler.prepare(state["options"])
        except Exception as error:
            return self._fail(state, error)
        log_activity(f"Prepared {state['verb']}", state["thread_id"])
        return state

    def node_execute(self, state: WorkflowState) -> WorkflowState:
        state["processing_stage"] = "executing"
        try:
            state["result"] = self.handlers[state["verb"]].execute(state["inputs"])
        except Exception as error:
            return self._fail(state, error)
        return state

    def node_audit(self, state: WorkflowState) -> WorkflowState:
        """Validate the result against its report model, then judge it"""
        state["processing_stage"] = "auditing"
        try:
            RESULT_MODELS[state["verb"]].model_validate(state["result"])
            state["passed"] = bool(self.handlers[state["verb"]].judge(state["result"]))
        except Exception as error:
            return self._fail(state, error)
        state["exit_code"] = 0 if state["passed"] else 1
        return state

    def node_finalize(self, state: WorkflowState) -> WorkflowState:
        state["processing_stage"] = "finalized"
        state["elapsed"] = time.perf_counter() - state["started"]
        outcome = "passed" if state["passed"] else "finding reported"
        log_activity(f"{state['verb']} {outcome} in {state['elapsed']:.2f}s", state["thread_id"])
        return state

    def node_handle_error(self, state: WorkflowState) -> WorkflowState:
        state["processing_stage"] = "failed"
        state["passed"] = False
        state["elapsed"] = time.perf_counter() - state["started"]
        error_msg = state.get("error") or "Unknown error"

        log_activity(f"Workflow error: {error_msg}", state["thread_id"])
        safe_stats_update({"errors": 1})
        safe_activity_log({
            "id": state["thread_id"],
            "verb": state["verb"],
            "action": "Error Occurred",
            "details": error_msg,
            "status": "error",
        })
        return state

    # ==================== EDGES ====================

    def _check_prepared(self, state: WorkflowState) -> str:
        return "error" if state.get("error") else "execute"

    def _check_executed(self, state: WorkflowState) -> str:
        return "error" if state.get("error") else "audit"

    def _check_audited(self, state: WorkflowState) -> str:
        return "error" if state.get("error") else "finalize"

    # ==================== ENTRY ====================

    def run(self, verb: str, options: Dict[str, Any]) -> WorkflowState:
        thread_id = str(uuid.uuid4())[:8]
        initial_state = WorkflowState(
            verb=verb,
            options=options,
            thread_id=thread_id,
            inputs={},
            result={},
            passed=False,
            error=None,
            exit_code=0,
            started=time.perf_counter(),
            elapsed=0.0,
            processing_stage="initialized",
        )
        return self.workflow.invoke(initial_state)
