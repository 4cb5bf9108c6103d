# orchestrator/workflow.py
import logging
from typing import Any, Literal

from langgraph.graph import END, START, StateGraph
from typing_extensions import TypedDict

from orchestrator.tools import (
    binarize_step,
    build_targets,
    collect_statements_step,
    extract_rules,
    fit_em,
    fit_fab,
    summarize,
)

logger = logging.getLogger(__name__)


# --- State ---
class SimplifyState(TypedDict, total=False):
    ensemble: Any
    dataset: Any
    options: Any
    table: Any
    n_raw_statements: int
    fit_data: Any
    binarized: Any
    empirical_regions: int
    model: Any
    restarts: list
    ruleset: Any
    report: dict


def _logged(name: str, step):
    def node(state: SimplifyState) -> dict:
        logger.info(f"Executing: {name}")
        return step(state)
    return node


# --- Routing ---
def route_by_method(state: SimplifyState) -> Literal["fit_fab", "fit_em"]:
    return "fit_em" if state["options"].method == "em" else "fit_fab"


# --- Graph ---
def create_workflow():
    logger.info("Creating simplify workflow...")
    workflow = StateGraph(SimplifyState)

    workflow.add_node("collect_statements", _logged("collect statements", collect_statements_step))
    workflow.add_node("build_targets", _logged("build targets", build_targets))
    workflow.add_node("binarize", _logged("binarize", binarize_step))
    workflow.add_node("fit_fab", _logged("FAB inference", fit_fab))
    workflow.add_node("fit_em", _logged("EM", fit_em))
    workflow.add_node("extract_rules", _logged("extract rules", extract_rules))
    workflow.add_node("summarize", _logged("summarize", summarize))

    workflow.add_edge(START, "collect_statements")
    workflow.add_edge("collect_statements", "build_targets")
    workflow.add_edge("build_targets", "binarize")
    workflow.add_conditional_edges("binarize", route_by_method)
    workflow.add_edge("fit_fab", "extract_rules")
    workflow.add_edge("fit_em", "extract_rules")
    workflow.add_edge("extract_rules", "summarize")
    workflow.add_edge("summarize", END)

    # No checkpointer; the state lives for one run.
    app = workflow.compile()
    logger.info("Simplify workflow compiled.")
    return app


_workflow_app = None
def get_workflow_app():
    global _workflow_app
    if _workflow_app is None:
        _workflow_app = create_workflow()
    return _workflow_app
