# orchestrator/agent.py
import logging
from dataclasses import dataclass

from orchestrator.tools import SimplifyOptions
from orchestrator.workflow import SimplifyState, get_workflow_app

logger = logging.getLogger(__name__)


@dataclass
class SimplifyResult:
    model: object
    ruleset: object
    binarized: object
    report: dict


class Simplifier:
    """Runs the simplify workflow: statements, targets, binarization, fit, rules, report."""

    def __init__(self):
        self.workflow_app = get_workflow_app()
        logger.info("Simplifier initialized.")

    def run(self, ensemble, dataset, options: SimplifyOptions | None = None) -> SimplifyResult:
        options = options or SimplifyOptions()
        logger.info(f"Simplifying a {ensemble.n_trees}-tree {ensemble.task} ensemble "
                    f"(method={options.method}, target={options.target})")
        initial_state: SimplifyState = {"ensemble": ensemble, "dataset": dataset, "options": options}
        try:
            final_state = self.workflow_app.invoke(initial_state)
        except Exception as e:
            logger.error(f"Error during simplification: {e}")
            raise
        logger.info("Simplification completed.")
        return SimplifyResult(
            model=final_state["model"],
            ruleset=final_state["ruleset"],
            binarized=final_state["binarized"],
            report=final_state["report"],
        )


_simplifier_instance = None
def get_simplifier():
    global _simplifier_instance
    if _simplifier_instance is None:
        _simplifier_instance = Simplifier()
    return _simplifier_instance
