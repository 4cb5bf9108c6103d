# ui/plot.py
"""Static SVG view of two-dimensional data with rule rectangles or ensemble cells."""
import logging
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

import config  # noqa: E402
from core.binarizer import region_intervals  # noqa: E402
from core.errors import ConfigError  # noqa: E402
from core.rules import rules_from_model  # noqa: E402
from models.ensemble import leaf_region  # noqa: E402

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Box:
    gid: str
    x0: float
    x1: float
    y0: float
    y1: float


def plot_bounds(X) -> tuple[tuple[float, float], tuple[float, float]]:
    """[0, 1] on both axes, widened to the data range."""
    X = np.asarray(X, dtype=float)
    lo = np.minimum(X.min(axis=0), 0.0)
    hi = np.maximum(X.max(axis=0), 1.0)
    return (float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1]))


def clip_box(gid: str, intervals: dict, bounds) -> Box | None:
    (xlo, xhi), (ylo, yhi) = bounds
    x_lower, x_upper = intervals.get(0, (-np.inf, np.inf))
    y_lower, y_upper = intervals.get(1, (-np.inf, np.inf))
    x0, x1 = max(x_lower, xlo), min(x_upper, xhi)
    y0, y1 = max(y_lower, ylo), min(y_upper, yhi)
    if x0 >= x1 or y0 >= y1:
        return None
    return Box(gid, float(x0), float(x1), float(y0), float(y1))


def rule_boxes(model, bounds, tau: float = config.RULE_TAU) -> list[Box]:
    boxes = []
    for rule in rules_from_model(model, tau):
        box = clip_box(f"rule-{rule.k}", rule.intervals, bounds)
        if box is None:
            logger.warning(f"Rule {rule.k} lies outside the plotted area; skipped")
            continue
        boxes.append(box)
    return boxes


def ensemble_boxes(ensemble, bounds, max_trees: int = config.PLOT_MAX_TREES) -> list[Box]:
    boxes = []
    for t, tree in enumerate(ensemble.head(max_trees).trees):
        for leaf in tree.leaves:
            box = clip_box(f"cell-{t}-{leaf}", region_intervals(leaf_region(tree, leaf)), bounds)
            if box is not None:
                boxes.append(box)
    return boxes


def plot2d(dataset, out: Path | str, model=None, ensemble=None, tau: float = config.RULE_TAU,
           max_trees: int = config.PLOT_MAX_TREES) -> list[Box]:
    """
    Scatter of the data colored by target plus one rectangle per rule (model) or
    per leaf cell of the first max_trees trees (ensemble). Returns the drawn boxes.
    """
    if dataset.D != 2:
        raise ConfigError(f"plot2d needs two input features, the data has D={dataset.D}")
    if (model is None) == (ensemble is None):
        raise ConfigError("plot2d needs exactly one of a model or an ensemble")
    bounds = plot_bounds(dataset.X)
    if model is not None:
        boxes, filled = rule_boxes(model, bounds, tau), True
    else:
        boxes, filled = ensemble_boxes(ensemble, bounds, max_trees), False

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.scatter(dataset.X[:, 0], dataset.X[:, 1], c=np.asarray(dataset.y, dtype=float), cmap="coolwarm", s=6)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, box in enumerate(boxes):
        patch = Rectangle((box.x0, box.y0), box.x1 - box.x0, box.y1 - box.y0,
                          fill=filled, alpha=0.25 if filled else 0.8,
                          facecolor=colors[i % len(colors)] if filled else "none",
                          edgecolor=colors[i % len(colors)], linewidth=1.0)
        patch.set_gid(box.gid)
        ax.add_patch(patch)
    ax.set_xlim(*bounds[0])
    ax.set_ylim(*bounds[1])
    ax.set_xlabel(dataset.feature_names[0])
    ax.set_ylabel(dataset.feature_names[1])

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg")
    plt.close(fig)
    logger.info(f"Wrote {len(boxes)} rectangles to {out}")
    return boxes
