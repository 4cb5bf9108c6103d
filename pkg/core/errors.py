# core/errors.py
"""Exceptions raised by the library. The CLI turns them into one-line messages."""


class DefragError(Exception):
    """Base class for every error raised by TreeDefrag."""


class ConfigError(DefragError, ValueError):
    """A configuration value violates its documented range."""


class EnsembleFormatError(DefragError, ValueError):
    """The ensemble interchange document is malformed."""

    def __init__(self, message: str, tree: int | None = None, node: int | None = None):
        location = ""
        if tree is not None:
            location = f"tree {tree}"
            if node is not None:
                location += f", node {node}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.reason = message
        self.tree = tree
        self.node = node


class DatasetFormatError(DefragError, ValueError):
    """A CSV file could not be turned into a Dataset."""

    def __init__(self, message: str, row: int | None = None, column: str | int | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
        self.row = row
        self.column = column


class ModelFormatError(DefragError, ValueError):
    """A simplified-model or rule file is malformed."""


class TaskMismatchError(DefragError, ValueError):
    """Ensemble, model and dataset disagree on the task or the feature count."""


class EmptyRegionError(DefragError, ValueError):
    """The M-step was asked to fit a region that holds no responsibility mass."""


class InconsistentRegionError(DefragError, ValueError):
    """A list of statements describes an empty region."""
