"""Issue close-time prediction: leakage-free features, CFS, small trees,
and local/cross-project evaluation."""

__version__ = "0.1.0"

from . import cfs, cli, discretize, evaluate, ingest, tabular, targets, tree

__all__ = [
    "__version__",
    "cfs",
    "cli",
    "discretize",
    "evaluate",
    "ingest",
    "tabular",
    "targets",
    "tree",
]
