"""
Constants shared by the sampler, the persistence layer and the CLI.
"""
from typing import Final
from enum import Enum


class FitMode(str, Enum):
    """Which model the chain fits."""
    HEBART = "hebart"
    BART = "bart"


class MoveKind(str, Enum):
    """Tree proposal moves."""
    GROW = "grow"
    PRUNE = "prune"
    CHANGE = "change"
    SWAP = "swap"


class RngStreams:
    """Stream ids handed to RngStream so independent consumers never share draws."""
    SAMPLER = 0
    PREDICTION = 1
    SIMULATION = 2
    HOLDOUT_SPLIT = 3
    FOLD_SPLIT = 4
    # fold k uses FOLD_BASE + 2k (HE-BART) and FOLD_BASE + 2k + 1 (BART mode)
    FOLD_BASE = 1000


class ArtifactNames:
    """File names written into a fit output directory."""
    DRAWS = "draws.csv"
    MODEL = "model.hebart"
    SUMMARY = "summary.json"
    RESOLVED_CONFIG = "config.resolved.json"
    HOLDOUT_PREDICTIONS = "holdout_predictions.csv"
    CROSSVAL_FOLDS = "crossval_folds.csv"
    CROSSVAL_SUMMARY = "crossval_summary.txt"


class ExitCodes:
    """Process exit codes of the command-line tool."""
    SUCCESS = 0
    RUNTIME_FAILURE = 1
    USAGE_ERROR = 2


MODEL_MAGIC: Final[str] = "HEBART-MODEL"
MODEL_FORMAT_VERSION: Final[int] = 1

# half-width multiplier of the empirical 95% interval for a mean of fold RMSEs
CI_Z_95: Final[float] = 1.96

DRAWS_COLUMNS: Final[tuple[str, ...]] = (
    "iteration",
    "tau",
    "k1",
    "tree_accepts",
    "k1_accepted",
    "sqrt_k1_over_tau",
)
