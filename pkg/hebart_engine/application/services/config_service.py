"""
Resolution of run configuration: command-line flag > config file > built-in default.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

from hebart_engine.infrastructure.repositories.model_repository import load_config_file
from shared.models.hyperparams import Hyperparams
from shared.utils.constants import FitMode
from shared.utils.exceptions import ConfigurationException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ResolvedConfig:
    hyperparams: Hyperparams
    mode: FitMode
    source: Optional[str] = None

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "hyperparams": self.hyperparams.to_dict()}


def parse_mode(value: Optional[str], default: FitMode = FitMode.HEBART) -> FitMode:
    if value is None:
        return default
    try:
        return FitMode(str(value).lower())
    except ValueError as e:
        choices = ", ".join(m.value for m in FitMode)
        raise ConfigurationException(f"Unknown mode {value!r}; expected one of {choices}") from e


def resolve_config(
    config_path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    mode: Optional[str] = None,
) -> ResolvedConfig:
    """
    Merge built-in defaults, an optional config file and command-line overrides.

    Args:
        config_path: YAML or JSON file with a `hyperparams` mapping and optional `mode`
        overrides: Hyperparameter values from flags; None values are skipped
        mode: Mode flag, overrides the file's mode

    Raises:
        ConfigurationException: Unreadable file or any hyperparameter out of bounds
    """
    file_config = load_config_file(config_path)
    hyperparams = Hyperparams.from_dict(file_config["hyperparams"]).merged(overrides or {})
    resolved_mode = parse_mode(mode if mode is not None else file_config["mode"])
    logger.debug(
        "Configuration resolved",
        extra={
            "config_path": None if config_path is None else str(config_path),
            "mode": resolved_mode.value,
            "overrides": sorted(k for k, v in (overrides or {}).items() if v is not None),
        },
    )
    return ResolvedConfig(
        hyperparams=hyperparams,
        mode=resolved_mode,
        source=None if config_path is None else str(config_path),
    )
