"""
Fit artifacts: the model container, draws.csv, JSON reports and config files.

Model container layout (UTF-8 text):

    HEBART-MODEL
    format_version=1
    { ...one JSON document: PosteriorDraws.to_dict() with sorted keys... }
"""

import json
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import pandas as pd
import yaml

from shared.models.posterior_draws import PosteriorDraws
from shared.utils.constants import DRAWS_COLUMNS, MODEL_FORMAT_VERSION, MODEL_MAGIC, ArtifactNames
from shared.utils.convert import dumps_stable
from shared.utils.exceptions import ConfigurationException, HebartException, ModelStoreException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


class ModelRepository:
    """
    Reads and writes the artifacts of one output directory.

    Attributes:
        root: Output directory
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, name: str) -> Path:
        return self.root / name

    def ensure(self) -> "ModelRepository":
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    # ---------- model container ----------

    def save_model(self, draws: PosteriorDraws, name: str = ArtifactNames.MODEL) -> Path:
        if not draws.has_forests:
            raise ModelStoreException("Only chains run with stored trees can be saved as a model")
        path = self.ensure().path(name)
        header = f"{MODEL_MAGIC}\nformat_version={MODEL_FORMAT_VERSION}\n"
        path.write_text(header + dumps_stable(draws.to_dict(), indent=None) + "\n", encoding="utf-8")
        logger.info("Model saved", extra={"path": str(path), "draws": draws.draw_count})
        return path

    def load_model(self, name: str = ArtifactNames.MODEL) -> PosteriorDraws:
        """
        Load a model container.

        Raises:
            ModelStoreException: Missing file, unknown magic or version, corrupt payload
        """
        path = self.path(name)
        if not path.is_file():
            raise ModelStoreException(f"Model file not found: {path}")
        magic, version, payload = (path.read_text(encoding="utf-8").split("\n", 2) + ["", ""])[:3]
        if magic.strip() != MODEL_MAGIC:
            raise ModelStoreException(f"{path} is not a model container (bad magic {magic[:32]!r})")
        if version.strip() != f"format_version={MODEL_FORMAT_VERSION}":
            raise ModelStoreException(f"Unsupported model format {version.strip()!r} in {path}")
        try:
            draws = PosteriorDraws.from_dict(json.loads(payload))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, HebartException) as e:
            raise ModelStoreException(f"Corrupt model container {path}: {e}") from e
        logger.info("Model loaded", extra={"path": str(path), "draws": draws.draw_count})
        return draws

    # ---------- draws table ----------

    def write_draws(self, draws: PosteriorDraws, name: str = ArtifactNames.DRAWS) -> Path:
        """Per-draw iteration, tau, k1 (empty in BART mode), acceptance counts and sqrt(k1/tau)."""
        ratio = draws.sqrt_k1_over_tau()
        empty = np.full(draws.draw_count, np.nan)
        frame = pd.DataFrame({
            "iteration": draws.iterations,
            "tau": draws.taus,
            "k1": empty if draws.k1s is None else draws.k1s,
            "tree_accepts": draws.tree_accepts,
            "k1_accepted": draws.k1_accepted.astype(np.int64),
            "sqrt_k1_over_tau": empty if ratio is None else ratio,
        }, columns=list(DRAWS_COLUMNS))
        path = self.ensure().path(name)
        frame.to_csv(path, index=False, na_rep="", float_format="%.17g")
        return path

    def read_draws(self, name: str = ArtifactNames.DRAWS) -> pd.DataFrame:
        path = self.path(name)
        if not path.is_file():
            raise ModelStoreException(f"Draws file not found: {path}")
        frame = pd.read_csv(path, float_precision="round_trip")
        if tuple(frame.columns) != DRAWS_COLUMNS:
            raise ModelStoreException(f"Unexpected draws columns in {path}: {list(frame.columns)}")
        return frame

    # ---------- JSON / CSV reports ----------

    def write_json(self, data: Any, name: str) -> Path:
        path = self.ensure().path(name)
        path.write_text(dumps_stable(data) + "\n", encoding="utf-8")
        return path

    def write_frame(self, frame: pd.DataFrame, name: str) -> Path:
        path = self.ensure().path(name)
        frame.to_csv(path, index=False, float_format="%.17g")
        return path

    def write_text(self, text: str, name: str) -> Path:
        path = self.ensure().path(name)
        path.write_text(text, encoding="utf-8")
        return path


def write_frame_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def load_config_file(path: Optional[str | Path]) -> dict:
    """
    Read a YAML or JSON run configuration.

    Returns:
        {"hyperparams": mapping, "mode": optional str}; other top-level keys are ignored

    Raises:
        ConfigurationException: Missing file, parse error or wrong shape
    """
    if path is None:
        return {"hyperparams": {}, "mode": None}
    path = Path(path)
    if not path.is_file():
        raise ConfigurationException(f"Config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigurationException(f"Cannot parse config {path}: {e}") from e
    if not isinstance(data, Mapping):
        raise ConfigurationException(f"Config {path} must be a mapping at the top level")
    hyperparams = data.get("hyperparams") or {}
    if not isinstance(hyperparams, Mapping):
        raise ConfigurationException(f"'hyperparams' in {path} must be a mapping")
    mode = data.get("mode")
    logger.debug("Config file loaded", extra={"path": str(path), "keys": sorted(hyperparams)})
    return {"hyperparams": dict(hyperparams), "mode": None if mode is None else str(mode)}
