"""
CSV persistence of datasets, prediction inputs and simulation truth sidecars.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from shared.models.dataset import Dataset, build_dataset
from shared.models.simulation_truth import SimulationTruth
from shared.utils.exceptions import DatasetIngestException, SimulationException, StandardizationException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class PredictionFrame:
    """Rows to predict: covariates, optional raw group labels and optional truth."""
    covariates: np.ndarray
    groups: Optional[list[str]]
    truth: Optional[np.ndarray]

    @property
    def n(self) -> int:
        return int(self.covariates.shape[0])


def _read_frame(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DatasetIngestException(f"Data file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise DatasetIngestException(f"Data file is empty: {path}") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DatasetIngestException(f"Malformed CSV {path}: {e}") from e
    if frame.empty:
        raise DatasetIngestException(f"Dataset has no rows: {path}")
    return frame


def _require_columns(frame: pd.DataFrame, columns: Sequence[str], path: str | Path) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DatasetIngestException(
            f"Missing column(s) {', '.join(repr(c) for c in missing)} in {path}; "
            f"available: {', '.join(frame.columns)}"
        )


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numeric_column(frame: pd.DataFrame, column: str, path: str | Path) -> np.ndarray:
    """Parse with float() so values written by repr or %.17g read back bit-for-bit."""
    values = np.array([_parse_float(text) for text in frame[column]], dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0])
        # line 1 is the header
        raise DatasetIngestException(
            f"Non-numeric value {frame[column].iloc[row]!r} in column {column!r} at line {row + 2} of {path}"
        )
    return values


def ingest_csv(
    path: str | Path,
    response_col: str,
    group_col: str,
    covariate_cols: Sequence[str],
) -> Dataset:
    """
    Read a grouped regression dataset.

    Args:
        path: UTF-8 CSV with a header row
        response_col: Numeric response column
        group_col: Group label column, read as opaque strings
        covariate_cols: Numeric covariate columns

    Returns:
        Dataset with standardized response and 0-based dense group indices

    Raises:
        DatasetIngestException: Missing file or column, non-numeric cell, empty dataset
        StandardizationException: Constant response
    """
    covariate_cols = list(covariate_cols)
    if not covariate_cols:
        raise DatasetIngestException("At least one covariate column is required")
    frame = _read_frame(path)
    _require_columns(frame, [response_col, group_col, *covariate_cols], path)

    covariates = np.column_stack([_numeric_column(frame, c, path) for c in covariate_cols])
    response = _numeric_column(frame, response_col, path)
    try:
        dataset = build_dataset(
            covariates=covariates,
            raw_response=response,
            raw_groups=frame[group_col].tolist(),
            covariate_names=covariate_cols,
            response_name=response_col,
            group_name=group_col,
        )
    except StandardizationException as e:
        raise StandardizationException(f"{e} in {path}") from e

    logger.info(
        "Dataset ingested",
        extra={"path": str(path), "rows": dataset.n, "groups": dataset.n_groups, "covariates": dataset.n_covariates},
    )
    return dataset


def read_prediction_frame(
    path: str | Path,
    covariate_cols: Sequence[str],
    group_col: Optional[str] = None,
    response_col: Optional[str] = None,
) -> PredictionFrame:
    """Covariates (and optionally groups and truth) of rows to predict."""
    frame = _read_frame(path)
    required = list(covariate_cols) + [c for c in (group_col, response_col) if c]
    _require_columns(frame, required, path)
    covariates = np.column_stack([_numeric_column(frame, c, path) for c in covariate_cols])
    return PredictionFrame(
        covariates=covariates,
        groups=frame[group_col].tolist() if group_col else None,
        truth=_numeric_column(frame, response_col, path) if response_col else None,
    )


def has_column(path: str | Path, column: str) -> bool:
    return column in _read_frame(path).columns


def dataset_to_frame(dataset: Dataset) -> pd.DataFrame:
    """Raw-scale frame in the column layout ingest_csv reads."""
    frame = pd.DataFrame(np.asarray(dataset.covariates), columns=list(dataset.covariate_names))
    frame[dataset.response_name] = dataset.raw_response
    frame[dataset.group_name] = [dataset.label_table.label_of(int(g)) for g in dataset.group]
    return frame


def write_dataset_csv(dataset: Dataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_to_frame(dataset).to_csv(path, index=False)
    logger.info("Dataset written", extra={"path": str(path), "rows": dataset.n})
    return path


def write_truth_sidecar(truth: SimulationTruth, path: str | Path) -> Path:
    """One key=value line per generating value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={value!r}" for key, value in truth.to_flat_dict().items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_truth_sidecar(path: str | Path) -> SimulationTruth:
    path = Path(path)
    if not path.is_file():
        raise SimulationException(f"Truth sidecar not found: {path}")
    data = {}
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SimulationException(f"Line {number} of {path} is not key=value: {line!r}")
        data[key.strip()] = value.strip()
    return SimulationTruth.from_flat_dict(data)


def truth_sidecar_path(csv_path: str | Path) -> Path:
    """<name>.truth.txt next to the dataset CSV."""
    csv_path = Path(csv_path)
    return csv_path.with_name(f"{csv_path.stem}.truth.txt")
