"""
Dataset domain model: covariates, standardized response and dense group indices.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from shared.utils.exceptions import DatasetIngestException, StandardizationException


@dataclass(frozen=True)
class ResponseTransform:
    """
    z-score transform applied to the response at ingestion.

    scale is the population standard deviation (ddof=0).
    """
    center: float
    scale: float

    def __post_init__(self):
        if not (np.isfinite(self.center) and np.isfinite(self.scale)) or self.scale <= 0:
            raise StandardizationException(
                f"Invalid response transform: center={self.center}, scale={self.scale}"
            )

    def apply(self, raw: np.ndarray | float) -> np.ndarray | float:
        return (np.asarray(raw, dtype=float) - self.center) / self.scale

    def inverse(self, scaled: np.ndarray | float) -> np.ndarray | float:
        return np.asarray(scaled, dtype=float) * self.scale + self.center

    def to_dict(self) -> dict:
        return {"center": float(self.center), "scale": float(self.scale)}

    @classmethod
    def from_dict(cls, data: dict) -> "ResponseTransform":
        return cls(center=float(data["center"]), scale=float(data["scale"]))

    @classmethod
    def identity(cls) -> "ResponseTransform":
        return cls(center=0.0, scale=1.0)


def standardize(raw: Sequence[float] | np.ndarray, column: str = "response") -> tuple[np.ndarray, ResponseTransform]:
    """
    Standardize a vector to mean 0 and population standard deviation 1.

    Args:
        raw: Non-empty vector of finite reals
        column: Column name used in error messages

    Returns:
        (scaled vector, transform)

    Raises:
        StandardizationException: If the vector is empty, non-finite or constant
    """
    values = np.asarray(raw, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise StandardizationException(f"Cannot standardize empty column '{column}'")
    if not np.all(np.isfinite(values)):
        raise StandardizationException(f"Column '{column}' contains non-finite values")

    center = float(np.mean(values))
    scale = float(np.std(values))
    if scale == 0.0 or not np.isfinite(scale):
        raise StandardizationException(f"constant response: column '{column}' has zero variance")

    transform = ResponseTransform(center=center, scale=scale)
    return (values - center) / scale, transform


@dataclass(frozen=True)
class LabelTable:
    """Bidirectional map between raw group labels and dense 0-based indices."""
    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {label: i for i, label in enumerate(self.labels)}
        if len(index) != len(self.labels):
            raise DatasetIngestException("Group label table contains duplicate labels")
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_raw(cls, raw_labels: Iterable[str]) -> tuple["LabelTable", np.ndarray]:
        """Build a table in order of first appearance and encode the labels."""
        raw = [str(label) for label in raw_labels]
        ordered = tuple(dict.fromkeys(raw))
        table = cls(labels=ordered)
        return table, np.array([table._index[label] for label in raw], dtype=np.int64)

    @property
    def size(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> Optional[int]:
        return self._index.get(str(label))

    def label_of(self, index: int) -> str:
        return self.labels[index]

    def encode(self, raw_labels: Iterable[Optional[str]]) -> np.ndarray:
        """Dense indices with -1 for labels the table does not know."""
        return np.array(
            [-1 if label is None else self._index.get(str(label), -1) for label in raw_labels],
            dtype=np.int64,
        )

    def to_dict(self) -> dict:
        return {"labels": list(self.labels)}

    @classmethod
    def from_dict(cls, data: dict) -> "LabelTable":
        return cls(labels=tuple(str(label) for label in data["labels"]))


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    The (X, y, group) triple a chain is fitted on.

    response is on the standardized scale; response_transform maps it back.
    group holds dense indices into label_table.
    """
    covariates: np.ndarray
    response: np.ndarray
    group: np.ndarray
    label_table: LabelTable
    response_transform: ResponseTransform
    covariate_names: tuple[str, ...] = ()
    response_name: str = "response"
    group_name: str = "group"

    def __post_init__(self):
        covariates = np.array(self.covariates, dtype=float)
        if covariates.ndim == 1:
            covariates = covariates.reshape(-1, 1)
        response = np.array(self.response, dtype=float)
        group = np.array(self.group, dtype=np.int64)

        n = response.shape[0]
        if n < 1:
            raise DatasetIngestException("Dataset must contain at least one row")
        if covariates.shape[0] != n or group.shape[0] != n:
            raise DatasetIngestException(
                f"Row count mismatch: covariates={covariates.shape[0]}, response={n}, group={group.shape[0]}"
            )
        if not np.all(np.isfinite(covariates)) or not np.all(np.isfinite(response)):
            raise DatasetIngestException("Covariates and response must be finite")
        if self.label_table.size < 1 or group.min() < 0 or group.max() >= self.label_table.size:
            raise DatasetIngestException("Every group entry must map to a label table index")

        names = self.covariate_names or tuple(f"x{i}" for i in range(covariates.shape[1]))
        if len(names) != covariates.shape[1]:
            raise DatasetIngestException("covariate_names does not match the number of columns")

        for name, value in (("covariates", covariates), ("response", response), ("group", group)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "covariate_names", tuple(names))

    @property
    def n(self) -> int:
        return int(self.response.shape[0])

    @property
    def n_covariates(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def n_groups(self) -> int:
        return self.label_table.size

    @property
    def raw_response(self) -> np.ndarray:
        return self.response_transform.inverse(self.response)

    def trained_groups(self) -> np.ndarray:
        """Sorted dense indices of groups with at least one row."""
        return np.unique(self.group)

    def subset(self, rows: np.ndarray) -> "Dataset":
        """Rows of this dataset, keeping the label table and response transform."""
        rows = np.asarray(rows)
        return Dataset(
            covariates=self.covariates[rows],
            response=self.response[rows],
            group=self.group[rows],
            label_table=self.label_table,
            response_transform=self.response_transform,
            covariate_names=self.covariate_names,
            response_name=self.response_name,
            group_name=self.group_name,
        )


def build_dataset(
    covariates: np.ndarray,
    raw_response: Sequence[float] | np.ndarray,
    raw_groups: Iterable[str],
    covariate_names: Sequence[str] = (),
    response_name: str = "response",
    group_name: str = "group",
) -> Dataset:
    """Standardize the response, densely re-index the groups and build a Dataset."""
    scaled, transform = standardize(raw_response, column=response_name)
    table, group = LabelTable.from_raw(raw_groups)
    return Dataset(
        covariates=np.asarray(covariates, dtype=float),
        response=scaled,
        group=group,
        label_table=table,
        response_transform=transform,
        covariate_names=tuple(covariate_names),
        response_name=response_name,
        group_name=group_name,
    )
