"""
Stored post-burn-in output of one chain.
"""

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from shared.models.dataset import LabelTable, ResponseTransform
from shared.models.hyperparams import Hyperparams
from shared.models.tree import Tree
from shared.utils.constants import FitMode


@dataclass(eq=False)
class PosteriorDraws:
    """
    Per-draw tau, k1, sweep bookkeeping and (optionally) the stored forests.

    k1s is None for BART-mode chains. train_fitted holds the per-draw
    training predictions on the standardized scale, shape (draws, n).
    """
    mode: FitMode
    hyperparams: Hyperparams
    taus: np.ndarray
    k1s: Optional[np.ndarray]
    iterations: np.ndarray
    tree_accepts: np.ndarray
    k1_accepted: np.ndarray
    response_transform: ResponseTransform
    label_table: LabelTable
    covariate_names: tuple[str, ...]
    trained_groups: frozenset[int]
    forests: Optional[list[list[Tree]]] = None
    train_fitted: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    @property
    def draw_count(self) -> int:
        return int(self.taus.shape[0])

    @property
    def n_covariates(self) -> int:
        return len(self.covariate_names)

    @property
    def has_forests(self) -> bool:
        return self.forests is not None and len(self.forests) == self.draw_count

    def sqrt_k1_over_tau(self) -> Optional[np.ndarray]:
        """Intra-group standard deviation per draw, standardized scale."""
        if self.k1s is None:
            return None
        return np.sqrt(self.k1s / self.taus)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "hyperparams": self.hyperparams.to_dict(),
            "taus": self.taus.tolist(),
            "k1s": None if self.k1s is None else self.k1s.tolist(),
            "iterations": self.iterations.tolist(),
            "tree_accepts": self.tree_accepts.tolist(),
            "k1_accepted": self.k1_accepted.tolist(),
            "response_transform": self.response_transform.to_dict(),
            "label_table": self.label_table.to_dict(),
            "covariate_names": list(self.covariate_names),
            "trained_groups": sorted(int(g) for g in self.trained_groups),
            "forests": None if self.forests is None else [
                [tree.to_dict() for tree in forest] for forest in self.forests
            ],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PosteriorDraws":
        forests = data.get("forests")
        return cls(
            mode=FitMode(data["mode"]),
            hyperparams=Hyperparams.from_dict(data["hyperparams"]),
            taus=np.asarray(data["taus"], dtype=float),
            k1s=None if data.get("k1s") is None else np.asarray(data["k1s"], dtype=float),
            iterations=np.asarray(data["iterations"], dtype=np.int64),
            tree_accepts=np.asarray(data["tree_accepts"], dtype=np.int64),
            k1_accepted=np.asarray(data["k1_accepted"], dtype=bool),
            response_transform=ResponseTransform.from_dict(data["response_transform"]),
            label_table=LabelTable.from_dict(data["label_table"]),
            covariate_names=tuple(data["covariate_names"]),
            trained_groups=frozenset(int(g) for g in data["trained_groups"]),
            forests=None if forests is None else [
                [Tree.from_dict(tree) for tree in forest] for forest in forests
            ],
            metadata=dict(data.get("metadata", {})),
        )
