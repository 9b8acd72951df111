"""
Posterior predictive summaries.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class Prediction:
    """Point and credible bounds on the raw response scale; draws on the standardized scale."""
    point: float
    lower: float
    upper: float
    draws: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class PredictionBatch:
    """
    Vectorized predictions for many rows.

    points/lowers/uppers are on the raw response scale; draws has shape
    (rows, posterior draws) on the standardized scale; standardized_points is
    the per-row posterior mean before the inverse transform.
    """
    points: np.ndarray
    lowers: np.ndarray
    uppers: np.ndarray
    standardized_points: np.ndarray
    draws: np.ndarray
    level: float

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __getitem__(self, row: int) -> Prediction:
        return Prediction(
            point=float(self.points[row]),
            lower=float(self.lowers[row]),
            upper=float(self.uppers[row]),
            draws=self.draws[row],
        )


@dataclass(frozen=True)
class RmseSummary:
    """Mean of per-fold RMSEs with the empirical interval mean +/- z * sd / sqrt(k)."""
    mean: float
    lower: float
    upper: float
    sd: float
    count: int

    def format(self, digits: int = 3) -> str:
        return f"{self.mean:.{digits}f} [{self.lower:.{digits}f},{self.upper:.{digits}f}]"

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "lower": self.lower,
            "upper": self.upper,
            "sd": self.sd,
            "count": self.count,
        }
