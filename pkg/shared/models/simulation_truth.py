"""
Generating values of a simulated grouped dataset.
"""

import math
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from shared.utils.exceptions import SimulationException

_INDEXED_KEY = re.compile(r"^(cutpoint|mu|group_mu)\[([0-9,]+)\]$")


@dataclass(frozen=True, eq=False)
class SimulationTruth:
    """
    Everything the generator drew, on the raw response scale.

    mus has shape (trees, 2): region 0 is x < cutpoint, region 1 is x >= cutpoint.
    group_mus has shape (trees, 2, groups); group j is the raw label str(j + 1).
    """
    tau: float
    k1: float
    k2: float
    n: int
    groups: int
    trees: int
    seed: int
    cutpoints: np.ndarray
    mus: np.ndarray
    group_mus: np.ndarray

    @property
    def sqrt_k1_over_tau(self) -> float:
        return math.sqrt(self.k1 / self.tau)

    def to_flat_dict(self) -> dict[str, float | int]:
        """Flat key -> scalar mapping, in a stable order."""
        out: dict[str, float | int] = {
            "tau": self.tau,
            "k1": self.k1,
            "k2": self.k2,
            "n": self.n,
            "groups": self.groups,
            "trees": self.trees,
            "seed": self.seed,
            "sqrt_k1_over_tau": self.sqrt_k1_over_tau,
        }
        for p in range(self.trees):
            out[f"cutpoint[{p}]"] = float(self.cutpoints[p])
        for p in range(self.trees):
            for r in range(2):
                out[f"mu[{p},{r}]"] = float(self.mus[p, r])
        for p in range(self.trees):
            for r in range(2):
                for j in range(self.groups):
                    out[f"group_mu[{p},{r},{j}]"] = float(self.group_mus[p, r, j])
        return out

    @classmethod
    def from_flat_dict(cls, data: Mapping[str, str | float | int]) -> "SimulationTruth":
        try:
            trees = int(data["trees"])
            groups = int(data["groups"])
            cutpoints = np.zeros(trees)
            mus = np.zeros((trees, 2))
            group_mus = np.zeros((trees, 2, groups))
            for key, value in data.items():
                match = _INDEXED_KEY.match(key)
                if match is None:
                    continue
                index = tuple(int(i) for i in match.group(2).split(","))
                target = {"cutpoint": cutpoints, "mu": mus, "group_mu": group_mus}[match.group(1)]
                target[index] = float(value)
            return cls(
                tau=float(data["tau"]),
                k1=float(data["k1"]),
                k2=float(data["k2"]),
                n=int(data["n"]),
                groups=groups,
                trees=trees,
                seed=int(data["seed"]),
                cutpoints=cutpoints,
                mus=mus,
                group_mus=group_mus,
            )
        except (KeyError, ValueError, IndexError) as e:
            raise SimulationException(f"Malformed simulation truth: {e}") from e
