"""
Mutable state of one MCMC chain.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from shared.models.dataset import Dataset
from shared.models.tree import Tree


@dataclass(eq=False)
class SamplerState:
    """
    Current trees, tau, k1 and the cached sum-of-trees prediction.

    tree_fits[p] is tree p's per-row contribution; fitted is their sum.
    node_assignment[p] maps each training row to its terminal id in tree p.
    k1 is None when the chain runs without the group layer.
    """
    forest: list[Tree]
    tau: float
    k1: Optional[float]
    fitted: np.ndarray
    node_assignment: list[np.ndarray]
    tree_fits: list[np.ndarray]
    log_tree_priors: list[float] = field(default_factory=list)

    @classmethod
    def initial(cls, dataset: Dataset, num_trees: int, tau: float, k1: Optional[float]) -> "SamplerState":
        """All stumps with mu = 0 and no group parameters."""
        zeros = np.zeros(dataset.n, dtype=float)
        root_assignment = np.zeros(dataset.n, dtype=np.int64)
        return cls(
            forest=[Tree.stump() for _ in range(num_trees)],
            tau=float(tau),
            k1=None if k1 is None else float(k1),
            fitted=zeros.copy(),
            node_assignment=[root_assignment.copy() for _ in range(num_trees)],
            tree_fits=[zeros.copy() for _ in range(num_trees)],
        )

    @property
    def num_trees(self) -> int:
        return len(self.forest)

    def partial_residuals(self, response: np.ndarray, p: int) -> np.ndarray:
        """Response minus the contributions of every tree except p."""
        return response - (self.fitted - self.tree_fits[p])

    def install_tree(self, p: int, tree: Tree, assignment: np.ndarray, tree_fit: np.ndarray) -> None:
        self.fitted = self.fitted - self.tree_fits[p] + tree_fit
        self.forest[p] = tree
        self.node_assignment[p] = assignment
        self.tree_fits[p] = tree_fit

    def recompute_fitted(self, dataset: Dataset) -> np.ndarray:
        """Sum-of-trees prediction rebuilt from scratch by re-routing every row."""
        total = np.zeros(dataset.n, dtype=float)
        for tree in self.forest:
            assignment = tree.route_rows(dataset.covariates)
            total += tree.contributions(assignment, dataset.group, dataset.n_groups)
        return total
