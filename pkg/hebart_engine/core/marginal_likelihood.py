"""
Collapsed node likelihood of the HE-BART terminal-node model.

With mu and the group means integrated out, the residuals r of one terminal
node are MVN(0, tau^-1 A) where A = I + c1 M M^T + c2 1 1^T, c1 = k1/P,
c2 = k2/P and M is the group indicator matrix of the node's rows. Woodbury on
the block-diagonal M M^T and Sherman-Morrison on 1 1^T reduce log det A and
r^T A^-1 r to per-group counts and sums, so A is never formed.

Passing k1=None evaluates the plain BART node likelihood (c1 = 0).
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from hebart_engine.core.distributions import LOG_2PI
from shared.models.dataset import Dataset
from shared.models.sampler_state import SamplerState
from shared.models.tree import Tree
from shared.utils.exceptions import DistributionException


@dataclass(frozen=True, eq=False)
class NodeSuffStats:
    """
    Sufficient statistics of one terminal node's residuals.

    groups/counts/sums list only the groups present in the node (counts >= 1).
    """
    groups: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    n: int
    total: float
    sum_sq: float

    def group_stats(self) -> dict[int, tuple[int, float]]:
        return {int(g): (int(c), float(s)) for g, c, s in zip(self.groups, self.counts, self.sums)}


def collect_suff_stats(residuals: np.ndarray, rows: np.ndarray, groups: np.ndarray) -> NodeSuffStats:
    """
    Sufficient statistics of the residuals of the given rows.

    Args:
        residuals: Residual vector over all rows
        rows: Row ids (or boolean mask) of the node
        groups: Dense group index of every row

    Raises:
        DistributionException: If the node is empty
    """
    r = np.asarray(residuals, dtype=float)[rows]
    g = np.asarray(groups)[rows]
    if r.size == 0:
        raise DistributionException("Cannot collect statistics of an empty node")
    present, inverse = np.unique(g, return_inverse=True)
    counts = np.bincount(inverse).astype(np.int64)
    sums = np.bincount(inverse, weights=r)
    return NodeSuffStats(
        groups=present.astype(np.int64),
        counts=counts,
        sums=sums,
        n=int(r.size),
        total=float(r.sum()),
        sum_sq=float(np.dot(r, r)),
    )


def collect_tree_suff_stats(
    residuals: np.ndarray, assignment: np.ndarray, groups: np.ndarray, n_groups: int
) -> dict[int, NodeSuffStats]:
    """Statistics of every non-empty terminal in one pass over the rows."""
    node_ids, node_index = np.unique(assignment, return_inverse=True)
    n_nodes = node_ids.size
    cell = node_index * n_groups + groups
    counts = np.bincount(cell, minlength=n_nodes * n_groups).reshape(n_nodes, n_groups)
    sums = np.bincount(cell, weights=residuals, minlength=n_nodes * n_groups).reshape(n_nodes, n_groups)
    node_n = np.bincount(node_index, minlength=n_nodes)
    node_total = np.bincount(node_index, weights=residuals, minlength=n_nodes)
    node_sq = np.bincount(node_index, weights=residuals * residuals, minlength=n_nodes)

    out = {}
    for k, node_id in enumerate(node_ids):
        present = np.flatnonzero(counts[k])
        out[int(node_id)] = NodeSuffStats(
            groups=present.astype(np.int64),
            counts=counts[k, present].astype(np.int64),
            sums=sums[k, present],
            n=int(node_n[k]),
            total=float(node_total[k]),
            sum_sq=float(node_sq[k]),
        )
    return out


def _check_scales(tau: float, k1: Optional[float], k2: float, n_trees: int) -> None:
    for name, value in (("tau", tau), ("k2", k2), ("num_trees", n_trees)):
        if not (np.isfinite(value) and value > 0):
            raise DistributionException(f"{name} must be positive, got {value}")
    if k1 is not None and not (np.isfinite(k1) and k1 > 0):
        raise DistributionException(f"k1 must be positive, got {k1}")


def _shrunk_group_totals(stats: NodeSuffStats, c1: float) -> tuple[np.ndarray, float, float]:
    """(1 + c1 n_j), s = sum n_j/(1 + c1 n_j), t = sum S_j/(1 + c1 n_j)."""
    d = 1.0 + c1 * stats.counts
    return d, float(np.sum(stats.counts / d)), float(np.sum(stats.sums / d))


def node_log_marginal(
    stats: NodeSuffStats, tau: float, k1: Optional[float], k2: float, n_trees: int
) -> float:
    """
    Log-density of a node's residuals under MVN(0, tau^-1 (I + c1 MM^T + c2 11^T)).

    Args:
        stats: Node sufficient statistics
        tau: Residual precision
        k1: Group precision scaling, or None for the ungrouped BART likelihood
        k2: Node-mean precision scaling
        n_trees: Number of trees P
    """
    _check_scales(tau, k1, k2, n_trees)
    c1 = 0.0 if k1 is None else k1 / n_trees
    c2 = k2 / n_trees

    d, s, t = _shrunk_group_totals(stats, c1)
    log_det = -stats.n * math.log(tau) + float(np.sum(np.log1p(c1 * stats.counts))) + math.log1p(c2 * s)
    quad = (stats.sum_sq - c1 * float(np.sum(stats.sums ** 2 / d))) - c2 * t * t / (1.0 + c2 * s)
    value = -0.5 * stats.n * LOG_2PI - 0.5 * log_det - 0.5 * tau * quad
    if not math.isfinite(value):
        raise DistributionException("Node log marginal is not finite")
    return value


def tree_log_marginal(
    node_stats: dict[int, NodeSuffStats], tau: float, k1: Optional[float], k2: float, n_trees: int
) -> float:
    """Sum of node_log_marginal over a tree's terminals."""
    return sum(node_log_marginal(stats, tau, k1, k2, n_trees) for _, stats in sorted(node_stats.items()))


def forest_suff_stats(state: SamplerState, dataset: Dataset) -> list[dict[int, NodeSuffStats]]:
    """Per-tree terminal statistics of each tree's partial residuals."""
    return [
        collect_tree_suff_stats(
            state.partial_residuals(dataset.response, p),
            state.node_assignment[p],
            dataset.group,
            dataset.n_groups,
        )
        for p in range(state.num_trees)
    ]


def sum_forest_log_marginal(
    forest_stats: Sequence[dict[int, NodeSuffStats]], tau: float, k1: Optional[float], k2: float, n_trees: int
) -> float:
    return sum(tree_log_marginal(stats, tau, k1, k2, n_trees) for stats in forest_stats)


def forest_log_marginal(state: SamplerState, dataset: Dataset, k1: Optional[float], k2: float) -> float:
    """
    Sum over trees and terminals of the collapsed marginal of each tree's
    partial residuals, at the state's tau and the given k1.
    """
    return sum_forest_log_marginal(forest_suff_stats(state, dataset), state.tau, k1, k2, state.num_trees)


def tree_suff_stats(tree: Tree, residuals: np.ndarray, dataset: Dataset) -> dict[int, NodeSuffStats]:
    """Route the training rows through tree and collect terminal statistics."""
    return collect_tree_suff_stats(residuals, tree.route_rows(dataset.covariates), dataset.group, dataset.n_groups)
