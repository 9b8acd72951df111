"""
Tree prior and the GROW / PRUNE / CHANGE / SWAP Metropolis proposals.

Split rules send a row left when x[var] < value, so the candidate cutpoints
of a node are the distinct values of its rows excluding the minimum: every
candidate leaves both children non-empty.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hebart_engine.core.distributions import RngStream, sample_multinomial_index
from shared.models.dataset import Dataset
from shared.models.hyperparams import MoveProbabilities
from shared.models.tree import Tree
from shared.utils.constants import MoveKind
from shared.utils.exceptions import TreeStructureException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)

NodeMasks = dict[int, np.ndarray]


@dataclass(frozen=True, eq=False)
class CutpointSet:
    """Available split values of one (node, covariate) pair."""
    values: np.ndarray

    @property
    def count(self) -> int:
        return int(self.values.shape[0])

    def sample(self, rng: RngStream) -> float:
        if self.count == 0:
            raise TreeStructureException("No cutpoint available to sample")
        return float(self.values[rng.integer(self.count)])

    def __contains__(self, value: float) -> bool:
        return bool(np.any(self.values == value))


@dataclass(frozen=True, eq=False)
class MoveProposal:
    """
    Outcome of one proposal draw.

    new_tree is None when the drawn move cannot be applied to the tree; the
    caller rejects such proposals without evaluating them.
    log_proposal_ratio is log q(T | T*) - log q(T* | T).
    """
    kind: MoveKind
    new_tree: Optional[Tree]
    log_proposal_ratio: float = 0.0
    node_id: Optional[int] = None
    reason: str = ""

    @property
    def is_noop(self) -> bool:
        return self.new_tree is None

    @classmethod
    def noop(cls, kind: MoveKind, reason: str) -> "MoveProposal":
        return cls(kind=kind, new_tree=None, reason=reason)


def _safe_log(value: float) -> float:
    return math.log(value) if value > 0 else -math.inf


def _node_rows(tree: Tree, dataset: Dataset, node_id: int, masks: Optional[NodeMasks]) -> np.ndarray:
    if masks is None:
        masks = tree.row_masks(dataset.covariates)
    try:
        return dataset.covariates[masks[node_id]]
    except KeyError as e:
        raise TreeStructureException(f"Node {node_id} does not exist") from e


def cutpoint_values(column: np.ndarray) -> np.ndarray:
    """Distinct values of a column excluding its minimum."""
    return np.unique(column)[1:]


def available_cutpoints(
    dataset: Dataset, tree: Tree, node_id: int, var: int, masks: Optional[NodeMasks] = None
) -> CutpointSet:
    """Distinct values of covariate var among the node's rows that keep both children non-empty."""
    rows = _node_rows(tree, dataset, node_id, masks)
    return CutpointSet(values=cutpoint_values(rows[:, var]))


def splittable_covariates(rows: np.ndarray) -> np.ndarray:
    """Columns with at least one available cutpoint (at least two distinct values)."""
    if rows.shape[0] < 2:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(rows.max(axis=0) > rows.min(axis=0))


def log_split_probability(depth: int, alpha: float, beta: float) -> float:
    return math.log(alpha) - beta * math.log1p(depth)


def log_tree_prior(
    tree: Tree, alpha: float, beta: float, dataset: Dataset, masks: Optional[NodeMasks] = None
) -> float:
    """
    Log prior of the tree structure and split rules.

    Terminals contribute log(1 - P_split(d)) when they have an available split
    and 0 otherwise. Internal nodes contribute log P_split(d) - log p_adj -
    log n_adj. A rule whose value is not an available cutpoint of its node
    has prior probability zero.
    """
    if masks is None:
        masks = tree.row_masks(dataset.covariates)
    total = 0.0
    for node_id, node in tree.nodes.items():
        rows = dataset.covariates[masks[node_id]]
        n_vars = splittable_covariates(rows).size
        if node.is_terminal:
            if n_vars > 0:
                total += math.log1p(-math.exp(log_split_probability(node.depth, alpha, beta)))
            continue
        cutpoints = CutpointSet(values=cutpoint_values(rows[:, node.split_var]))
        if n_vars == 0 or node.split_value not in cutpoints:
            return -math.inf
        total += log_split_probability(node.depth, alpha, beta) - math.log(n_vars) - math.log(cutpoints.count)
    return total


# ---------- proposal probabilities shared by GROW and its reverse PRUNE ----------

def _log_grow_probability(probs: MoveProbabilities, n_terminals: int, n_vars: int, n_cutpoints: int) -> float:
    return (
        _safe_log(probs.grow)
        - math.log(n_terminals)
        - math.log(n_vars)
        - math.log(n_cutpoints)
    )


def _log_prune_probability(probs: MoveProbabilities, n_prunable: int) -> float:
    return _safe_log(probs.prune) - math.log(n_prunable)


def grow_log_ratio(
    tree: Tree, node_id: int, var: int, dataset: Dataset, probs: MoveProbabilities,
    masks: Optional[NodeMasks] = None,
) -> float:
    """log q(T | T*) - log q(T* | T) for growing terminal node_id of tree on covariate var."""
    rows = _node_rows(tree, dataset, node_id, masks)
    n_vars = splittable_covariates(rows).size
    n_cutpoints = cutpoint_values(rows[:, var]).size
    if n_vars == 0 or n_cutpoints == 0:
        raise TreeStructureException(f"Terminal {node_id} cannot be split on column {var}")
    # the prunable count depends on the grown structure only, not on the cutpoint
    n_prunable = len(tree.grow(node_id, var, float(np.max(rows[:, var]))).prunable_ids())
    forward = _log_grow_probability(probs, tree.num_terminals, n_vars, n_cutpoints)
    reverse = _log_prune_probability(probs, n_prunable)
    return reverse - forward


def prune_log_ratio(
    tree: Tree, node_id: int, dataset: Dataset, probs: MoveProbabilities,
    masks: Optional[NodeMasks] = None,
) -> float:
    """log q(T | T*) - log q(T* | T) for pruning node_id, a parent of two terminals."""
    node = tree.node(node_id)
    rows = _node_rows(tree, dataset, node_id, masks)
    forward = _log_prune_probability(probs, len(tree.prunable_ids()))
    # pruning merges two terminals into one
    reverse = _log_grow_probability(
        probs,
        tree.num_terminals - 1,
        splittable_covariates(rows).size,
        cutpoint_values(rows[:, node.split_var]).size,
    )
    return reverse - forward


def _grow(tree: Tree, dataset: Dataset, rng: RngStream, probs: MoveProbabilities, masks: NodeMasks) -> MoveProposal:
    terminals = tree.terminal_ids()
    node_id = terminals[rng.integer(len(terminals))]
    rows = dataset.covariates[masks[node_id]]
    candidates = splittable_covariates(rows)
    if candidates.size == 0:
        return MoveProposal.noop(MoveKind.GROW, f"terminal {node_id} has no available split")

    var = int(candidates[rng.integer(candidates.size)])
    value = CutpointSet(values=cutpoint_values(rows[:, var])).sample(rng)
    new_tree = tree.grow(node_id, var, value)
    return MoveProposal(MoveKind.GROW, new_tree, grow_log_ratio(tree, node_id, var, dataset, probs, masks), node_id)


def _prune(tree: Tree, dataset: Dataset, rng: RngStream, probs: MoveProbabilities, masks: NodeMasks) -> MoveProposal:
    prunable = tree.prunable_ids()
    if not prunable:
        return MoveProposal.noop(MoveKind.PRUNE, "tree has no prunable node")

    node_id = prunable[rng.integer(len(prunable))]
    new_tree = tree.prune(node_id)
    return MoveProposal(MoveKind.PRUNE, new_tree, prune_log_ratio(tree, node_id, dataset, probs, masks), node_id)


def _change(tree: Tree, dataset: Dataset, rng: RngStream, probs: MoveProbabilities, masks: NodeMasks) -> MoveProposal:
    prunable = tree.prunable_ids()
    if not prunable:
        return MoveProposal.noop(MoveKind.CHANGE, "tree has no parent of two terminals")

    node_id = prunable[rng.integer(len(prunable))]
    node = tree.node(node_id)
    rows = dataset.covariates[masks[node_id]]
    candidates = splittable_covariates(rows)
    var = int(candidates[rng.integer(candidates.size)])
    cutpoints = CutpointSet(values=cutpoint_values(rows[:, var]))
    value = cutpoints.sample(rng)

    new_tree = tree.with_rule(node_id, var, value).with_placeholder_terminals([node.left, node.right])
    # the choice of node and of covariate is symmetric; only the cutpoint counts differ
    old_count = cutpoint_values(rows[:, node.split_var]).size
    return MoveProposal(MoveKind.CHANGE, new_tree, math.log(cutpoints.count) - math.log(old_count), node_id)


def _swap(tree: Tree, dataset: Dataset, rng: RngStream, probs: MoveProbabilities, masks: NodeMasks) -> MoveProposal:
    pairs = tree.swappable_pairs()
    if not pairs:
        return MoveProposal.noop(MoveKind.SWAP, "tree has no internal parent-child pair")

    parent_id, child_id = pairs[rng.integer(len(pairs))]
    new_tree = tree.swap_rules(parent_id, child_id)
    occupied = np.unique(new_tree.route_rows(dataset.covariates))
    if occupied.size != new_tree.num_terminals:
        return MoveProposal.noop(MoveKind.SWAP, f"swap ({parent_id}, {child_id}) empties a terminal")
    return MoveProposal(MoveKind.SWAP, new_tree, 0.0, parent_id)


_MOVES = {
    MoveKind.GROW: _grow,
    MoveKind.PRUNE: _prune,
    MoveKind.CHANGE: _change,
    MoveKind.SWAP: _swap,
}


def propose(
    tree: Tree,
    dataset: Dataset,
    rng: RngStream,
    move_probabilities: Optional[MoveProbabilities] = None,
    masks: Optional[NodeMasks] = None,
) -> MoveProposal:
    """
    Draw a move kind with the configured probabilities and apply it.

    Args:
        tree: Current tree
        dataset: Training data the tree is routed on
        rng: Random source
        move_probabilities: Kind probabilities, defaults when omitted
        masks: Precomputed tree.row_masks(dataset.covariates)

    Returns:
        MoveProposal, possibly a no-op
    """
    probs = move_probabilities or MoveProbabilities()
    kind = list(MoveKind)[sample_multinomial_index(probs.weights(), rng)]
    if masks is None:
        masks = tree.row_masks(dataset.covariates)
    proposal = _MOVES[kind](tree, dataset, rng, probs, masks)
    if proposal.is_noop:
        logger.debug("No-op proposal", extra={"kind": kind.value, "reason": proposal.reason})
    return proposal
