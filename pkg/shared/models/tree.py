"""
Decision-tree domain model.

A Tree is an immutable arena of nodes keyed by integer id. Internal nodes send
a row left when x[split_var] < split_value and right otherwise (ties go right).
Terminal nodes carry the overall mean mu and the per-group means group_mus.
"""

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Any, ClassVar, Mapping, Optional, Union

import numpy as np

from shared.utils.exceptions import TreeStructureException


@dataclass(frozen=True)
class InternalNode:
    split_var: int
    split_value: float
    left: int
    right: int
    parent: Optional[int]
    depth: int

    is_terminal: ClassVar[bool] = False


@dataclass(frozen=True)
class TerminalNode:
    mu: float = 0.0
    group_mus: Mapping[int, float] = field(default_factory=dict)
    parent: Optional[int] = None
    depth: int = 0

    is_terminal: ClassVar[bool] = True

    def value_for(self, group: Optional[int]) -> float:
        """Group mean when the group is present in this node, overall mean otherwise."""
        if group is not None and group in self.group_mus:
            return self.group_mus[group]
        return self.mu


Node = Union[InternalNode, TerminalNode]


@dataclass(frozen=True, eq=False)
class Tree:
    nodes: Mapping[int, Node]
    root: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))

    @classmethod
    def stump(cls, mu: float = 0.0) -> "Tree":
        return cls(nodes={0: TerminalNode(mu=mu)}, root=0)

    # ---------- structure queries ----------

    def node(self, node_id: int) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError as e:
            raise TreeStructureException(f"Node {node_id} does not exist") from e

    def terminal_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.is_terminal)

    def internal_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if not n.is_terminal)

    def prunable_ids(self) -> list[int]:
        """Internal nodes whose two children are both terminal."""
        return [
            i for i in self.internal_ids()
            if self.nodes[self.nodes[i].left].is_terminal and self.nodes[self.nodes[i].right].is_terminal
        ]

    def swappable_pairs(self) -> list[tuple[int, int]]:
        """(parent, child) pairs where both nodes are internal."""
        pairs = []
        for i in self.internal_ids():
            node = self.nodes[i]
            for child in (node.left, node.right):
                if not self.nodes[child].is_terminal:
                    pairs.append((i, child))
        return pairs

    @property
    def is_stump(self) -> bool:
        return len(self.nodes) == 1

    @property
    def num_terminals(self) -> int:
        return sum(1 for n in self.nodes.values() if n.is_terminal)

    @property
    def max_depth(self) -> int:
        return max(n.depth for n in self.nodes.values())

    def _next_id(self) -> int:
        return max(self.nodes) + 1

    # ---------- routing ----------

    def route(self, x: np.ndarray) -> int:
        """Terminal node id reached by covariate row x."""
        node_id = self.root
        node = self.nodes[node_id]
        while not node.is_terminal:
            node_id = node.left if x[node.split_var] < node.split_value else node.right
            node = self.nodes[node_id]
        return node_id

    def route_rows(self, covariates: np.ndarray) -> np.ndarray:
        """Terminal node id of every row of a covariate matrix."""
        covariates = np.atleast_2d(covariates)
        assignment = np.full(covariates.shape[0], self.root, dtype=np.int64)
        stack = [self.root]
        while stack:
            node_id = stack.pop()
            node = self.nodes[node_id]
            if node.is_terminal:
                continue
            rows = np.flatnonzero(assignment == node_id)
            go_left = covariates[rows, node.split_var] < node.split_value
            assignment[rows[go_left]] = node.left
            assignment[rows[~go_left]] = node.right
            stack.extend((node.left, node.right))
        return assignment

    def row_masks(self, covariates: np.ndarray) -> dict[int, np.ndarray]:
        """Boolean mask of the rows reaching every node, internal nodes included."""
        covariates = np.atleast_2d(covariates)
        masks = {self.root: np.ones(covariates.shape[0], dtype=bool)}
        stack = [self.root]
        while stack:
            node_id = stack.pop()
            node = self.nodes[node_id]
            if node.is_terminal:
                continue
            goes_left = covariates[:, node.split_var] < node.split_value
            masks[node.left] = masks[node_id] & goes_left
            masks[node.right] = masks[node_id] & ~goes_left
            stack.extend((node.left, node.right))
        return masks

    def contributions(self, assignment: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
        """
        Per-row value of this tree given precomputed terminal assignment.

        Rows whose group is present in their terminal get mu_{b,j}; all other rows
        (absent or negative group index) get mu_b.
        """
        out = np.empty(assignment.shape[0], dtype=float)
        for node_id in self.terminal_ids():
            rows = np.flatnonzero(assignment == node_id)
            if rows.size == 0:
                continue
            node = self.nodes[node_id]
            if not node.group_mus:
                out[rows] = node.mu
                continue
            lookup = np.full(n_groups + 1, node.mu, dtype=float)
            for g, value in node.group_mus.items():
                if 0 <= g < n_groups:
                    lookup[g] = value
            row_groups = groups[rows]
            # index n_groups is the "unknown group" slot
            out[rows] = lookup[np.where(row_groups < 0, n_groups, row_groups)]
        return out

    # ---------- structural edits (each returns a new tree) ----------

    def grow(self, node_id: int, split_var: int, split_value: float) -> "Tree":
        node = self.node(node_id)
        if not node.is_terminal:
            raise TreeStructureException(f"Cannot grow internal node {node_id}")
        left_id = self._next_id()
        right_id = left_id + 1
        nodes = dict(self.nodes)
        nodes[node_id] = InternalNode(
            split_var=int(split_var),
            split_value=float(split_value),
            left=left_id,
            right=right_id,
            parent=node.parent,
            depth=node.depth,
        )
        nodes[left_id] = TerminalNode(parent=node_id, depth=node.depth + 1)
        nodes[right_id] = TerminalNode(parent=node_id, depth=node.depth + 1)
        return Tree(nodes=nodes, root=self.root)

    def prune(self, node_id: int) -> "Tree":
        node = self.node(node_id)
        if node.is_terminal or not (self.nodes[node.left].is_terminal and self.nodes[node.right].is_terminal):
            raise TreeStructureException(f"Node {node_id} is not the parent of two terminals")
        nodes = dict(self.nodes)
        del nodes[node.left]
        del nodes[node.right]
        nodes[node_id] = TerminalNode(parent=node.parent, depth=node.depth)
        return Tree(nodes=nodes, root=self.root)

    def with_rule(self, node_id: int, split_var: int, split_value: float) -> "Tree":
        """Replace the split rule of an internal node."""
        node = self.node(node_id)
        if node.is_terminal:
            raise TreeStructureException(f"Node {node_id} has no split rule")
        nodes = dict(self.nodes)
        nodes[node_id] = replace(node, split_var=int(split_var), split_value=float(split_value))
        return Tree(nodes=nodes, root=self.root)

    def swap_rules(self, parent_id: int, child_id: int) -> "Tree":
        parent = self.node(parent_id)
        child = self.node(child_id)
        if parent.is_terminal or child.is_terminal or child.parent != parent_id:
            raise TreeStructureException(f"({parent_id}, {child_id}) is not an internal parent-child pair")
        nodes = dict(self.nodes)
        nodes[parent_id] = replace(parent, split_var=child.split_var, split_value=child.split_value)
        nodes[child_id] = replace(child, split_var=parent.split_var, split_value=parent.split_value)
        return Tree(nodes=nodes, root=self.root)

    def with_placeholder_terminals(self, node_ids: list[int]) -> "Tree":
        nodes = dict(self.nodes)
        for node_id in node_ids:
            node = self.node(node_id)
            nodes[node_id] = TerminalNode(parent=node.parent, depth=node.depth)
        return Tree(nodes=nodes, root=self.root)

    def with_terminal_params(self, params: Mapping[int, tuple[float, Mapping[int, float]]]) -> "Tree":
        """Install (mu, group_mus) on the given terminals."""
        nodes = dict(self.nodes)
        for node_id, (mu, group_mus) in params.items():
            node = self.node(node_id)
            if not node.is_terminal:
                raise TreeStructureException(f"Node {node_id} is not terminal")
            nodes[node_id] = TerminalNode(
                mu=float(mu),
                group_mus=MappingProxyType({int(g): float(v) for g, v in group_mus.items()}),
                parent=node.parent,
                depth=node.depth,
            )
        return Tree(nodes=nodes, root=self.root)

    # ---------- validation ----------

    def validate(self, n_covariates: int, covariate_ranges: Optional[np.ndarray] = None) -> None:
        """
        Check the structural invariants.

        Args:
            n_covariates: Number of covariate columns
            covariate_ranges: Optional (d, 2) array of observed [min, max] per column

        Raises:
            TreeStructureException: On the first violated invariant
        """
        if self.root not in self.nodes:
            raise TreeStructureException("Root id is not in the node arena")
        root = self.nodes[self.root]
        if root.parent is not None or root.depth != 0:
            raise TreeStructureException("Root must have no parent and depth 0")

        seen = set()
        stack = [self.root]
        while stack:
            node_id = stack.pop()
            if node_id in seen:
                raise TreeStructureException(f"Node {node_id} is reachable twice")
            seen.add(node_id)
            node = self.nodes[node_id]
            if node.is_terminal:
                continue
            if not 0 <= node.split_var < n_covariates:
                raise TreeStructureException(f"Node {node_id} splits on invalid column {node.split_var}")
            if covariate_ranges is not None:
                low, high = covariate_ranges[node.split_var]
                if not low <= node.split_value <= high:
                    raise TreeStructureException(f"Node {node_id} split value outside the observed range")
            for child_id in (node.left, node.right):
                if child_id not in self.nodes:
                    raise TreeStructureException(f"Node {node_id} points to missing child {child_id}")
                child = self.nodes[child_id]
                if child.parent != node_id or child.depth != node.depth + 1:
                    raise TreeStructureException(f"Child {child_id} has inconsistent parent/depth")
                stack.append(child_id)

        if seen != set(self.nodes):
            raise TreeStructureException("Tree contains unreachable nodes")

    # ---------- serialization ----------

    def to_dict(self) -> dict:
        nodes = []
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            if node.is_terminal:
                nodes.append({
                    "id": node_id,
                    "kind": "terminal",
                    "mu": node.mu,
                    "group_mus": {str(g): v for g, v in sorted(node.group_mus.items())},
                    "parent": node.parent,
                    "depth": node.depth,
                })
            else:
                nodes.append({
                    "id": node_id,
                    "kind": "internal",
                    "split_var": node.split_var,
                    "split_value": node.split_value,
                    "left": node.left,
                    "right": node.right,
                    "parent": node.parent,
                    "depth": node.depth,
                })
        return {"root": self.root, "nodes": nodes}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Tree":
        nodes: dict[int, Node] = {}
        for item in data["nodes"]:
            parent = None if item.get("parent") is None else int(item["parent"])
            if item["kind"] == "terminal":
                nodes[int(item["id"])] = TerminalNode(
                    mu=float(item["mu"]),
                    group_mus=MappingProxyType({int(g): float(v) for g, v in item.get("group_mus", {}).items()}),
                    parent=parent,
                    depth=int(item["depth"]),
                )
            elif item["kind"] == "internal":
                nodes[int(item["id"])] = InternalNode(
                    split_var=int(item["split_var"]),
                    split_value=float(item["split_value"]),
                    left=int(item["left"]),
                    right=int(item["right"]),
                    parent=parent,
                    depth=int(item["depth"]),
                )
            else:
                raise TreeStructureException(f"Unknown node kind '{item['kind']}'")
        return cls(nodes=nodes, root=int(data["root"]))


def route(tree: Tree, x: np.ndarray) -> int:
    """Terminal node id reached by covariate row x."""
    return tree.route(np.asarray(x, dtype=float))
