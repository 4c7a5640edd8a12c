"""Greedy least-squares regression tree with minsplit stopping.

Split search minimizes the total within-child sum of squared errors over
all features and all midpoint thresholds. Ties break to the lowest feature
index, then the lowest threshold, so builds are deterministic. A node is
split only while it holds at least ``minsplit`` rows; children may be
smaller. No pruning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

# Relative slack below the parent SSE a split must clear to count as a
# strict improvement; absorbs prefix-sum rounding noise.
_SSE_TOL = 1e-12


@dataclass(frozen=True)
class SplitRule:
    feature: int
    threshold: float


@dataclass
class TreeNode:
    """One node of a binary regression tree.

    Internal nodes carry a split rule and two children; every node keeps
    the mean/count of the training rows it saw. ``sigma2`` is used by the
    Bayesian variant only.
    """

    depth: int
    mean: float
    count: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    sigma2: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class RegressionTree:
    root: TreeNode
    n_features: int

    def leaves(self) -> list[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return out

    def internal_nodes(self) -> list[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                out.append(node)
                stack.extend((node.right, node.left))
        return out

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())


def _node_sse(y: np.ndarray) -> float:
    return float(np.sum((y - y.mean()) ** 2))


def best_split(x: np.ndarray, y: np.ndarray) -> SplitRule | None:
    """Exhaustive least-squares split search over midpoint thresholds.

    Returns None when no (feature, threshold) pair strictly reduces the
    node SSE, e.g. constant response or no feature with two distinct
    values.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = x.shape
    if n < 2:
        return None
    parent_sse = _node_sse(y)
    best: tuple[float, int, float] | None = None
    tol = _SSE_TOL * max(1.0, parent_sse)

    for j in range(d):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = y[order]
        boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
        if boundaries.size == 0:
            continue
        c1 = np.cumsum(ys)
        c2 = np.cumsum(ys**2)
        nl = boundaries + 1
        sl, sl2 = c1[boundaries], c2[boundaries]
        sr, sr2 = c1[-1] - sl, c2[-1] - sl2
        sse = (sl2 - sl**2 / nl) + (sr2 - sr**2 / (n - nl))
        k = int(np.argmin(sse))  # ties: lowest threshold wins (first index)
        if sse[k] < parent_sse - tol and (best is None or sse[k] < best[0]):
            thr = 0.5 * (xs[boundaries[k]] + xs[boundaries[k] + 1])
            best = (float(sse[k]), j, float(thr))

    if best is None:
        return None
    return SplitRule(feature=best[1], threshold=best[2])


def _grow(x: np.ndarray, y: np.ndarray, depth: int, minsplit: int) -> TreeNode:
    node = TreeNode(depth=depth, mean=float(y.mean()), count=y.shape[0])
    if y.shape[0] < minsplit:
        return node
    rule = best_split(x, y)
    if rule is None:
        return node
    go_left = x[:, rule.feature] <= rule.threshold
    node.feature = rule.feature
    node.threshold = rule.threshold
    node.left = _grow(x[go_left], y[go_left], depth + 1, minsplit)
    node.right = _grow(x[~go_left], y[~go_left], depth + 1, minsplit)
    return node


def fit_cart(train: Dataset, minsplit: int) -> RegressionTree:
    """Recursively split every node holding >= minsplit rows."""
    if minsplit < 2:
        raise ValueError("minsplit must be >= 2")
    if train.n == 0:
        raise ValueError("empty training set")
    root = _grow(train.features, train.response, 0, minsplit)
    return RegressionTree(root=root, n_features=train.d)


def predict_tree(tree: RegressionTree, x: np.ndarray) -> float:
    """Route one feature vector to its leaf; <= goes left."""
    x = np.asarray(x, dtype=float)
    if x.shape != (tree.n_features,):
        raise ValueError(f"expected {tree.n_features} features, got {x.shape}")
    node = tree.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.mean


def predict_tree_batch(tree: RegressionTree, x: np.ndarray) -> np.ndarray:
    """Vectorized routing of an (n, d) matrix through the tree."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != tree.n_features:
        raise ValueError(f"expected (n, {tree.n_features}) matrix, got {x.shape}")
    out = np.empty(x.shape[0])
    stack = [(tree.root, np.arange(x.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.mean
            continue
        go_left = x[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out


def used_features(tree: RegressionTree) -> tuple[int, ...]:
    """Ascending, de-duplicated feature indices used by any split."""
    return tuple(sorted({node.feature for node in tree.internal_nodes()}))


def render_tree(tree: RegressionTree, feature_names: tuple[str, ...] | None = None) -> str:
    """Human-readable indented text form, stable across runs."""
    names = feature_names or tuple(f"x{j}" for j in range(tree.n_features))
    lines: list[str] = []

    def walk(node: TreeNode, prefix: str) -> None:
        pad = "  " * node.depth
        if node.is_leaf:
            lines.append(f"{pad}{prefix}leaf: mean={node.mean:.6g} n={node.count}")
            return
        lines.append(
            f"{pad}{prefix}split: {names[node.feature]} <= {node.threshold:.6g}"
        )
        walk(node.left, "L ")
        walk(node.right, "R ")

    walk(tree.root, "")
    return "\n".join(lines)
