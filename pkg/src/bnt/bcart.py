"""Bayesian regression trees: structural prior, conjugate leaf marginal,
Metropolis-Hastings search, and inclusion-proportion feature selection.

Model
-----
A tree is generated by splitting node m at depth D_m with probability
alpha * (1 + D_m)^(-beta); a split rule picks one of the node's available
predictors uniformly, then one of that predictor's distinct observed
values uniformly as the threshold (x <= t routes left). Leaf responses
are Gaussian with a Normal-Inverse-Gamma prior,

    sigma^2 ~ InvGamma(shape=nu, scale=lam),  mu | sigma^2 ~ N(mu0, sigma^2/a),

so the per-leaf marginal likelihood is closed form and the posterior over
structures can be explored by accept/reject moves (GROW, PRUNE, CHANGE,
SWAP). Proposals that would create an empty child or invalidate a
descendant rule are automatic rejects, i.e. the chain lives on the
structurally valid tree set.

The CHANGE move draws the new rule uniformly over all candidate
(feature, value) pairs at the node, which makes it exactly symmetric
(the node's row set does not change); GROW/PRUNE carry the usual
Hastings correction. SWAP exchanges the rules of a parent-child pair of
internal nodes and is symmetric as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .cart import RegressionTree, TreeNode, predict_tree
from .data import Dataset
from .seeding import derive_seed

LOG_2PI = math.log(2.0 * math.pi)


class InvalidTreeError(ValueError):
    """A split threshold is not an observed value of its node's rows."""


@dataclass(frozen=True)
class TreePrior:
    """Split-probability parameters of the tree-generating process."""

    alpha: float = 0.95
    beta: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.beta < 0.0:
            raise ValueError("beta must be >= 0")


@dataclass(frozen=True)
class LeafPrior:
    """Normal-Inverse-Gamma hyperparameters of the leaf model."""

    mu0: float
    a: float = 1.0
    nu: float = 3.0
    lam: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or self.nu <= 0 or self.lam <= 0:
            raise ValueError("a, nu and lam must be positive")

    @classmethod
    def from_data(cls, y: np.ndarray, nu: float = 3.0, a: float = 1.0) -> "LeafPrior":
        """Weakly informative, data-located prior: mu0 at the sample mean,
        lam placing the sample variance at the InvGamma mode."""
        y = np.asarray(y, dtype=float)
        var = float(np.var(y))
        lam = (nu + 1.0) * var if var > 0 else 1.0
        return cls(mu0=float(np.mean(y)), a=a, nu=nu, lam=lam)


@dataclass(frozen=True)
class ChainConfig:
    """Chain length and priors for one Metropolis-Hastings run."""

    iterations: int = 7000
    burn_in: int = 2000
    thinning: int = 5
    tree_prior: TreePrior = TreePrior()
    nu: float = 3.0
    a: float = 1.0
    move_probs: tuple[float, float, float, float] = (0.4, 0.4, 0.1, 0.1)


@dataclass
class ChainState:
    """Public snapshot of the sampler: tree plus its log posterior."""

    tree: RegressionTree
    log_posterior: float
    iteration: int
    rng_state: object = None


@dataclass
class Proposal:
    """One proposed transition; infeasible draws keep the current tree."""

    tree: RegressionTree
    log_ratio: float
    move: str
    feasible: bool


@dataclass
class ChainResult:
    samples: list[RegressionTree]
    best: RegressionTree
    best_log_posterior: float
    acceptance_rate: float
    move_counts: dict[str, int]


def log_p_split(depth: int, prior: TreePrior) -> float:
    """log of alpha * (1 + depth)^(-beta)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return math.log(prior.alpha) - prior.beta * math.log1p(depth)


def _log_1m_p_split(depth: int, prior: TreePrior) -> float:
    return math.log1p(-prior.alpha * (1.0 + depth) ** (-prior.beta))


def _leaf_stats(y: np.ndarray) -> tuple[int, float, float]:
    """(n, mean, sum of squared deviations) in one pass."""
    n = y.shape[0]
    s1 = float(np.add.reduce(y))
    s2 = float(np.dot(y, y))
    ybar = s1 / n
    return n, ybar, max(s2 - s1 * ybar, 0.0)


def _leaf_loglik(y: np.ndarray, lp: LeafPrior) -> float:
    """Closed-form log marginal of one leaf's responses under the NIG prior."""
    n, ybar, s = _leaf_stats(y)
    t = n * lp.a / (n + lp.a) * (ybar - lp.mu0) ** 2
    return (
        -0.5 * n * LOG_2PI
        + 0.5 * (math.log(lp.a) - math.log(n + lp.a))
        + lp.nu * math.log(lp.lam)
        - math.lgamma(lp.nu)
        + math.lgamma(lp.nu + 0.5 * n)
        - (lp.nu + 0.5 * n) * math.log(lp.lam + 0.5 * (s + t))
    )


def _leaf_posterior(y: np.ndarray, lp: LeafPrior) -> tuple[float, float, float, float]:
    """Conjugate posterior (mu_post, a_post, nu_post, lam_post) of a leaf."""
    n, ybar, s = _leaf_stats(y)
    t = n * lp.a / (n + lp.a) * (ybar - lp.mu0) ** 2
    return (
        (n * ybar + lp.a * lp.mu0) / (n + lp.a),
        lp.a + n,
        lp.nu + 0.5 * n,
        lp.lam + 0.5 * (s + t),
    )


def _available_features(x: np.ndarray, rows: np.ndarray) -> list[int]:
    """Features with at least two distinct values among the given rows."""
    sub = x[rows]
    return [j for j in range(x.shape[1]) if sub[:, j].min() < sub[:, j].max()]


def _rule_log_prior(x: np.ndarray, rows: np.ndarray, feature: int,
                    threshold: float) -> float:
    """log P_rule = -log(available features) - log(distinct values of the
    chosen feature), validating that the threshold is observed."""
    avail = _available_features(x, rows)
    col = x[rows, feature]
    vals = np.unique(col)
    if feature not in avail or not np.any(vals == threshold):
        raise InvalidTreeError(
            f"threshold {threshold} is not an observed value of feature "
            f"{feature} in this node"
        )
    return -math.log(len(avail)) - math.log(len(vals))


def _walk_with_rows(tree: RegressionTree, x: np.ndarray):
    """Yield (node, row index array) pairs, routing the full matrix."""
    stack = [(tree.root, np.arange(x.shape[0]))]
    while stack:
        node, rows = stack.pop()
        yield node, rows
        if not node.is_leaf:
            go_left = x[rows, node.feature] <= node.threshold
            stack.append((node.left, rows[go_left]))
            stack.append((node.right, rows[~go_left]))


def log_tree_prior(tree: RegressionTree, prior: TreePrior, train: Dataset) -> float:
    """Log prior of the tree structure and its rules under the generating
    process, evaluated against the training data."""
    total = 0.0
    for node, rows in _walk_with_rows(tree, train.features):
        if node.is_leaf:
            total += _log_1m_p_split(node.depth, prior)
        else:
            total += log_p_split(node.depth, prior)
            total += _rule_log_prior(train.features, rows, node.feature,
                                     node.threshold)
    return total


def log_marginal_likelihood(tree: RegressionTree, train: Dataset,
                            leaf_prior: LeafPrior) -> float:
    """Sum of per-leaf closed-form log marginals; empty leaves are errors."""
    total = 0.0
    for node, rows in _walk_with_rows(tree, train.features):
        if node.is_leaf:
            if rows.shape[0] == 0:
                raise InvalidTreeError("tree routes no training rows to a leaf")
            total += _leaf_loglik(train.response[rows], leaf_prior)
    return total


def log_posterior(tree: RegressionTree, train: Dataset, prior: TreePrior,
                  leaf_prior: LeafPrior) -> float:
    return log_tree_prior(tree, prior, train) + \
        log_marginal_likelihood(tree, train, leaf_prior)


# ---------------------------------------------------------------------------
# Sampler internals. _Node mirrors TreeNode but keeps the row set and the
# cached log-likelihood / rule-prior contribution of each node so move
# deltas touch only the affected subtree.
# ---------------------------------------------------------------------------

class _Node:
    __slots__ = ("depth", "rows", "feature", "threshold", "left", "right",
                 "parent", "loglik", "log_rule", "_avail", "_uniq")

    def __init__(self, depth, rows, parent=None):
        self.depth = depth
        self.rows = rows
        self.parent = parent
        self.feature = None
        self.threshold = None
        self.left = None
        self.right = None
        self.loglik = 0.0   # leaf marginal contribution (leaves only)
        self.log_rule = 0.0  # rule prior contribution (internal only)
        # Lazy caches; a node's row set never changes while it is alive,
        # so these stay valid across moves.
        self._avail = None
        self._uniq = {}

    @property
    def is_leaf(self):
        return self.feature is None


class _Chain:
    """Mutable sampler state over one training set."""

    MOVES = ("grow", "prune", "change", "swap")

    def __init__(self, train: Dataset, tree_prior: TreePrior,
                 leaf_prior: LeafPrior, move_probs=(0.4, 0.4, 0.1, 0.1)):
        self.x = np.ascontiguousarray(train.features)
        self.y = np.ascontiguousarray(train.response)
        self.prior = tree_prior
        self.leaf = leaf_prior
        self.move_probs = np.asarray(move_probs, dtype=float)
        self.move_probs = self.move_probs / self.move_probs.sum()
        self.move_cum = np.cumsum(self.move_probs)
        self.root = _Node(0, np.arange(self.x.shape[0]))
        self.root.loglik = _leaf_loglik(self.y, leaf_prior)
        self.log_post = self.root.loglik + _log_1m_p_split(0, tree_prior)
        self._nodes_cache: list[_Node] | None = None

    # -- bookkeeping ------------------------------------------------------

    def nodes(self):
        # Structure changes only on accepted moves, which invalidate this.
        if self._nodes_cache is None:
            out, stack = [], [self.root]
            while stack:
                node = stack.pop()
                out.append(node)
                if not node.is_leaf:
                    stack.extend((node.right, node.left))
            self._nodes_cache = out
        return self._nodes_cache

    def invalidate(self):
        self._nodes_cache = None

    def leaves(self):
        return [n for n in self.nodes() if n.is_leaf]

    def internals(self):
        return [n for n in self.nodes() if not n.is_leaf]

    def prunable(self):
        return [n for n in self.nodes()
                if not n.is_leaf and n.left.is_leaf and n.right.is_leaf]

    def recompute_log_post(self) -> float:
        total = 0.0
        for node in self.nodes():
            if node.is_leaf:
                total += _log_1m_p_split(node.depth, self.prior) + node.loglik
            else:
                total += log_p_split(node.depth, self.prior) + node.log_rule
        self.log_post = total
        return total

    def _leaf_ll(self, rows) -> float:
        return _leaf_loglik(self.y[rows], self.leaf)

    def avail(self, node: _Node) -> list[int]:
        if node._avail is None:
            sub = self.x[node.rows]
            node._avail = np.nonzero(sub.max(axis=0) > sub.min(axis=0))[0].tolist()
        return node._avail

    def uniq(self, node: _Node, j: int) -> np.ndarray:
        vals = node._uniq.get(j)
        if vals is None:
            vals = np.unique(self.x[node.rows, j])
            node._uniq[j] = vals
        return vals

    # -- move proposals ---------------------------------------------------
    # Each returns None when infeasible, else (delta_log_post, log_q_ratio,
    # apply) where apply() mutates the tree and updates self.log_post.

    def propose_grow(self, rng):
        leaves = self.leaves()
        node = leaves[rng.integers(len(leaves))]
        avail = self.avail(node)
        if not avail:
            return None
        j = avail[rng.integers(len(avail))]
        vals = self.uniq(node, j)
        t = float(vals[rng.integers(len(vals))])
        col = self.x[node.rows, j]
        go_left = col <= t
        if go_left.all():  # drew the maximum value: right child empty
            return None
        left_rows = node.rows[go_left]
        right_rows = node.rows[~go_left]

        ll_left = self._leaf_ll(left_rows)
        ll_right = self._leaf_ll(right_rows)
        log_rule = -math.log(len(avail)) - math.log(len(vals))
        d = node.depth
        delta = (
            ll_left + ll_right - node.loglik
            + log_rule
            + log_p_split(d, self.prior) - _log_1m_p_split(d, self.prior)
            + 2.0 * _log_1m_p_split(d + 1, self.prior)
        )

        # Hastings: forward grows this leaf with this rule; reverse prunes
        # the new internal node.
        n_prunable_new = len(self.prunable()) + 1
        parent = node.parent
        if parent is not None:
            sib = parent.right if parent.left is node else parent.left
            if sib.is_leaf:
                n_prunable_new -= 1  # parent stops being prunable
        log_q_fwd = -math.log(len(leaves)) - math.log(len(avail)) - math.log(len(vals))
        log_q_rev = -math.log(n_prunable_new)
        log_ratio = (math.log(self.move_probs[1]) + log_q_rev) - \
                    (math.log(self.move_probs[0]) + log_q_fwd)

        def apply():
            node.feature = j
            node.threshold = t
            node.log_rule = log_rule
            node.loglik = 0.0
            node.left = _Node(d + 1, left_rows, node)
            node.left.loglik = ll_left
            node.right = _Node(d + 1, right_rows, node)
            node.right.loglik = ll_right
            self.log_post += delta
            self.invalidate()

        return delta, log_ratio, apply

    def propose_prune(self, rng):
        cands = self.prunable()
        if not cands:
            return None
        node = cands[rng.integers(len(cands))]
        ll_merged = self._leaf_ll(node.rows)
        d = node.depth
        delta = (
            ll_merged - node.left.loglik - node.right.loglik
            - node.log_rule
            - log_p_split(d, self.prior) + _log_1m_p_split(d, self.prior)
            - 2.0 * _log_1m_p_split(d + 1, self.prior)
        )

        # Reverse move regrows exactly this rule at the merged leaf.
        avail = self.avail(node)
        vals = self.uniq(node, node.feature)
        n_leaves_new = len(self.leaves()) - 1
        log_q_fwd = -math.log(len(cands))
        log_q_rev = -math.log(n_leaves_new) - math.log(len(avail)) - math.log(len(vals))
        log_ratio = (math.log(self.move_probs[0]) + log_q_rev) - \
                    (math.log(self.move_probs[1]) + log_q_fwd)

        def apply():
            node.feature = None
            node.threshold = None
            node.left = None
            node.right = None
            node.log_rule = 0.0
            node.loglik = ll_merged
            self.log_post += delta
            self.invalidate()

        return delta, log_ratio, apply

    def propose_change(self, rng):
        internals = self.internals()
        if not internals:
            return None
        node = internals[rng.integers(len(internals))]
        avail = self.avail(node)
        counts = [self.uniq(node, j).shape[0] for j in avail]
        # Uniform over all candidate (feature, value) pairs: symmetric since
        # the node's row set is unchanged by the move.
        pick = int(rng.integers(sum(counts)))
        for j, c in zip(avail, counts):
            if pick < c:
                t = float(self.uniq(node, j)[pick])
                break
            pick -= c
        rebuilt = self._rebuild(node, node.rows, {id(node): (j, t)})
        if rebuilt is None:
            return None
        delta = self._subtree_score(rebuilt) - self._subtree_score(node)

        def apply():
            self._splice(node, rebuilt)
            self.log_post += delta
            self.invalidate()

        return delta, 0.0, apply

    def propose_swap(self, rng):
        pairs = [(p, c) for p in self.internals()
                 for c in (p.left, p.right) if not c.is_leaf]
        if not pairs:
            return None
        parent, child = pairs[rng.integers(len(pairs))]
        override = {
            id(parent): (child.feature, child.threshold),
            id(child): (parent.feature, parent.threshold),
        }
        rebuilt = self._rebuild(parent, parent.rows, override)
        if rebuilt is None:
            return None
        delta = self._subtree_score(rebuilt) - self._subtree_score(parent)

        def apply():
            self._splice(parent, rebuilt)
            self.log_post += delta
            self.invalidate()

        return delta, 0.0, apply

    # -- subtree machinery for change/swap --------------------------------

    def _rebuild(self, old: _Node, rows: np.ndarray, override: dict):
        """Mirror the subtree at ``old`` with re-routed rows (and possibly
        overridden rules); None when a child empties or a descendant rule
        loses validity."""
        node = _Node(old.depth, rows)
        if old.is_leaf:
            node.loglik = self._leaf_ll(rows)
            return node
        feat, thr = override.get(id(old), (old.feature, old.threshold))
        col = self.x[rows, feat]
        vals = self.uniq(node, feat)
        if not np.any(vals == thr):
            return None
        go_left = col <= thr
        if go_left.all() or not go_left.any():
            return None
        avail = self.avail(node)
        if feat not in avail:
            return None
        node.feature = feat
        node.threshold = thr
        node.log_rule = -math.log(len(avail)) - math.log(len(vals))
        node.left = self._rebuild(old.left, rows[go_left], override)
        if node.left is None:
            return None
        node.left.parent = node
        node.right = self._rebuild(old.right, rows[~go_left], override)
        if node.right is None:
            return None
        node.right.parent = node
        return node

    def _subtree_score(self, node: _Node) -> float:
        """Leaf logliks plus rule priors of a subtree. Depth-split terms
        cancel between old and new subtrees of identical shape."""
        total, stack = 0.0, [node]
        while stack:
            cur = stack.pop()
            if cur.is_leaf:
                total += cur.loglik
            else:
                total += cur.log_rule
                stack.extend((cur.right, cur.left))
        return total

    def _splice(self, old: _Node, new: _Node) -> None:
        old.feature = new.feature
        old.threshold = new.threshold
        old.log_rule = new.log_rule
        old.loglik = new.loglik
        old.left = new.left
        old.right = new.right
        for child in (old.left, old.right):
            if child is not None:
                child.parent = old

    def propose(self, rng) -> tuple[str, tuple | None]:
        u = rng.random()
        idx = int(np.searchsorted(self.move_cum, u, side="right"))
        idx = min(idx, 3)
        move = self.MOVES[idx]
        return move, getattr(self, f"propose_{move}")(rng)

    # -- snapshots ---------------------------------------------------------

    def snapshot(self, rng=None) -> RegressionTree:
        """Public copy of the current tree. With an rng, leaf (mu, sigma^2)
        are drawn from their conjugate posteriors; otherwise leaves carry
        posterior means."""

        def convert(node: _Node) -> TreeNode:
            out = TreeNode(depth=node.depth, mean=0.0, count=node.rows.shape[0])
            if node.is_leaf:
                mu_post, a_post, nu_post, lam_post = _leaf_posterior(
                    self.y[node.rows], self.leaf)
                if rng is None:
                    out.mean = mu_post
                    out.sigma2 = lam_post / (nu_post - 1.0) if nu_post > 1 else math.nan
                else:
                    sigma2 = 1.0 / rng.gamma(shape=nu_post, scale=1.0 / lam_post)
                    out.mean = float(rng.normal(mu_post, math.sqrt(sigma2 / a_post)))
                    out.sigma2 = float(sigma2)
            else:
                out.feature = node.feature
                out.threshold = node.threshold
                out.left = convert(node.left)
                out.right = convert(node.right)
                # internal mean: child rollup, kept for rendering only
                out.mean = (out.left.mean * out.left.count
                            + out.right.mean * out.right.count) / out.count
            return out

        return RegressionTree(root=convert(self.root), n_features=self.x.shape[1])

    @classmethod
    def from_tree(cls, tree: RegressionTree, train: Dataset,
                  tree_prior: TreePrior, leaf_prior: LeafPrior,
                  move_probs=(0.4, 0.4, 0.1, 0.1)) -> "_Chain":
        """Rebuild sampler state from a public tree (validates it)."""
        chain = cls(train, tree_prior, leaf_prior, move_probs)

        def build(pub: TreeNode, rows: np.ndarray, depth: int, parent) -> _Node:
            node = _Node(depth, rows, parent)
            if pub.is_leaf:
                if rows.shape[0] == 0:
                    raise InvalidTreeError("tree routes no training rows to a leaf")
                node.loglik = chain._leaf_ll(rows)
                return node
            node.feature = pub.feature
            node.threshold = pub.threshold
            node.log_rule = _rule_log_prior(chain.x, rows, pub.feature, pub.threshold)
            col = chain.x[rows, pub.feature]
            go_left = col <= pub.threshold
            node.left = build(pub.left, rows[go_left], depth + 1, node)
            node.right = build(pub.right, rows[~go_left], depth + 1, node)
            return node

        chain.root = build(tree.root, np.arange(chain.x.shape[0]), 0, None)
        chain.invalidate()
        chain.recompute_log_post()
        return chain


def propose(state: ChainState, train: Dataset, rng: np.random.Generator,
            tree_prior: TreePrior | None = None,
            leaf_prior: LeafPrior | None = None,
            move_probs=(0.4, 0.4, 0.1, 0.1)) -> Proposal:
    """Draw one move from the current state.

    Infeasible draws return the unchanged tree with ratio 0 (an automatic
    reject for the caller to count).
    """
    tree_prior = tree_prior or TreePrior()
    leaf_prior = leaf_prior or LeafPrior.from_data(train.response)
    chain = _Chain.from_tree(state.tree, train, tree_prior, leaf_prior, move_probs)
    move, result = chain.propose(rng)
    if result is None:
        return Proposal(tree=state.tree, log_ratio=0.0, move=move, feasible=False)
    _, log_ratio, apply = result
    apply()
    return Proposal(tree=chain.snapshot(), log_ratio=log_ratio, move=move,
                    feasible=True)


def run_chain(train: Dataset, tree_prior: TreePrior, leaf_prior: LeafPrior,
              iterations: int, burn_in: int, seed: int, *,
              thinning: int = 1,
              move_probs=(0.4, 0.4, 0.1, 0.1),
              trace_path: str | None = None) -> ChainResult:
    """Metropolis-Hastings search over tree structures.

    Returns post-burn-in samples (every ``thinning``-th state, with leaf
    parameters drawn from their conjugate posteriors) and the
    highest-log-posterior tree visited (with posterior-mean leaves).
    Deterministic given the seed.
    """
    if not iterations > burn_in >= 0:
        raise ValueError("need iterations > burn_in >= 0")
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    chain = _Chain(train, tree_prior, leaf_prior, move_probs)
    rng_moves = np.random.default_rng(derive_seed(seed, "moves"))
    rng_leaf = np.random.default_rng(derive_seed(seed, "leaves"))

    best = chain.snapshot()
    best_lp = chain.log_post
    samples: list[RegressionTree] = []
    accepted = 0
    move_counts = {m: 0 for m in _Chain.MOVES}
    trace_rows = [] if trace_path else None

    for it in range(1, iterations + 1):
        move, result = chain.propose(rng_moves)
        move_counts[move] += 1
        ok = False
        if result is not None:
            delta, log_ratio, apply = result
            log_alpha = delta + log_ratio
            if log_alpha >= 0 or rng_moves.random() < math.exp(log_alpha):
                apply()
                accepted += 1
                ok = True
                if chain.log_post > best_lp:
                    best_lp = chain.log_post
                    best = chain.snapshot()
        if it % 5000 == 0:
            chain.recompute_log_post()  # resync float drift
        if it > burn_in and (it - burn_in - 1) % thinning == 0:
            samples.append(chain.snapshot(rng_leaf))
        if trace_rows is not None:
            trace_rows.append((it, chain.log_post, len(chain.leaves()), int(ok)))

    if trace_path:
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "log_posterior", "n_leaves", "accepted"])
            w.writerows(trace_rows)

    return ChainResult(
        samples=samples, best=best, best_log_posterior=best_lp,
        acceptance_rate=accepted / iterations, move_counts=move_counts,
    )


def predict_bcart(trees: RegressionTree | list[RegressionTree],
                  x: np.ndarray) -> float:
    """Prediction from the best tree (posterior-mean leaves); a list of
    sampled trees is averaged instead."""
    if isinstance(trees, RegressionTree):
        return predict_tree(trees, x)
    if not trees:
        raise ValueError("no trees to predict from")
    return float(np.mean([predict_tree(t, x) for t in trees]))


def inclusion_proportions(samples: list[RegressionTree], d: int) -> np.ndarray:
    """Per-feature split proportions within each sample, averaged over
    samples; single-leaf samples contribute zero vectors."""
    if not samples:
        raise ValueError("need at least one sample")
    total = np.zeros(d)
    for tree in samples:
        if tree.n_features != d:
            raise ValueError(f"sample has d={tree.n_features}, expected {d}")
        counts = np.zeros(d)
        for node in tree.internal_nodes():
            counts[node.feature] += 1
        n_splits = counts.sum()
        if n_splits > 0:
            total += counts / n_splits
    return total / len(samples)


def null_inclusion_thresholds(train: Dataset, config: ChainConfig,
                              permutations: int, level: float,
                              seed: int) -> np.ndarray:
    """Per-feature (1-level) empirical quantiles of inclusion proportions
    under response permutation. Replicates use derived seeds, so results
    are identical regardless of execution order."""
    if permutations < 1:
        raise ValueError("permutations must be >= 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    nulls = np.empty((permutations, train.d))
    for r in range(permutations):
        perm = np.random.default_rng(derive_seed(seed, "perm", r)).permutation(train.n)
        shuffled = replace(train, response=train.response[perm])
        res = run_chain(
            shuffled, config.tree_prior,
            LeafPrior.from_data(shuffled.response, nu=config.nu, a=config.a),
            config.iterations, config.burn_in, derive_seed(seed, "chain", r),
            thinning=config.thinning, move_probs=config.move_probs,
        )
        nulls[r] = inclusion_proportions(res.samples, train.d)
    return np.quantile(nulls, 1.0 - level, axis=0, method="higher")


def local_threshold_select(train: Dataset, config: ChainConfig,
                           permutations: int = 50, level: float = 0.05,
                           seed: int = 0) -> tuple[int, ...]:
    """Permutation-null feature selection on inclusion proportions.

    Feature j is kept iff its real-data proportion exceeds the (1-level)
    empirical quantile of its own null proportions, built from chains run
    on response-permuted copies of the data. Deterministic given the seed.
    An empty selection is a valid outcome.
    """
    leaf_prior = LeafPrior.from_data(train.response, nu=config.nu, a=config.a)
    real = run_chain(
        train, config.tree_prior, leaf_prior,
        config.iterations, config.burn_in, derive_seed(seed, "real"),
        thinning=config.thinning, move_probs=config.move_probs,
    )
    p_real = inclusion_proportions(real.samples, train.d)
    thresholds = null_inclusion_thresholds(train, config, permutations, level, seed)
    return tuple(int(j) for j in range(train.d) if p_real[j] > thresholds[j])
