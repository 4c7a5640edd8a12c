"""Regularized (MAP) training of the single-hidden-layer network under a
zero-mean Gaussian weight prior and Gaussian likelihood, plus hidden-node
selection under a Geometric prior.

The objective is E = (sigma_l/2) sum_i (yhat_i - y_i)^2
+ (sigma_p/2) ||theta||^2 with all parameters (biases included by
default) in theta. Descent steps are scaled by 2/(sigma_l * n) so the
data term moves like plain mean-squared-error training at the same
learning rate; the minimizer is unchanged and evidence re-estimation of
sigma_l cannot blow up the step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .mlp import (
    Mlp,
    MlpGradients,
    TrainConfig,
    _descend,
    canonical_order,
    forward,
    forward_batch,
    gradient,
    init_mlp,
)
from .seeding import derive_seed

GRAD_TOL = 1e-3  # descent stops once the objective gradient norm drops below this
_EVIDENCE_EPS = 1e-8


@dataclass(frozen=True)
class BnnHyper:
    """Precision multipliers of the prior (sigma_p) and likelihood (sigma_l)."""

    sigma_p: float = 1.0
    sigma_l: float = 1.0
    evidence_updates: int = 0
    include_biases: bool = True

    def __post_init__(self):
        if self.sigma_p <= 0 or self.sigma_l <= 0:
            raise ValueError("sigma_p and sigma_l must be positive")
        if self.evidence_updates < 0:
            raise ValueError("evidence_updates must be >= 0")


@dataclass(frozen=True)
class GeometricPrior:
    """P(k = i) = p (1-p)^i over hidden-node counts, i >= 0."""

    p: float
    k_max: int

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must be in (0, 1)")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")

    def log_pmf(self, i: int) -> float:
        if i < 0:
            raise ValueError("support starts at 0")
        return math.log(self.p) + i * math.log1p(-self.p)

    def log_pmf_truncated(self, k: int) -> float:
        """log P(k | 1 <= k <= k_max), renormalized over the grid."""
        if not 1 <= k <= self.k_max:
            raise ValueError(f"k={k} outside 1..{self.k_max}")
        # mass of i in 1..k_max: (1-p) * (1 - (1-p)^k_max)
        log_mass = math.log1p(-self.p) + math.log1p(-((1.0 - self.p) ** self.k_max))
        return self.log_pmf(k) - log_mass


@dataclass
class BnnModel:
    net: Mlp
    chosen_k: int
    hyper: BnnHyper           # precisions in force at return (post re-estimation)
    objective_at_map: float
    converged: bool
    grad_norm: float


def _theta_sq(net: Mlp, include_biases: bool) -> float:
    s = float(np.sum(net.hidden_weights**2)) + float(np.sum(net.output_weights**2))
    if include_biases:
        s += float(np.sum(net.hidden_bias**2)) + net.output_bias**2
    return s


def bnn_objective(net: Mlp, train, hyper: BnnHyper) -> float:
    """E = (sigma_l/2) * sum of squared residuals + (sigma_p/2) * ||theta||^2."""
    resid = forward_batch(net, train.features) - train.response
    return 0.5 * hyper.sigma_l * float(np.sum(resid**2)) + \
        0.5 * hyper.sigma_p * _theta_sq(net, hyper.include_biases)


def bnn_gradient(net: Mlp, z: np.ndarray, y: np.ndarray, hyper: BnnHyper) -> MlpGradients:
    """Exact gradient of the regularized objective."""
    n = z.shape[0]
    g = gradient(net, z, y)                       # gradient of mean squared error
    data_scale = 0.5 * hyper.sigma_l * n          # sum-form residual term
    sp = hyper.sigma_p
    bias_sp = sp if hyper.include_biases else 0.0
    return MlpGradients(
        hidden_weights=data_scale * g.hidden_weights + sp * net.hidden_weights,
        hidden_bias=data_scale * g.hidden_bias + bias_sp * net.hidden_bias,
        output_weights=data_scale * g.output_weights + sp * net.output_weights,
        output_bias=data_scale * g.output_bias + bias_sp * net.output_bias,
    )


def _reestimate(net: Mlp, z: np.ndarray, y: np.ndarray, hyper: BnnHyper) -> BnnHyper:
    # MacKay-style point updates of the two precisions.
    resid = forward_batch(net, z) - y
    rss = float(np.sum(resid**2))
    sigma_l = z.shape[0] / (2.0 * rss + _EVIDENCE_EPS)
    sigma_p = net.n_params / (_theta_sq(net, hyper.include_biases) + _EVIDENCE_EPS)
    return replace(hyper, sigma_l=sigma_l, sigma_p=sigma_p)


def train_bnn_fixed_k(train, k: int, hyper: BnnHyper, cfg: TrainConfig) -> BnnModel:
    """MAP fit at a fixed hidden-node count.

    Runs ``hyper.evidence_updates`` rounds of alternating minimization and
    precision re-estimation after the initial fit; each round descends
    until the gradient norm falls below GRAD_TOL or epochs run out.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    order = canonical_order(train.features, train.response)
    z, y = train.features[order], train.response[order]
    n = z.shape[0]
    rng = np.random.default_rng(cfg.seed)
    net = init_mlp(z.shape[1], k, rng, cfg.init_scale)

    current = hyper
    best = net
    for round_idx in range(hyper.evidence_updates + 1):
        # Normalize the step by the objective's scale (data curvature
        # ~ sigma_l*n/2, prior curvature ~ sigma_p) so descent behaves
        # like plain MSE training at this learning rate regardless of
        # the current precisions.
        step = cfg.learning_rate * 2.0 / (current.sigma_l * n + 2.0 * current.sigma_p)
        round_cfg = replace(cfg, learning_rate=step)
        hy = current
        best, _, _, _ = _descend(
            net, z, y, round_cfg,
            loss_fn=lambda m: _objective_arrays(m, z, y, hy),
            grad_fn=lambda m: bnn_gradient(m, z, y, hy),
            grad_tol=GRAD_TOL,
        )
        net = best
        if round_idx < hyper.evidence_updates:
            current = _reestimate(net, z, y, current)

    obj = _objective_arrays(net, z, y, current)
    true_gnorm = float(np.linalg.norm(bnn_gradient(net, z, y, current).flat()))
    return BnnModel(
        net=net, chosen_k=k, hyper=current, objective_at_map=obj,
        converged=true_gnorm < GRAD_TOL, grad_norm=true_gnorm,
    )


def _objective_arrays(net: Mlp, z: np.ndarray, y: np.ndarray, hyper: BnnHyper) -> float:
    resid = forward_batch(net, z) - y
    return 0.5 * hyper.sigma_l * float(np.sum(resid**2)) + \
        0.5 * hyper.sigma_p * _theta_sq(net, hyper.include_biases)


def select_k_geometric(train, prior: GeometricPrior, hyper: BnnHyper,
                       cfg: TrainConfig) -> BnnModel:
    """Grid-search k in 1..k_max, scoring log prior(k) minus MAP objective.

    Ties break to the smaller k. Each k trains with a derived seed so the
    grid can be evaluated in any order.
    """
    best_model: BnnModel | None = None
    best_score = -math.inf
    for k in range(1, prior.k_max + 1):
        k_cfg = replace(cfg, seed=derive_seed(cfg.seed, "k", k))
        model = train_bnn_fixed_k(train, k, hyper, k_cfg)
        score = prior.log_pmf_truncated(k) - model.objective_at_map
        if score > best_score:
            best_score = score
            best_model = model
    return best_model


def predict_bnn(model: BnnModel, z: np.ndarray) -> float:
    """MAP plug-in prediction: the network forward pass."""
    return forward(model.net, z)
