"""Bayesian neural tree regression models and their benchmark harness.

Constituents: a greedy least-squares regression tree, a Bayesian tree
sampler with conjugate leaves, a single-hidden-layer network, and its
regularized (MAP) variant. The two hybrids feed tree-selected features
plus the tree output into a network stage.
"""

from .bcart import (
    ChainConfig,
    ChainResult,
    ChainState,
    LeafPrior,
    TreePrior,
    inclusion_proportions,
    local_threshold_select,
    log_marginal_likelihood,
    log_p_split,
    log_posterior,
    log_tree_prior,
    predict_bcart,
    propose,
    run_chain,
)
from .bnn import BnnHyper, BnnModel, GeometricPrior, bnn_objective, predict_bnn, select_k_geometric, train_bnn_fixed_k
from .cart import (
    RegressionTree,
    SplitRule,
    TreeNode,
    best_split,
    fit_cart,
    predict_tree,
    predict_tree_batch,
    render_tree,
    used_features,
)
from .data import (
    DataError,
    Dataset,
    ScalingSpec,
    SplitPair,
    apply_scaler,
    clean,
    fit_scaler,
    invert_response,
    load_csv,
    shuffle_split,
)
from .experiment import ExperimentConfig, ResultRow, emit_report, parse_config, run_experiment
from .metrics import MetricsReport, compute_metrics
from .mlp import Mlp, TrainConfig, forward, forward_batch, gradient, optimal_hidden_neurons, train_ann
from .pipelines import AugmentedFeatureSpec, BntModel, SelectionConfig, fit_bnt1, fit_bnt2, predict_bnt, predict_bnt_batch

__version__ = "0.1.0"
