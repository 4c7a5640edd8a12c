"""Two-stage hybrid models: a tree stage that selects features and emits
fitted values, and a network stage trained on the selected features plus
the (rescaled) tree output.

Variant 1 pairs the greedy tree with the regularized network whose hidden
count is chosen under a Geometric prior; variant 2 pairs the Bayesian tree
search (features via permutation-null thresholding of inclusion
proportions) with a plain network sized by the sqrt(n/(d_m ln n)) rule.
Predictions take original-unit inputs and return original-unit outputs;
all scaling happens inside the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bcart
from .bnn import BnnHyper, BnnModel, GeometricPrior, select_k_geometric
from .cart import RegressionTree, fit_cart, predict_tree_batch, used_features
from .data import Dataset, ScalingSpec, invert_response, scale_features
from .mlp import Mlp, TrainConfig, forward_batch, optimal_hidden_neurons, train_ann
from .seeding import derive_seed


@dataclass(frozen=True)
class AugmentedFeatureSpec:
    """Stage-2 input layout: selected original features (ascending), then
    the tree-output column rescaled by its training range."""

    selected: tuple[int, ...]
    tree_output_min: float
    tree_output_max: float

    @property
    def d_m(self) -> int:
        return len(self.selected) + 1


@dataclass(frozen=True)
class SelectionConfig:
    """BCART feature-selection settings for the variant-2 pipeline."""

    chain: bcart.ChainConfig = bcart.ChainConfig()
    permutations: int = 50
    level: float = 0.05


@dataclass
class BntModel:
    variant: str                      # "bnt1" | "bnt2"
    tree: RegressionTree
    feature_spec: AugmentedFeatureSpec
    stage2: Mlp | BnnModel
    scaler: ScalingSpec
    hidden_k: int
    stage2_objective: float | None = None

    @property
    def d_m(self) -> int:
        return self.feature_spec.d_m


def _scale_tree_output(t: np.ndarray, spec: AugmentedFeatureSpec) -> np.ndarray:
    span = spec.tree_output_max - spec.tree_output_min
    if span <= 0:
        return np.zeros_like(t)
    return (t - spec.tree_output_min) / span


def _augment(features_scaled: np.ndarray, tree: RegressionTree,
             spec: AugmentedFeatureSpec) -> np.ndarray:
    t = predict_tree_batch(tree, features_scaled)
    cols = [features_scaled[:, list(spec.selected)], _scale_tree_output(t, spec)[:, None]]
    return np.hstack(cols)


def _augmented_dataset(train: Dataset, tree: RegressionTree,
                       selected: tuple[int, ...]) -> tuple[Dataset, AugmentedFeatureSpec]:
    t = predict_tree_batch(tree, train.features)
    spec = AugmentedFeatureSpec(
        selected=selected,
        tree_output_min=float(t.min()),
        tree_output_max=float(t.max()),
    )
    names = tuple(train.feature_names[j] for j in selected) + ("tree_output",)
    feats = np.hstack([
        train.features[:, list(selected)],
        _scale_tree_output(t, spec)[:, None],
    ])
    return Dataset(feature_names=names, features=feats,
                   response=train.response, response_name=train.response_name), spec


def _default_k_max(n: int, d_m: int) -> int:
    if n < 3:
        return 3
    return 2 * optimal_hidden_neurons(n, d_m) + 3


def fit_bnt1(train: Dataset, scaler: ScalingSpec, minsplit: int, geo_p: float,
             hyper: BnnHyper, cfg: TrainConfig) -> BntModel:
    """Greedy tree for feature selection, regularized network on top.

    ``train`` must already be cleaned and scaled by ``scaler``. If the tree
    is a single leaf it selects nothing and the network falls back to all
    original features plus the tree output.
    """
    tree = fit_cart(train, minsplit)
    selected = used_features(tree)
    if not selected:
        selected = tuple(range(train.d))  # fallback: single-leaf stage 1
    aug, spec = _augmented_dataset(train, tree, selected)
    prior = GeometricPrior(p=geo_p, k_max=_default_k_max(train.n, spec.d_m))
    stage2 = select_k_geometric(aug, prior, hyper, cfg)
    return BntModel(
        variant="bnt1", tree=tree, feature_spec=spec, stage2=stage2,
        scaler=scaler, hidden_k=stage2.chosen_k,
        stage2_objective=stage2.objective_at_map,
    )


def fit_bnt2(train: Dataset, scaler: ScalingSpec,
             selection: SelectionConfig | None = None,
             cfg: TrainConfig | None = None) -> BntModel:
    """Posterior tree search for feature selection, plain network on top.

    Runs one chain on the real data (its best tree provides the stage-1
    output), thresholds inclusion proportions against permutation nulls,
    and sizes the network by the sqrt(n/(d_m ln n)) rule.
    """
    selection = selection or SelectionConfig()
    cfg = cfg or TrainConfig()
    chain_cfg = selection.chain
    leaf_prior = bcart.LeafPrior.from_data(train.response, nu=chain_cfg.nu,
                                           a=chain_cfg.a)
    sel_seed = derive_seed(cfg.seed, "select")
    real = bcart.run_chain(
        train, chain_cfg.tree_prior, leaf_prior,
        chain_cfg.iterations, chain_cfg.burn_in, derive_seed(sel_seed, "real"),
        thinning=chain_cfg.thinning, move_probs=chain_cfg.move_probs,
    )
    p_real = bcart.inclusion_proportions(real.samples, train.d)
    thresholds = bcart.null_inclusion_thresholds(
        train, chain_cfg, selection.permutations, selection.level, sel_seed,
    )
    selected = tuple(int(j) for j in range(train.d) if p_real[j] > thresholds[j])
    if not selected:
        selected = tuple(range(train.d))  # fallback: nothing survived the null

    aug, spec = _augmented_dataset(train, real.best, selected)
    k = optimal_hidden_neurons(max(train.n, 3), spec.d_m)
    stage2 = train_ann(aug, k, cfg)
    return BntModel(
        variant="bnt2", tree=real.best, feature_spec=spec, stage2=stage2,
        scaler=scaler, hidden_k=k, stage2_objective=None,
    )


def _stage2_forward(stage2: Mlp | BnnModel, aug: np.ndarray) -> np.ndarray:
    net = stage2.net if isinstance(stage2, BnnModel) else stage2
    return forward_batch(net, aug)


def predict_bnt_batch(model: BntModel, x: np.ndarray) -> np.ndarray:
    """Predict original-unit responses for an (n, d) original-unit matrix."""
    z = scale_features(np.asarray(x, dtype=float), model.scaler)
    aug = _augment(z, model.tree, model.feature_spec)
    return invert_response(model.scaler, _stage2_forward(model.stage2, aug))


def predict_bnt(model: BntModel, x: np.ndarray) -> float:
    """Single-vector convenience wrapper over :func:`predict_bnt_batch`."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict_bnt takes one original-unit feature vector")
    return float(predict_bnt_batch(model, x[None, :])[0])


def summarize_model(model: BntModel, feature_names: tuple[str, ...]) -> str:
    """Structured text summary consumed by the experiment reports."""
    names = [feature_names[j] for j in model.feature_spec.selected]
    lines = [
        f"variant: {model.variant}",
        f"selected_features ({len(names)}): {', '.join(names) if names else '(none)'}",
        f"d_m: {model.d_m}",
        f"hidden_k: {model.hidden_k}",
    ]
    if model.stage2_objective is not None:
        lines.append(f"stage2_objective: {model.stage2_objective:.6g}")
    return "\n".join(lines)
