"""Single-hidden-layer feedforward regressor trained by full-batch gradient
descent on the empirical squared-error risk.

The network is y = b0 + sum_j beta_j * logistic(a_j0 + a_j . z), with a
linear output unit. Training is deterministic given the seed and returns
the lowest-risk parameters seen, so the returned risk never exceeds the
risk at initialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit


@dataclass
class Mlp:
    """Network parameters: hidden (k, d) weights/biases, linear output."""

    hidden_weights: np.ndarray  # (k, d)
    hidden_bias: np.ndarray     # (k,)
    output_weights: np.ndarray  # (k,)
    output_bias: float

    @property
    def input_dim(self) -> int:
        return self.hidden_weights.shape[1]

    @property
    def hidden_k(self) -> int:
        return self.hidden_weights.shape[0]

    def flat(self) -> np.ndarray:
        """All parameters as one vector (reproducibility snapshots)."""
        return np.concatenate([
            self.hidden_weights.ravel(), self.hidden_bias,
            self.output_weights, [self.output_bias],
        ])

    @property
    def n_params(self) -> int:
        return self.hidden_k * (self.input_dim + 2) + 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 0.1
    seed: int = 0
    init_scale: float = 0.5

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0 or self.init_scale <= 0:
            raise ValueError("learning_rate and init_scale must be positive")


@dataclass
class MlpGradients:
    """Same shapes as :class:`Mlp`, holding partial derivatives."""

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: float

    def flat(self) -> np.ndarray:
        return np.concatenate([
            self.hidden_weights.ravel(), self.hidden_bias,
            self.output_weights, [self.output_bias],
        ])


def optimal_hidden_neurons(n: int, d_m: int) -> int:
    """Hidden-unit count sqrt(n / (d_m ln n)), rounded half-up, min 1."""
    if n < 3 or d_m < 1:
        raise ValueError("need n >= 3 and d_m >= 1")
    k = math.sqrt(n / (d_m * math.log(n)))
    return max(1, int(math.floor(k + 0.5)))


def init_mlp(d: int, k: int, rng: np.random.Generator, init_scale: float = 0.5) -> Mlp:
    """Uniform(-init_scale, init_scale) initialization of every parameter."""
    return Mlp(
        hidden_weights=rng.uniform(-init_scale, init_scale, size=(k, d)),
        hidden_bias=rng.uniform(-init_scale, init_scale, size=k),
        output_weights=rng.uniform(-init_scale, init_scale, size=k),
        output_bias=float(rng.uniform(-init_scale, init_scale)),
    )


def forward(net: Mlp, z: np.ndarray) -> float:
    """Evaluate the network on one feature vector."""
    z = np.asarray(z, dtype=float)
    if z.shape != (net.input_dim,):
        raise ValueError(f"expected {net.input_dim} inputs, got {z.shape}")
    h = expit(net.hidden_bias + net.hidden_weights @ z)
    return float(net.output_bias + net.output_weights @ h)


def forward_batch(net: Mlp, z: np.ndarray) -> np.ndarray:
    """Evaluate the network on an (n, d) matrix of inputs."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != net.input_dim:
        raise ValueError(f"expected (n, {net.input_dim}) inputs, got {z.shape}")
    h = expit(z @ net.hidden_weights.T + net.hidden_bias)
    return h @ net.output_weights + net.output_bias


def gradient(net: Mlp, z: np.ndarray, y: np.ndarray) -> MlpGradients:
    """Analytic gradient of mean((forward(z_i) - y_i)^2) over the batch."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if z.ndim != 2 or y.shape != (z.shape[0],) or z.shape[0] == 0:
        raise ValueError("batch must be a nonempty (n, d) matrix with matching y")
    n = z.shape[0]
    h = expit(z @ net.hidden_weights.T + net.hidden_bias)      # (n, k)
    resid = (h @ net.output_weights + net.output_bias) - y     # (n,)
    scale = 2.0 / n
    # dL/d(pre-activation) for each hidden unit
    du = (scale * resid)[:, None] * net.output_weights[None, :] * h * (1.0 - h)
    return MlpGradients(
        hidden_weights=du.T @ z,
        hidden_bias=du.sum(axis=0),
        output_weights=scale * (h.T @ resid),
        output_bias=float(scale * resid.sum()),
    )


def mse(net: Mlp, z: np.ndarray, y: np.ndarray) -> float:
    resid = forward_batch(net, z) - np.asarray(y, dtype=float)
    return float(np.mean(resid**2))


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; retry with a smaller learning rate."""


def canonical_order(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lexicographic row order over (features, response).

    Training sorts its batch once through this, which pins the float
    summation order and makes full-batch fits bit-for-bit invariant to
    input row permutations.
    """
    keys = (y,) + tuple(z[:, j] for j in range(z.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


def _descend(
    net: Mlp,
    z: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    loss_fn,
    grad_fn,
    grad_tol: float = 0.0,
) -> tuple[Mlp, float, float, int]:
    """Shared full-batch descent loop returning the best parameters seen.

    loss_fn(net) and grad_fn(net) define the objective; stops early once
    the gradient norm drops below grad_tol. Returns (best net, best loss,
    last gradient norm, epochs run).
    """
    best = replace(net)
    best_loss = loss_fn(net)
    if not math.isfinite(best_loss):
        raise TrainingDiverged("non-finite loss at initialization")
    gnorm = math.inf
    epoch = 0
    for epoch in range(1, cfg.epochs + 1):
        g = grad_fn(net)
        gnorm = float(np.linalg.norm(g.flat()))
        if gnorm < grad_tol:
            break
        net.hidden_weights = net.hidden_weights - cfg.learning_rate * g.hidden_weights
        net.hidden_bias = net.hidden_bias - cfg.learning_rate * g.hidden_bias
        net.output_weights = net.output_weights - cfg.learning_rate * g.output_weights
        net.output_bias = net.output_bias - cfg.learning_rate * g.output_bias
        loss = loss_fn(net)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        if loss < best_loss:
            best_loss = loss
            best = replace(
                net,
                hidden_weights=net.hidden_weights.copy(),
                hidden_bias=net.hidden_bias.copy(),
                output_weights=net.output_weights.copy(),
            )
    return best, best_loss, gnorm, epoch


def train_ann(train, k: int, cfg: TrainConfig) -> Mlp:
    """Fit by full-batch gradient descent from a seeded initialization.

    ``train`` is a Dataset whose features are expected to be scaled to
    [0, 1]. Returns the parameters with the lowest training risk seen.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    order = canonical_order(train.features, train.response)
    z, y = train.features[order], train.response[order]
    rng = np.random.default_rng(cfg.seed)
    net = init_mlp(z.shape[1], k, rng, cfg.init_scale)
    best, _, _, _ = _descend(
        net, z, y, cfg,
        loss_fn=lambda m: mse(m, z, y),
        grad_fn=lambda m: gradient(m, z, y),
    )
    return best
