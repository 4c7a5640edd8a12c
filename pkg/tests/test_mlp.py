import math

import numpy as np
import pytest

from bnt.mlp import (
    Mlp,
    TrainConfig,
    forward,
    forward_batch,
    gradient,
    init_mlp,
    mse,
    optimal_hidden_neurons,
    train_ann,
)

from conftest import make_dataset


def finite_difference(loss_of_flat, theta0, h=1e-5):
    """Central differences of a scalar loss over a flat parameter vector."""
    g = np.zeros_like(theta0)
    for i in range(theta0.size):
        up = theta0.copy()
        up[i] += h
        dn = theta0.copy()
        dn[i] -= h
        g[i] = (loss_of_flat(up) - loss_of_flat(dn)) / (2 * h)
    return g


def unflatten(theta, d, k):
    hw = theta[: k * d].reshape(k, d)
    hb = theta[k * d: k * d + k]
    ow = theta[k * d + k: k * d + 2 * k]
    ob = float(theta[-1])
    return Mlp(hidden_weights=hw, hidden_bias=hb, output_weights=ow, output_bias=ob)


class TestOptimalHiddenNeurons:
    def test_clamps_to_one(self):
        assert optimal_hidden_neurons(3, 50) == 1

    def test_reference_value(self):
        # sqrt(354 / (5 * ln 354)) = 3.47315...; frozen from a high-precision
        # evaluation (mpmath, 50 digits)
        assert optimal_hidden_neurons(354, 5) == 3

    def test_monotone_in_dimension(self):
        for n in (10, 100, 1000, 9568):
            ks = [optimal_hidden_neurons(n, d) for d in range(1, 12)]
            assert all(a >= b for a, b in zip(ks, ks[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            optimal_hidden_neurons(2, 1)


class TestForward:
    def test_zero_weights_return_bias(self):
        net = Mlp(np.zeros((3, 2)), np.zeros(3), np.zeros(3), 2.0)
        for z in ([0.0, 0.0], [5.0, -3.0]):
            assert forward(net, np.array(z)) == pytest.approx(2.0)

    def test_sigmoid_at_zero(self):
        net = Mlp(np.zeros((1, 1)), np.zeros(1), np.ones(1), 0.0)
        assert forward(net, np.array([7.0])) == pytest.approx(0.5)

    def test_sigmoid_at_one(self):
        # single unit: pre-activation = -1 + 2*1 = 1
        net = Mlp(np.array([[2.0]]), np.array([-1.0]), np.ones(1), 0.0)
        assert forward(net, np.array([1.0])) == pytest.approx(0.7310585786300049)

    def test_stable_for_huge_preactivations(self):
        net = Mlp(np.array([[1000.0], [-1000.0]]), np.zeros(2), np.ones(2), 0.0)
        out = forward(net, np.array([1.0]))
        assert math.isfinite(out)
        assert out == pytest.approx(1.0)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        net = init_mlp(3, 4, rng)
        z = rng.normal(0, 1, (10, 3))
        batch = forward_batch(net, z)
        for i in range(10):
            assert batch[i] == pytest.approx(forward(net, z[i]), rel=1e-12)

    def test_dimension_mismatch(self):
        net = Mlp(np.zeros((1, 2)), np.zeros(1), np.zeros(1), 0.0)
        with pytest.raises(ValueError):
            forward(net, np.array([1.0]))

    def test_output_bounded_by_weight_norms(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            net = init_mlp(2, 3, rng, init_scale=2.0)
            bound = abs(net.output_bias) + np.sum(np.abs(net.output_weights))
            z = rng.normal(0, 100, (50, 2))
            assert np.all(np.abs(forward_batch(net, z)) <= bound + 1e-12)


class TestGradient:
    def test_zero_residual_zero_gradient(self):
        net = Mlp(np.zeros((2, 1)), np.zeros(2), np.zeros(2), 1.5)
        z = np.array([[0.3], [0.7]])
        y = np.array([1.5, 1.5])  # the net already fits exactly
        g = gradient(net, z, y)
        assert np.allclose(g.flat(), 0.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        d, k = 2, 3
        net = init_mlp(d, k, rng)
        z = rng.uniform(0, 1, (5, d))
        y = rng.normal(0, 1, 5)
        analytic = gradient(net, z, y).flat()
        numeric = finite_difference(
            lambda th: mse(unflatten(th, d, k), z, y), net.flat())
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)

    def test_output_bias_gradient_is_twice_mean_residual(self):
        rng = np.random.default_rng(1)
        net = init_mlp(2, 2, rng)
        z = rng.uniform(0, 1, (7, 2))
        y = rng.normal(0, 1, 7)
        resid = forward_batch(net, z) - y
        g = gradient(net, z, y)
        assert g.output_bias == pytest.approx(2 * resid.mean(), rel=1e-12)


class TestTrainAnn:
    def test_learns_constant(self):
        ds = make_dataset(np.linspace(0, 1, 30), np.full(30, 0.4))
        net = train_ann(ds, k=1, cfg=TrainConfig(epochs=500, seed=0))
        assert mse(net, ds.features, ds.response) <= 1e-4

    def test_teacher_student(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, 200)
        y = 1.0 / (1.0 + np.exp(-(2 * x - 1)))  # 1-unit teacher
        ds = make_dataset(x, y)
        net = train_ann(ds, k=1, cfg=TrainConfig(epochs=5000, seed=1))
        rmse = math.sqrt(mse(net, ds.features, ds.response))
        assert rmse < 0.05

    def test_zero_epochs_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)

    def test_returned_risk_not_above_initial(self):
        rng = np.random.default_rng(9)
        ds = make_dataset(rng.uniform(0, 1, (40, 2)), rng.normal(0, 1, 40))
        cfg = TrainConfig(epochs=50, learning_rate=0.5, seed=2)
        net0 = init_mlp(2, 3, np.random.default_rng(2), cfg.init_scale)
        trained = train_ann(ds, k=3, cfg=cfg)
        assert mse(trained, ds.features, ds.response) <= \
            mse(net0, ds.features, ds.response) + 1e-12

    def test_permutation_invariance_bitwise(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 1, (25, 2))
        y = rng.normal(0, 1, 25)
        ds = make_dataset(x, y)
        perm = rng.permutation(25)
        ds_perm = make_dataset(x[perm], y[perm])
        cfg = TrainConfig(epochs=200, seed=5)
        a = train_ann(ds, k=2, cfg=cfg)
        b = train_ann(ds_perm, k=2, cfg=cfg)
        assert np.array_equal(a.flat(), b.flat())

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(8)
        ds = make_dataset(rng.uniform(0, 1, (20, 1)), rng.normal(0, 1, 20))
        cfg = TrainConfig(epochs=100, seed=3)
        assert np.array_equal(train_ann(ds, 2, cfg).flat(),
                              train_ann(ds, 2, cfg).flat())
