import math

import numpy as np
import pytest

from bnt.bnn import (
    BnnHyper,
    GeometricPrior,
    bnn_gradient,
    bnn_objective,
    predict_bnn,
    select_k_geometric,
    train_bnn_fixed_k,
)
from bnt.mlp import Mlp, TrainConfig, forward, forward_batch, init_mlp, mse

from conftest import make_dataset
from test_mlp import finite_difference, unflatten


class TestObjective:
    def test_zero_everything(self):
        net = Mlp(np.zeros((1, 1)), np.zeros(1), np.zeros(1), 0.0)
        ds = make_dataset([0.0, 1.0], [0.5, 0.5])
        # residuals are (0.5 - 0.5): the zero-weight net outputs sigma(0)*0 = 0
        # so only the data term contributes here; build the exact-zero case
        ds0 = make_dataset([0.0, 1.0], [0.0, 0.0])
        assert bnn_objective(net, ds0, BnnHyper()) == pytest.approx(0.0)

    def test_pure_penalty(self):
        # perfect fit with ||theta||^2 = 3 and sigma_p = 2 -> objective 3
        net = Mlp(np.array([[1.0]]), np.array([1.0]), np.array([1.0]), 0.0)
        z = np.array([[0.5]])
        y = forward_batch(net, z)
        ds = make_dataset(z, y)
        hyper = BnnHyper(sigma_p=2.0, sigma_l=1.0)
        assert bnn_objective(net, ds, hyper) == pytest.approx(3.0, abs=1e-12)

    def test_cross_checked_by_independent_summation(self):
        rng = np.random.default_rng(0)
        net = init_mlp(2, 3, rng)
        z = rng.uniform(0, 1, (15, 2))
        y = rng.normal(0, 1, 15)
        ds = make_dataset(z, y)
        hyper = BnnHyper(sigma_p=0.7, sigma_l=1.3)
        got = bnn_objective(net, ds, hyper)
        resid_sq = math.fsum((forward(net, zi) - yi) ** 2 for zi, yi in zip(z, y))
        theta_sq = math.fsum(v**2 for v in net.flat())
        assert got == pytest.approx(0.5 * 1.3 * resid_sq + 0.5 * 0.7 * theta_sq,
                                    rel=1e-12)

    def test_bias_exclusion_flag(self):
        net = Mlp(np.zeros((1, 1)), np.array([2.0]), np.zeros(1), 3.0)
        ds = make_dataset([0.0], [net.output_bias + 0.0 * 0])
        # make residual zero: output = bias + 0*sigmoid(2) ... output_weights=0
        y = forward_batch(net, ds.features)
        ds = make_dataset([0.0], y)
        with_b = bnn_objective(net, ds, BnnHyper(sigma_p=2.0))
        without = bnn_objective(net, ds, BnnHyper(sigma_p=2.0, include_biases=False))
        assert with_b == pytest.approx(4.0 + 9.0)
        assert without == pytest.approx(0.0)


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        d, k = 2, 3
        net = init_mlp(d, k, rng)
        z = rng.uniform(0, 1, (6, d))
        y = rng.normal(0, 1, 6)
        ds = make_dataset(z, y)
        hyper = BnnHyper(sigma_p=0.5, sigma_l=2.0)
        analytic = bnn_gradient(net, z, y, hyper).flat()
        numeric = finite_difference(
            lambda th: bnn_objective(unflatten(th, d, k), ds, hyper), net.flat())
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)


class TestTrainFixedK:
    def test_huge_prior_shrinks_weights(self):
        rng = np.random.default_rng(2)
        ds = make_dataset(rng.uniform(0, 1, (30, 2)), rng.normal(0, 1, 30))
        model = train_bnn_fixed_k(ds, 2, BnnHyper(sigma_p=1e6),
                                  TrainConfig(epochs=2000, seed=0))
        assert np.linalg.norm(model.net.flat()) < 0.01

    def test_zero_sigma_p_rejected(self):
        with pytest.raises(ValueError):
            BnnHyper(sigma_p=0.0)

    def test_norm_nonincreasing_in_sigma_p(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, (50, 1))
        y = np.sin(4 * x[:, 0]) + rng.normal(0, 0.1, 50)
        ds = make_dataset(x, y)
        norms = []
        for sp in (0.01, 0.1, 1.0, 10.0):
            m = train_bnn_fixed_k(ds, 3, BnnHyper(sigma_p=sp),
                                  TrainConfig(epochs=3000, seed=4))
            norms.append(float(np.linalg.norm(m.net.flat())))
        assert all(a >= b - 1e-6 for a, b in zip(norms, norms[1:]))

    def test_objective_at_map_consistent(self):
        rng = np.random.default_rng(5)
        ds = make_dataset(rng.uniform(0, 1, (20, 2)), rng.normal(0, 1, 20))
        m = train_bnn_fixed_k(ds, 2, BnnHyper(evidence_updates=2),
                              TrainConfig(epochs=500, seed=6))
        assert m.objective_at_map == pytest.approx(
            bnn_objective(m.net, ds, m.hyper), abs=1e-10)


class TestGeometricPrior:
    def test_pmf_partial_sum_identity(self):
        for p in (0.3, 0.6, 0.9):
            prior = GeometricPrior(p=p, k_max=10)
            for K in (0, 1, 5, 20):
                total = math.fsum(math.exp(prior.log_pmf(i)) for i in range(K + 1))
                assert total == pytest.approx(1 - (1 - p) ** (K + 1), abs=1e-12)

    def test_truncated_normalizes(self):
        prior = GeometricPrior(p=0.4, k_max=7)
        total = math.fsum(math.exp(prior.log_pmf_truncated(k)) for k in range(1, 8))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            GeometricPrior(p=1.0, k_max=3)
        with pytest.raises(ValueError):
            GeometricPrior(p=0.5, k_max=0)


class TestSelectK:
    def test_k_max_one_is_degenerate(self):
        rng = np.random.default_rng(0)
        ds = make_dataset(rng.uniform(0, 1, (20, 1)), rng.normal(0, 1, 20))
        m = select_k_geometric(ds, GeometricPrior(p=0.5, k_max=1), BnnHyper(),
                               TrainConfig(epochs=200, seed=1))
        assert m.chosen_k == 1

    def test_strong_prior_picks_one_unit_for_one_unit_teacher(self):
        # fixed precisions isolate the Geometric preference for small k
        hits = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            x = rng.uniform(0, 1, 200)
            y = 1.0 / (1.0 + np.exp(-(2 * x - 1)))
            ds = make_dataset(x, y)
            m = select_k_geometric(ds, GeometricPrior(p=0.9, k_max=4),
                                   BnnHyper(sigma_p=1.0, sigma_l=1.0),
                                   TrainConfig(epochs=1500, seed=seed))
            hits += m.chosen_k == 1
        assert hits >= 8

    def test_small_p_never_chooses_smaller_k(self):
        chosen = {0.3: [], 0.9: []}
        for seed in range(10):
            rng = np.random.default_rng(200 + seed)
            x = rng.uniform(0, 1, (60, 1))
            y = np.sin(6 * x[:, 0]) + 0.5 * np.cos(11 * x[:, 0])
            ds = make_dataset(x, y)
            for p in (0.3, 0.9):
                m = select_k_geometric(ds, GeometricPrior(p=p, k_max=5),
                                       BnnHyper(sigma_p=0.01, sigma_l=20.0),
                                       TrainConfig(epochs=1500, seed=seed))
                chosen[p].append(m.chosen_k)
        assert np.mean(chosen[0.3]) >= np.mean(chosen[0.9])


class TestPredict:
    def test_zero_net_bias(self):
        net = Mlp(np.zeros((1, 2)), np.zeros(1), np.zeros(1), 0.7)
        m = _wrap(net)
        assert predict_bnn(m, np.array([0.3, 0.4])) == pytest.approx(0.7)

    def test_equals_forward(self):
        rng = np.random.default_rng(4)
        net = init_mlp(3, 2, rng)
        m = _wrap(net)
        z = rng.uniform(0, 1, 3)
        assert predict_bnn(m, z) == forward(net, z)

    def test_teacher_student_generalizes(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0, 1, 200)
        y = 1.0 / (1.0 + np.exp(-(2 * x - 1))) + rng.normal(0, 0.02, 200)
        ds = make_dataset(x, y)
        m = train_bnn_fixed_k(ds, 1, BnnHyper(evidence_updates=2),
                              TrainConfig(epochs=3000, seed=2))
        train_rmse = math.sqrt(mse(m.net, ds.features, ds.response))
        xt = rng.uniform(0, 1, 500)
        yt = 1.0 / (1.0 + np.exp(-(2 * xt - 1))) + rng.normal(0, 0.02, 500)
        test_rmse = math.sqrt(float(np.mean(
            (forward_batch(m.net, xt[:, None]) - yt) ** 2)))
        assert test_rmse < 1.5 * train_rmse


def _wrap(net):
    from bnt.bnn import BnnModel

    return BnnModel(net=net, chosen_k=net.hidden_k, hyper=BnnHyper(),
                    objective_at_map=0.0, converged=True, grad_norm=0.0)
