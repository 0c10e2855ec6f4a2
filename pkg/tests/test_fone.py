import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from disfone.data import generate_problem
from disfone.design import DesignSpec
from disfone.fone import (
    FoneConfig,
    FoneDivergenceError,
    estimate_limiting_variance,
    estimate_sigma_inv_w,
    fone_batches,
    run_fone,
)
from disfone.models import Dataset, LossModel


def _quad(p=20, n=2000, seed=0, cov="toeplitz"):
    pr = generate_problem("quadratic", DesignSpec(p, cov, 0.3), n, seed=seed)
    return pr, pr.dataset


def test_config_validation():
    for kw in ({"eta": 0, "m": 1, "T": 1}, {"eta": 1, "m": 0, "T": 1}, {"eta": 1, "m": 1, "T": 0}):
        with pytest.raises(ValueError):
            FoneConfig(**kw)
    with pytest.raises(ValueError):
        fone_batches(5, 6, 2, 0)


def test_batches_distinct_within_iteration():
    b = fone_batches(50, 20, 30, 3)
    assert b.shape == (30, 20)
    assert all(np.unique(row).size == 20 for row in b)
    assert not np.array_equal(b[0], b[1])


@pytest.mark.parametrize("kind", ["logistic", "quantile", "quadratic"])
def test_zero_a_is_fixpoint(kind):
    pr = generate_problem(kind, DesignSpec(4), 300, tau=0.4 if kind == "quantile" else None, seed=1)
    theta0 = np.array([0.3, -0.2, 0.1, 0.5])
    out = run_fone(pr.model, pr.dataset, theta0, np.zeros(4), FoneConfig(0.7, 50, 40, seed=9))
    np.testing.assert_array_equal(out.z_T, theta0)
    np.testing.assert_array_equal(out.theta_fone, np.zeros(4))


def test_output_identity_exact():
    pr, data = _quad(5, 400)
    theta0 = np.array([0.1, 1e-3, -7.0, 2.5, 1e5])
    out = run_fone(LossModel.quadratic(), data, theta0, np.full(5, 0.3), FoneConfig(0.05, 40, 25, 1))
    np.testing.assert_array_equal(out.theta_fone, theta0 - out.z_T)


def test_full_batch_quadratic_equals_direct_solve():
    _, data = _quad()
    rng = np.random.default_rng(1)
    a = rng.standard_normal(20)
    theta0 = rng.standard_normal(20)
    out = run_fone(LossModel.quadratic(), data, theta0, a, FoneConfig(0.1, data.n, 500, seed=0))
    sigma_hat = data.X.T @ data.X / data.n
    direct = np.linalg.solve(sigma_hat, a)
    assert np.linalg.norm(out.theta_fone - direct) / np.linalg.norm(direct) <= 1e-6


def test_richardson_steps_match_matrix_recursion():
    p, n, eta = 8, 300, 0.2
    _, data = _quad(p, n, seed=2)
    sigma_hat = data.X.T @ data.X / n
    rng = np.random.default_rng(3)
    a, theta0 = rng.standard_normal(p), rng.standard_normal(p)
    d = np.zeros(p)  # d_t = z_t - theta0
    for T in range(1, 31):
        d = d - eta * (sigma_hat @ d) - eta * a
        out = run_fone(LossModel.quadratic(), data, theta0, a, FoneConfig(eta, n, T, seed=0))
        assert np.abs((out.z_T - theta0) - d).max() <= 1e-12


@given(seed=st.integers(0, 2**32), scale=st.floats(-5, 5).filter(lambda s: abs(s) > 1e-3))
def test_quadratic_linearity(seed, scale):
    _, data = _quad(6, 200, seed=4)
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(6), rng.standard_normal(6)
    theta0 = rng.standard_normal(6)
    cfg = FoneConfig(0.05, 30, 60, seed=seed)
    run = lambda v: run_fone(LossModel.quadratic(), data, theta0, v, cfg).theta_fone  # noqa: E731
    fa, fb = run(a), run(b)
    np.testing.assert_allclose(run(a + b), fa + fb, rtol=0, atol=1e-10)
    np.testing.assert_allclose(run(scale * a), scale * fa, rtol=0, atol=1e-10 * max(1, abs(scale)))


def test_doubling_a_doubles_output():
    _, data = _quad(10, 500, seed=5)
    rng = np.random.default_rng(5)
    a = rng.standard_normal(10)
    cfg = FoneConfig(0.08, 50, 100, seed=7)
    one = run_fone(LossModel.quadratic(), data, np.zeros(10), a, cfg).theta_fone
    two = run_fone(LossModel.quadratic(), data, np.zeros(10), 2 * a, cfg).theta_fone
    np.testing.assert_allclose(two, 2 * one, rtol=0, atol=1e-12)


def test_divergence_reported_with_iteration():
    _, data = _quad(5, 200)
    with pytest.raises(FoneDivergenceError) as err:
        run_fone(LossModel.quadratic(), data, np.zeros(5), np.ones(5), FoneConfig(50.0, 200, 500))
    assert 1 <= err.value.iteration <= 500


def test_sigma_inv_w_quadratic_full_batch():
    _, data = _quad(10, 1000, seed=6)
    w = np.ones(10) / math.sqrt(10)
    theta0 = np.linalg.solve(data.X.T @ data.X, data.X.T @ data.y)
    est = estimate_sigma_inv_w(LossModel.quadratic(), data, theta0, w, FoneConfig(0.1, data.n, 600), tau_n=0.05)
    direct = np.linalg.solve(data.X.T @ data.X / data.n, w)
    assert np.linalg.norm(est - direct) / np.linalg.norm(direct) <= 1e-6


def test_sigma_inv_w_rejects_non_unit_w():
    _, data = _quad(4, 100)
    with pytest.raises(ValueError):
        estimate_sigma_inv_w(LossModel.quadratic(), data, np.zeros(4), np.ones(4), FoneConfig(0.1, 10, 5))
    with pytest.raises(ValueError):
        estimate_sigma_inv_w(LossModel.quadratic(), data, np.zeros(4), np.eye(4)[0], FoneConfig(0.1, 10, 5),
                             tau_n=0.0)


@pytest.mark.parametrize("kind", ["logistic", "quantile", "quadratic"])
def test_variance_plugin_equals_materialized_quadratic_form(kind):
    p = 30
    pr = generate_problem(kind, DesignSpec(p, "equicorr", 0.2), 2000, tau=0.3 if kind == "quantile" else None,
                          seed=8)
    data = pr.dataset
    rng = np.random.default_rng(8)
    theta0, v = pr.theta_star + 0.05 * rng.standard_normal(p), rng.standard_normal(p)
    G = data.X * pr.model.psi(data.y, data.X @ theta0)[:, None]
    A_hat = G.T @ G / data.n
    expected = v @ A_hat @ v
    got = estimate_limiting_variance(pr.model, data, theta0, v)
    assert got >= 0
    assert abs(got - expected) <= 1e-10 * max(1.0, abs(expected))


def test_variance_plugin_zero_gradient():
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    theta0 = np.array([1.0, 2.0])
    data = Dataset(X, X @ theta0)
    assert estimate_limiting_variance(LossModel.quadratic(), data, theta0, np.ones(2)) == 0.0


def test_variance_ratio_quadratic_large_n():
    # A = Sigma = I under unit noise and identity design, so the truth is w'w = 1
    p, n = 10, 100_000
    pr = generate_problem("quadratic", DesignSpec(p), n, seed=10)
    data = pr.dataset
    theta_hat = np.linalg.solve(data.X.T @ data.X, data.X.T @ data.y)
    w = np.ones(p) / math.sqrt(p)
    v = estimate_sigma_inv_w(pr.model, data, theta_hat, w, FoneConfig(0.5, data.n, 200))
    ratio = math.sqrt(estimate_limiting_variance(pr.model, data, theta_hat, v))
    assert 0.97 <= ratio <= 1.03
