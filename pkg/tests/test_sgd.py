import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from disfone.data import generate_problem
from disfone.design import DesignSpec
from disfone.models import Dataset, LossModel
from disfone.sgd import (
    SgdConfig,
    SgdSchedule,
    default_batch_size,
    run_minibatch_sgd,
    sgd_batches,
    step_size,
)


def test_step_size_examples():
    assert step_size(1, 100, SgdSchedule(1.0, 1.0)) == pytest.approx(0.01)
    assert step_size(1000, 100, SgdSchedule(1.0, 1.0)) == pytest.approx(0.001)
    assert step_size(16, 3, SgdSchedule(2.0, 0.5)) == pytest.approx(0.5)


def test_schedule_validation():
    with pytest.raises(ValueError):
        SgdSchedule(0.0)
    with pytest.raises(ValueError):
        SgdSchedule(1.0, 1.5)
    with pytest.raises(ValueError):
        SgdConfig(0)


def test_default_batch_size_natural_log():
    assert default_batch_size(100, 5000) == 851
    assert default_batch_size(100, 100_000) == 1151


@given(n=st.integers(1, 500), m=st.integers(1, 60), seed=st.integers(0, 2**32))
def test_batches_disjoint_single_pass(n, m, seed):
    if m > n:
        with pytest.raises(ValueError):
            sgd_batches(n, m, seed)
        return
    b = sgd_batches(n, m, seed)
    assert b.shape == (n // m, m)
    flat = b.ravel()
    assert np.unique(flat).size == flat.size
    assert flat.min() >= 0 and flat.max() < n


def test_zero_gradient_fixpoint():
    rng = np.random.default_rng(0)
    # small integers and halves keep x'theta0 exact, so every residual is 0.0
    X = np.column_stack([np.ones(200), rng.integers(-4, 5, size=(200, 3))]).astype(float)
    theta0 = rng.integers(-6, 7, size=4) / 2.0
    data = Dataset(X, X @ theta0)
    out = run_minibatch_sgd(LossModel.quadratic(), data, theta0, SgdConfig(7, SgdSchedule(3.0)), 1)
    np.testing.assert_array_equal(out, theta0)


@pytest.mark.parametrize("alpha", [1.0, 0.6])
def test_scalar_replay(alpha):
    rng = np.random.default_rng(1)
    y = rng.standard_normal(103)
    data = Dataset(np.ones((103, 1)), y)
    sched = SgdSchedule(c0=1.5, alpha=alpha)
    m, seed, z0 = 10, 42, 0.3
    out = run_minibatch_sgd(LossModel.quadratic(), data, np.array([z0]), SgdConfig(m, sched), seed)
    z = z0
    for i, block in enumerate(sgd_batches(103, m, seed), start=1):
        z = z + step_size(i, 1, sched) * (y[block].mean() - z)
    assert out[0] == pytest.approx(z, rel=1e-13, abs=1e-15)


def test_sgd_reduces_error_from_consistent_start():
    pr = generate_problem("logistic", DesignSpec(5), 20_000, seed=3)
    theta0 = pr.theta_star + 0.3
    m = default_batch_size(5, 20_000)
    out = run_minibatch_sgd(LossModel.logistic(), pr.dataset, theta0, SgdConfig(m, SgdSchedule(20.0)), 0)
    assert np.linalg.norm(out - pr.theta_star) < np.linalg.norm(theta0 - pr.theta_star)


def test_rejects_small_data_and_bad_dims():
    data = Dataset(np.ones((5, 1)), np.zeros(5))
    with pytest.raises(ValueError):
        run_minibatch_sgd(LossModel.quadratic(), data, np.zeros(1), SgdConfig(6), 0)
    with pytest.raises(ValueError):
        run_minibatch_sgd(LossModel.quadratic(), data, np.zeros(2), SgdConfig(2), 0)
