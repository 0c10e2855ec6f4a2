import numpy as np
import pytest

from disfone.data import generate_problem
from disfone.design import DesignSpec
from disfone.erm import initial_estimator, solve_erm
from disfone.models import Dataset, LossModel, mean_subgradient


def test_intercept_only_quadratic_is_mean():
    data = Dataset(np.ones((3, 1)), np.array([1.0, 2.0, 3.0]))
    res = solve_erm(LossModel.quadratic(), data)
    assert res.converged
    assert res.theta_hat[0] == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("p", [5, 20, 50])
def test_quadratic_matches_normal_equations(p):
    pr = generate_problem("quadratic", DesignSpec(p, "toeplitz", 0.5), 4000, seed=p)
    X, y = pr.dataset.X, pr.dataset.y
    direct = np.linalg.solve(X.T @ X, X.T @ y)
    res = solve_erm(LossModel.quadratic(), pr.dataset)
    assert res.converged and res.final_grad_norm <= 1e-8
    assert np.linalg.norm(res.theta_hat - direct) <= 1e-6


def test_logistic_first_order_condition_and_monotone_objective():
    pr = generate_problem("logistic", DesignSpec(10), 5000, seed=1)
    m = LossModel.logistic()
    res = solve_erm(m, pr.dataset)
    assert res.converged
    assert np.linalg.norm(mean_subgradient(m, res.theta_hat, pr.dataset)) <= 1e-8
    trace = res.diagnostics["objective_trace"]
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    again = solve_erm(m, pr.dataset)
    np.testing.assert_array_equal(res.theta_hat, again.theta_hat)


def test_logistic_degenerate_is_flagged():
    data = Dataset(np.column_stack([np.ones(20), np.linspace(-1, 1, 20)]), np.ones(20))
    res = solve_erm(LossModel.logistic(), data, max_iter=50)
    assert "degenerate" in res.diagnostics
    assert np.all(np.isfinite(res.theta_hat))


def test_quantile_intercept_only_is_empirical_percentile():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(100_000)
    data = Dataset(np.ones((y.size, 1)), y)
    res = solve_erm(LossModel.quantile(0.25), data)
    assert abs(res.theta_hat[0] - np.quantile(y, 0.25)) < 1e-3
    assert res.diagnostics["residual_sign_ok"]


def test_quantile_residual_sign_postcondition():
    pr = generate_problem("quantile", DesignSpec(10), 20_000, tau=0.25, seed=4)
    res = solve_erm(LossModel.quantile(0.25), pr.dataset)
    assert res.converged
    neg = res.diagnostics["negative_residual_fraction"]
    assert abs(neg - 0.25) <= (10 + 1) / 20_000
    assert np.linalg.norm(res.theta_hat - pr.theta_star) < 0.1


def test_solver_argument_checks():
    with pytest.raises(ValueError):
        solve_erm(LossModel.quadratic(), Dataset(np.ones((0, 1)), np.ones(0)))
    with pytest.raises(ValueError):
        solve_erm(LossModel.quadratic(), Dataset(np.ones((2, 1)), np.ones(2)), tol=0)


def test_initial_estimator():
    d = DesignSpec(5)
    m = LossModel.quadratic()
    pr = generate_problem(m, d, 10, seed=0)
    theta0 = initial_estimator(m, d, pr, n0=10**6, seed=1)
    assert np.linalg.norm(theta0 - pr.theta_star) < 0.02
    with pytest.raises(ValueError):
        initial_estimator(m, d, pr, n0=4)
    np.testing.assert_array_equal(theta0, initial_estimator(m, d, pr, n0=10**6, seed=1))
