"""Full-sample empirical risk minimization and the fresh-sample initial estimator."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import fresh_samples
from .models import empirical_risk, mean_subgradient

log = logging.getLogger(__name__)


@dataclass
class ErmResult:
    theta_hat: np.ndarray
    final_grad_norm: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def solve_erm(model, data, tol=1e-8, max_iter=None, step_scale=4.0, window=100):
    """Minimize the average loss over ``data`` starting from zero.

    Smooth losses use gradient descent with Armijo backtracking and stop on
    ``||mean gradient|| <= tol``. The quantile loss uses subgradient descent
    with steps ``step_scale / (lambda_max * sqrt(t))`` and a polynomially
    decaying iterate average; it stops once the averaged objective gains less
    than ``tol`` over ``window`` iterations.
    """
    if data.n == 0:
        raise ValueError("cannot minimize over an empty dataset")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if model.smooth:
        return _backtracking_gd(model, data, tol, 10_000 if max_iter is None else max_iter)
    return _averaged_subgradient(model, data, tol, 20_000 if max_iter is None else max_iter,
                                 step_scale, window)


def _backtracking_gd(model, data, tol, max_iter):
    diagnostics = {}
    if model.kind == "logistic" and np.unique(data.y).size < 2:
        diagnostics["degenerate"] = "all responses identical; the minimizer does not exist"
        log.warning("logistic ERM on degenerate data (n=%d)", data.n)
    z = np.zeros(data.p)
    fz = empirical_risk(model, z, data)
    step = 1.0
    objective = [fz]
    it = 0
    g = mean_subgradient(model, z, data)
    gnorm = float(np.linalg.norm(g))
    while gnorm > tol and it < max_iter:
        step *= 2.0
        while True:
            cand = z - step * g
            fc = empirical_risk(model, cand, data)
            if fc <= fz - 0.5 * step * gnorm**2:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if step < 1e-20:
            diagnostics["stalled"] = True
            break
        z, fz = cand, fc
        objective.append(fz)
        it += 1
        g = mean_subgradient(model, z, data)
        gnorm = float(np.linalg.norm(g))
    diagnostics["objective"] = fz
    diagnostics["objective_trace"] = objective
    return ErmResult(z, gnorm, it, gnorm <= tol, diagnostics)


def _averaged_subgradient(model, data, tol, max_iter, step_scale, window, decay=3.0):
    X = data.X
    lam = float(np.linalg.eigvalsh(X.T @ X / data.n).max())
    c = step_scale / lam
    z = np.zeros(data.p)
    avg = z.copy()
    prev = np.inf
    converged = False
    t = 0
    while t < max_iter:
        t += 1
        z = z - (c / np.sqrt(t)) * mean_subgradient(model, z, data)
        avg += (z - avg) * ((decay + 1.0) / (t + decay))
        if t % window == 0:
            cur = empirical_risk(model, avg, data)
            if t >= 2 * window and prev - cur < tol:
                converged = True
                break
            prev = cur
    resid = data.y - X @ avg
    neg = float(np.mean(resid < 0))
    slack = (data.p + 1) / data.n
    diagnostics = {
        "objective": empirical_risk(model, avg, data),
        "negative_residual_fraction": neg,
        "residual_sign_ok": abs(neg - model.tau) <= slack,
        "step_constant": c,
    }
    gnorm = float(np.linalg.norm(mean_subgradient(model, avg, data)))
    return ErmResult(avg, gnorm, t, converged, diagnostics)


def initial_estimator(model, design, problem, n0=None, seed=0, **erm_kwargs):
    """ERM on ``n0`` fresh samples (default ``10 p``) from the problem's process."""
    p = design.p
    n0 = 10 * p if n0 is None else int(n0)
    if n0 < p:
        raise ValueError(f"n0={n0} is smaller than p={p}; the fit is under-determined")
    if problem.model != model or problem.design != design:
        raise ValueError("model/design disagree with the generated problem")
    fresh = fresh_samples(problem, n0, seed)
    return solve_erm(model, fresh, **erm_kwargs).theta_hat
