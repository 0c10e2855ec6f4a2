"""First-order Newton-type estimation of Sigma^{-1} a and limiting-variance plug-ins."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

GUARD_FACTOR = 1e6


class FoneDivergenceError(RuntimeError):
    """The iterate left the guard ball; usually the step size is too large."""

    def __init__(self, iteration, round_index=None):
        self.iteration = iteration
        self.round_index = round_index
        where = f"iteration {iteration}"
        if round_index is not None:
            where = f"round {round_index}, " + where
        super().__init__(f"FONE iterate diverged at {where}")


@dataclass(frozen=True)
class FoneConfig:
    eta: float
    m: int
    T: int
    seed: int = 0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")


@dataclass
class FoneOutput:
    z_T: np.ndarray
    theta_fone: np.ndarray


def fone_batches(n, m, T, seed):
    """T batches of m distinct indices each; batches are drawn independently."""
    if m > n:
        raise ValueError(f"batch size {m} exceeds the sample size {n}")
    rng = np.random.default_rng(seed)
    out = np.empty((T, m), dtype=np.int64)
    for t in range(T):
        out[t] = rng.choice(n, size=m, replace=False)
    return out


def fone_iterations(model, data, z0, a, eta, batches):
    """Run the recursion z_t = z_{t-1} - eta (g_B(z_{t-1}) - g_B(z_0) + a); return z_T."""
    z0 = np.ascontiguousarray(z0, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    guard = GUARD_FACTOR * (1.0 + float(np.linalg.norm(a)))
    z, failed_at = _kernels.fone_loop(
        model.code, model.tau_value, data.X, data.y, batches, z0, a, float(eta), guard
    )
    if failed_at:
        raise FoneDivergenceError(failed_at)
    return z


def run_fone(model, data, theta0, a, config):
    theta0 = np.asarray(theta0, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if theta0.shape != (data.p,) or a.shape != (data.p,):
        raise ValueError(f"theta0 {theta0.shape} and a {a.shape} must both have length {data.p}")
    batches = fone_batches(data.n, config.m, config.T, config.seed)
    z_T = fone_iterations(model, data, theta0, a, config.eta, batches)
    return FoneOutput(z_T=z_T, theta_fone=theta0 - z_T)


def default_tau_n(model, n, p):
    """sqrt(p log n / n) for smooth losses, (p log n / n)^(1/3) for the quantile loss."""
    r = p * math.log(n) / n
    return math.sqrt(r) if model.smooth else r ** (1.0 / 3.0)


def default_inference_eta(model, n, p):
    """(p log n) / n for smooth losses, ((p log n) / n)^(2/3) for the quantile loss."""
    r = p * math.log(n) / n
    return r if model.smooth else r ** (2.0 / 3.0)


def default_inference_iterations(eta, n, factor=4.0):
    # log n = o(eta T): take T a fixed multiple of log(n) / eta
    return int(math.ceil(factor * math.log(n) / eta))


def estimate_sigma_inv_w(model, data, theta0, w, config, tau_n=None):
    w = np.asarray(w, dtype=np.float64)
    if abs(float(np.linalg.norm(w)) - 1.0) > 1e-12:
        raise ValueError(f"w must have unit length, got norm {np.linalg.norm(w)!r}")
    if tau_n is None:
        tau_n = default_tau_n(model, data.n, data.p)
    if not tau_n > 0:
        raise ValueError(f"tau_n must be positive, got {tau_n}")
    out = run_fone(model, data, theta0, tau_n * w, config)
    return out.theta_fone / tau_n


def estimate_limiting_variance(model, data, theta0, sigma_inv_w_hat):
    """(1/n) sum_i (g(theta0, xi_i)' v)^2 without forming the p x p matrix."""
    theta0 = np.asarray(theta0, dtype=np.float64)
    v = np.asarray(sigma_inv_w_hat, dtype=np.float64)
    if theta0.shape != (data.p,) or v.shape != (data.p,):
        raise ValueError("dimension mismatch")
    proj = model.psi(data.y, data.X @ theta0) * (data.X @ v)
    return float(np.mean(proj * proj))
