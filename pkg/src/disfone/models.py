"""Loss families, subgradients and population Hessian oracles."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from . import _kernels
from .design import DesignSpec

KINDS = {
    "logistic": _kernels.LOGISTIC,
    "quantile": _kernels.QUANTILE,
    "quadratic": _kernels.QUADRATIC,
}


@dataclass(frozen=True)
class LossModel:
    kind: str
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {list(KINDS)}")
        if self.kind == "quantile":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError(f"quantile model needs 0 < tau < 1, got {self.tau}")
        elif self.tau is not None:
            raise ValueError(f"tau is only meaningful for the quantile model, got {self.tau}")

    @classmethod
    def logistic(cls):
        return cls("logistic")

    @classmethod
    def quantile(cls, tau):
        return cls("quantile", float(tau))

    @classmethod
    def quadratic(cls):
        return cls("quadratic")

    @property
    def code(self):
        return KINDS[self.kind]

    @property
    def tau_value(self):
        return 0.0 if self.tau is None else self.tau

    @property
    def smooth(self):
        return self.kind != "quantile"

    def psi(self, y, u):
        return _kernels.psi(self.code, self.tau_value, y, u)

    def losses(self, y, u):
        return _kernels.loss_values(self.code, self.tau_value, y, u)


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class Sample:
    """One observation; x carries the intercept in position 0."""

    y: float
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("x must be a non-empty vector")
        if x[0] != 1.0:
            raise ValueError(f"x[0] must be the intercept 1, got {x[0]}")
        _check_finite("sample", np.append(x, self.y))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))


class Dataset:
    """n samples stored row-wise: ``X`` is n x p with an intercept column."""

    def __init__(self, X, y, check=True):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if check:
            if X.shape[0] and not np.all(X[:, 0] == 1.0):
                raise ValueError("first covariate column must be the intercept 1")
            _check_finite("X", X)
            _check_finite("y", y)
        self.X = X
        self.y = y

    @classmethod
    def from_samples(cls, samples):
        samples = list(samples)
        return cls(np.array([s.x for s in samples]), np.array([s.y for s in samples]))

    def __len__(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def sample(self, i):
        return Sample(self.y[i], self.X[i])

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], check=False)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)

    def __repr__(self):
        return f"Dataset(n={self.n}, p={self.p})"


def _check_dim(theta, p):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (p,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({p},)")
    _check_finite("theta", theta)
    return theta


def loss(model, theta, sample):
    theta = _check_dim(theta, sample.x.size)
    u = float(sample.x @ theta)
    return float(model.losses(np.float64(sample.y), np.float64(u)))


def subgradient(model, theta, sample):
    theta = _check_dim(theta, sample.x.size)
    u = float(sample.x @ theta)
    return sample.x * float(model.psi(np.float64(sample.y), np.float64(u)))


def averaged_subgradient(model, theta, data, index_set):
    idx = np.asarray(index_set, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("index set is empty")
    if idx.min() < 0 or idx.max() >= data.n:
        raise IndexError("index set out of range")
    theta = _check_dim(theta, data.p)
    total = _kernels.batch_grad_sum(model.code, model.tau_value, data.X, data.y, idx, theta)
    return total / idx.size


def empirical_risk(model, theta, data):
    theta = _check_dim(theta, data.p)
    return float(np.mean(model.losses(data.y, data.X @ theta)))


def mean_subgradient(model, theta, data):
    """Full-sample mean subgradient, (1/n) sum_i g(theta, xi_i)."""
    return subgradient_sum(model, theta, data) / data.n


def subgradient_sum(model, theta, data):
    theta = _check_dim(theta, data.p)
    return data.X.T @ model.psi(data.y, data.X @ theta)


# ------------------------------------------------------------- population


@dataclass
class PopulationOracle:
    sigma: np.ndarray
    a_matrix: np.ndarray
    source: str
    mc_samples: int | None = None
    std_error: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("sigma", "a_matrix"):
            M = getattr(self, name)
            if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
                raise ValueError(f"{name} is not symmetric")
        if np.linalg.eigvalsh(self.sigma).min() <= 0:
            raise ValueError("sigma is not positive definite")
        if np.linalg.eigvalsh(self.a_matrix).min() < -1e-10 * max(1.0, np.abs(self.a_matrix).max()):
            raise ValueError("a_matrix is not positive semidefinite")

    def sigma_inv(self, w):
        return np.linalg.solve(self.sigma, w)

    def limiting_variance(self, w):
        v = self.sigma_inv(w)
        return float(v @ self.a_matrix @ v)


def quantile_density_at_zero(tau):
    """phi(Phi^{-1}(tau)): density of the shifted N(0,1) error at its tau-quantile."""
    return float(norm.pdf(norm.ppf(tau)))


def population_oracle(model, design, theta_star, mc_samples=10**6, seed=0, noise_sd=1.0):
    """Sigma (population Hessian at theta*) and A = Cov(g(theta*, xi)).

    Quantile and quadratic models have closed forms under the Gaussian
    designs; the logistic one is a Monte Carlo average, whose largest
    entrywise standard error is reported in ``std_error``.
    """
    if not isinstance(design, DesignSpec):
        raise TypeError("design must be a DesignSpec")
    theta_star = _check_dim(theta_star, design.p)
    exx = design.second_moment()
    if model.kind == "quantile":
        dens = quantile_density_at_zero(model.tau)
        return PopulationOracle(
            sigma=dens * exx,
            a_matrix=model.tau * (1.0 - model.tau) * exx,
            source="closed_form",
            meta={"density": dens},
        )
    if model.kind == "quadratic":
        return PopulationOracle(sigma=exx.copy(), a_matrix=noise_sd**2 * exx, source="closed_form")
    if mc_samples < 10**4:
        raise ValueError(f"Monte Carlo oracle needs at least 1e4 draws, got {mc_samples}")
    return _logistic_mc_oracle(design, theta_star, int(mc_samples), seed)


def _logistic_mc_oracle(design, theta_star, n_draws, seed, chunk=50_000):
    # Well-specified model: A equals Sigma, both are E[s(1-s) XX'].
    # The response is integrated out analytically, only X is simulated.
    rng = np.random.default_rng(seed)
    p = design.p
    acc = np.zeros((p, p))
    acc_sq = np.zeros((p, p))
    done = 0
    while done < n_draws:
        k = min(chunk, n_draws - done)
        X = design.draw_covariates(rng, k)
        s = expit(X @ theta_star)
        wts = s * (1.0 - s)
        Xw = X * wts[:, None]
        acc += Xw.T @ X
        acc_sq += (Xw * Xw).T @ (X * X)
        done += k
    mean = acc / n_draws
    var = np.maximum(acc_sq / n_draws - mean**2, 0.0)
    se = float(np.sqrt(var.max() / n_draws))
    mean = 0.5 * (mean + mean.T)
    return PopulationOracle(
        sigma=mean,
        a_matrix=mean.copy(),
        source="monte_carlo",
        mc_samples=n_draws,
        std_error=se,
    )
