"""Covariate designs: identity, Toeplitz and equicorrelated Gaussian."""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

COVARIANCES = ("identity", "toeplitz", "equicorr")


def standard_normal(rng, size):
    """Standard normals by inverse CDF of 53-bit midpoint uniforms.

    Only raw integers are taken from ``rng``, so the stream does not depend
    on numpy's normal sampler. The uniforms lie strictly inside (0, 1), so
    no draw is infinite.
    """
    k = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return ndtri((k + 0.5) * 2.0**-53)


@dataclass(frozen=True)
class DesignSpec:
    """Gaussian design over the ``p - 1`` non-intercept coordinates.

    ``p`` counts the intercept. ``rho`` is the correlation parameter of the
    Toeplitz (``rho**|i-j|``) and equicorrelated (constant off-diagonal)
    structures; it is ignored for the identity design.
    """

    p: int
    covariance: str = "identity"
    rho: float = 0.0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise ValueError(f"p must be an integer >= 2, got {self.p}")
        if self.covariance not in COVARIANCES:
            raise ValueError(
                f"covariance must be one of {COVARIANCES}, got {self.covariance!r}"
            )
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")

    def covariate_cov(self):
        """The (p-1) x (p-1) covariance of the non-intercept block."""
        q = self.p - 1
        if self.covariance == "identity":
            return np.eye(q)
        if self.covariance == "toeplitz":
            lag = np.abs(np.subtract.outer(np.arange(q), np.arange(q)))
            return self.rho ** lag.astype(np.float64)
        return self.rho * np.ones((q, q)) + (1.0 - self.rho) * np.eye(q)

    def cholesky(self):
        try:
            return np.linalg.cholesky(self.covariate_cov())
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"design covariance is not positive definite: {self}") from exc

    def second_moment(self):
        """E[XX'] for X = (1, Z), Z ~ N(0, cov): block-diagonal with a unit corner."""
        out = np.zeros((self.p, self.p))
        out[0, 0] = 1.0
        out[1:, 1:] = self.covariate_cov()
        return out

    def draw_covariates(self, rng, n):
        """n x p matrix with a leading column of ones."""
        X = np.empty((n, self.p))
        X[:, 0] = 1.0
        Z = standard_normal(rng, (n, self.p - 1))
        if self.covariance == "identity":
            X[:, 1:] = Z
        else:
            X[:, 1:] = Z @ self.cholesky().T
        return X
