"""One-pass mini-batch SGD with a dimension-aware step size."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class SgdSchedule:
    """Step sizes r_i = c0 / max(i**alpha, p)."""

    c0: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class SgdConfig:
    m: int
    schedule: SgdSchedule = field(default_factory=SgdSchedule)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"batch size must be a positive integer, got {self.m}")


def step_size(i, p, schedule):
    return schedule.c0 / max(i**schedule.alpha, p)


def default_batch_size(p, n):
    """floor(p * log n) with the natural log, clipped to [1, n]."""
    return int(min(max(math.floor(p * math.log(n)), 1), n))


def sgd_batches(n, m, seed):
    """s = n // m disjoint batches from a seeded permutation; the remainder is dropped."""
    if n < m:
        raise ValueError(f"dataset of size {n} is smaller than the batch size {m}")
    s = n // m
    perm = np.random.default_rng(seed).permutation(n)
    return perm[: s * m].reshape(s, m)


def run_minibatch_sgd(model, data, theta0, config, seed):
    theta0 = np.asarray(theta0, dtype=np.float64)
    if theta0.shape != (data.p,):
        raise ValueError(f"theta0 has shape {theta0.shape}, expected ({data.p},)")
    batches = sgd_batches(data.n, config.m, seed)
    return _kernels.sgd_loop(
        model.code,
        model.tau_value,
        data.X,
        data.y,
        batches,
        theta0,
        float(config.schedule.c0),
        float(config.schedule.alpha),
        float(data.p),
    )
