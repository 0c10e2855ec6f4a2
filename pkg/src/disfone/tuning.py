"""Grid selection of the step-size scale constants."""

import math
from dataclasses import dataclass, field

import numpy as np

from .data import derive_seed
from .distributed import DistributedFoneConfig, run_distributed_fone
from .fone import FoneConfig, FoneDivergenceError
from .models import empirical_risk
from .sgd import SgdConfig, SgdSchedule, run_minibatch_sgd

DEFAULT_GRID = tuple(round(10.0 ** (k / 4), 12) for k in range(-12, 13))


class TuningError(RuntimeError):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        detail = ", ".join(f"{c:g}: {d}" for c, d in diagnostics)
        super().__init__(f"every candidate failed ({detail})")


@dataclass(frozen=True)
class CandidateGrid:
    values: tuple = DEFAULT_GRID

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("candidate grid is empty")
        if any(not (v > 0 and math.isfinite(v)) for v in vals):
            raise ValueError(f"candidates must be positive and finite: {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"candidates must be strictly increasing: {vals}")
        object.__setattr__(self, "values", vals)


@dataclass
class TuningResult:
    chosen: float
    scores: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)


def select_scale_constant(objective, grid=CandidateGrid(), seed=0):
    """Evaluate ``objective(candidate, seed)`` on every candidate, return the minimizer.

    Exceptions and non-finite values score +inf. Ties go to the smaller
    candidate, which is the earlier one since the grid is increasing.
    """
    scores = []
    failures = {}
    for i, c in enumerate(grid.values):
        try:
            val = float(objective(c, derive_seed(seed, "candidate", i)))
        except (FoneDivergenceError, FloatingPointError, ValueError, OverflowError) as exc:
            failures[c] = repr(exc)
            val = math.inf
        if not math.isfinite(val):
            failures.setdefault(c, f"non-finite score {val}")
            val = math.inf
        scores.append(val)
    if all(math.isinf(s) for s in scores):
        raise TuningError(sorted(failures.items()))
    best = int(np.argmin(scores))
    return TuningResult(chosen=grid.values[best], scores=scores, failures=failures)


def tune_sgd_c0(model, shard, theta0, m, alpha=1.0, grid=CandidateGrid(), seed=0):
    """Pick c0 by the machine-1 empirical risk of the local SGD estimate."""

    def objective(c, s):
        config = SgdConfig(m=m, schedule=SgdSchedule(c0=c, alpha=alpha))
        return empirical_risk(model, run_minibatch_sgd(model, shard, theta0, config, s), shard)

    return select_scale_constant(objective, grid, seed)


def tune_fone_c0(model, cluster, theta0, m, T, grid=CandidateGrid(), seed=0):
    """Pick c0' (eta = c0' m / n1) by the machine-1 risk after one distributed round."""
    first = cluster.shards[0]

    def objective(c, s):
        config = DistributedFoneConfig(FoneConfig(eta=c * m / first.n, m=m, T=T, seed=s), K=1)
        theta1 = run_distributed_fone(cluster.with_fresh_ledger(), model, theta0, config)
        return empirical_risk(model, theta1, first)

    return select_scale_constant(objective, grid, seed)
