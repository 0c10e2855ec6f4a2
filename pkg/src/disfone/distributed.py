"""Simulated multi-machine estimators: DC-SGD and multi-round distributed FONE.

Machines are shards of an in-process ``Cluster``. Every transmission the
real protocol would make is recorded on the cluster's ``CommLedger``:

* DC-SGD: broadcast of theta0 (L vectors) and the L local estimates.
* distributed FONE, per round: L local gradient sums (plus L sample counts
  as scalars), the averaged gradient sent to machine 1, and the broadcast
  of the new iterate.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import CommLedger, Cluster, derive_seed  # noqa: F401  (re-exported)
from .fone import FoneConfig, FoneDivergenceError, fone_batches, fone_iterations
from .models import subgradient_sum
from .sgd import run_minibatch_sgd


@dataclass(frozen=True)
class DistributedFoneConfig:
    fone: FoneConfig
    K: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 0:
            raise ValueError(f"K must be a non-negative integer, got {self.K}")


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def shard_seed(seed, k):
    return derive_seed(seed, "shard", k)


def run_dcsgd(cluster, model, theta0, config, seed, threads=1):
    small = [k for k, s in enumerate(cluster.shards) if s.n < config.m]
    if small:
        raise ValueError(f"shards {small} hold fewer samples than the batch size {config.m}")
    cluster.ledger.record(vectors=cluster.L)  # broadcast theta0

    def local(k):
        return run_minibatch_sgd(model, cluster.shards[k], theta0, config, shard_seed(seed, k))

    estimates = _map(local, range(cluster.L), threads)
    cluster.ledger.record(vectors=cluster.L, rounds=1)
    return np.mean(estimates, axis=0)


def aggregate_subgradient(cluster, model, theta, threads=1):
    """(1/N) sum over all machines of the local subgradient sums."""
    theta = np.asarray(theta, dtype=np.float64)
    parts = _map(lambda s: (subgradient_sum(model, theta, s), s.n), cluster.shards, threads)
    cluster.ledger.record(vectors=cluster.L, scalars=cluster.L)
    total = np.zeros_like(theta)
    count = 0
    for vec, n in parts:
        total += vec
        count += n
    return total / count


def run_distributed_fone(cluster, model, theta0, config, threads=1, trace=None):
    """K rounds of global gradient averaging followed by FONE on machine 1.

    If ``trace`` is a list, every round's iterate is appended to it.
    """
    first = cluster.shards[0]
    fc = config.fone
    if first.n < fc.m:
        raise ValueError(f"first shard has {first.n} samples, fewer than the batch size {fc.m}")
    theta = np.array(theta0, dtype=np.float64)
    for j in range(1, config.K + 1):
        a = aggregate_subgradient(cluster, model, theta, threads)
        cluster.ledger.record(vectors=1)  # a -> machine 1
        batches = fone_batches(first.n, fc.m, fc.T, derive_seed(fc.seed, "round", j))
        try:
            theta = fone_iterations(model, first, theta, a, fc.eta, batches)
        except FoneDivergenceError as exc:
            raise FoneDivergenceError(exc.iteration, round_index=j) from None
        cluster.ledger.record(vectors=1, rounds=1)  # broadcast theta_j
        if trace is not None:
            trace.append(theta.copy())
    return theta
