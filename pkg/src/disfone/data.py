"""Synthetic regression problems, seeded streams and simulated sharding."""

import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .design import DesignSpec, standard_normal
from .models import Dataset, LossModel


def derive_seed(master, *keys):
    """64-bit seed for the stream addressed by ``keys`` under ``master``.

    String keys are mapped through CRC32 so names like ``"tuning"`` address a
    fixed stream on every platform.
    """
    spawn_key = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys)
    ss = np.random.SeedSequence(int(master), spawn_key=spawn_key)
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def make_rng(master, *keys):
    return np.random.default_rng(derive_seed(master, *keys))


@dataclass
class GeneratedProblem:
    model: LossModel
    design: DesignSpec
    theta_star: np.ndarray
    theta_raw: np.ndarray
    dataset: Dataset
    seed: int
    noise_sd: float = 1.0


def draw_theta(rng, p):
    return rng.uniform(-0.5, 0.5, size=p)


def draw_dataset(model, design, theta_raw, n, rng, noise_sd=1.0):
    """Draw n samples given the generating coefficient.

    For the quantile model ``theta_raw`` is the pre-shift linear-model
    coefficient; for the other two it is the true parameter itself.
    """
    X = design.draw_covariates(rng, n)
    lin = X @ theta_raw
    if model.kind == "logistic":
        prob = 1.0 / (1.0 + np.exp(-lin))
        y = np.where(rng.random(n) < prob, 1.0, -1.0)
    else:
        y = lin + noise_sd * standard_normal(rng, n)
    return Dataset(X, y, check=False)


def true_parameter(model, theta_raw):
    theta_star = np.array(theta_raw, dtype=np.float64)
    if model.kind == "quantile":
        theta_star[0] += norm.ppf(model.tau)
    return theta_star


def generate_problem(kind, design, n, tau=None, seed=0, theta_raw=None, noise_sd=1.0):
    """Draw theta and n samples.

    ``kind`` is a model name or a LossModel. Passing ``theta_raw`` fixes the
    coefficient instead of drawing it (used to hold theta fixed across
    replications).
    """
    if isinstance(kind, LossModel):
        model = kind
    elif kind == "quantile":
        if tau is None:
            raise ValueError("quantile problems need tau")
        model = LossModel.quantile(tau)
    else:
        model = LossModel(kind)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    design.cholesky()
    rng = np.random.default_rng(seed)
    if theta_raw is None:
        theta_raw = draw_theta(rng, design.p)
    else:
        theta_raw = np.asarray(theta_raw, dtype=np.float64)
        if theta_raw.shape != (design.p,):
            raise ValueError("theta_raw has the wrong dimension")
        # keep the covariate stream aligned with the drawn-theta case
        draw_theta(rng, design.p)
    data = draw_dataset(model, design, theta_raw, n, rng, noise_sd)
    return GeneratedProblem(
        model=model,
        design=design,
        theta_star=true_parameter(model, theta_raw),
        theta_raw=theta_raw,
        dataset=data,
        seed=seed,
        noise_sd=noise_sd,
    )


def fresh_samples(problem, n, seed):
    """n new samples from the same generating process, independent stream."""
    rng = np.random.default_rng(seed)
    return draw_dataset(problem.model, problem.design, problem.theta_raw, n, rng, problem.noise_sd)


# ------------------------------------------------------------------ shards


@dataclass
class CommLedger:
    """Transmission counts: p-vectors and scalars sent, rounds completed."""

    rounds: int = 0
    vectors_sent: int = 0
    scalars_sent: int = 0

    def record(self, vectors=0, scalars=0, rounds=0):
        if vectors < 0 or scalars < 0 or rounds < 0:
            raise ValueError("ledger counters only grow")
        self.vectors_sent += vectors
        self.scalars_sent += scalars
        self.rounds += rounds


@dataclass
class Cluster:
    shards: list
    ledger: CommLedger = field(default_factory=CommLedger)
    indices: list | None = None

    @property
    def L(self):
        return len(self.shards)

    @property
    def N(self):
        return sum(s.n for s in self.shards)

    @property
    def sizes(self):
        return [s.n for s in self.shards]

    def with_fresh_ledger(self):
        """Same shards, zeroed ledger (for dry runs such as tuning)."""
        return Cluster(self.shards, CommLedger(), self.indices)


def even_sizes(N, L):
    base, extra = divmod(N, L)
    return [base + 1] * extra + [base] * (L - extra)


def first_heavy_sizes(N, L, n1):
    """n1 on the first machine, the rest spread evenly over the others."""
    if L == 1:
        if n1 != N:
            raise ValueError("with one machine n1 must equal N")
        return [N]
    rest = even_sizes(N - n1, L - 1)
    if n1 < rest[0]:
        raise ValueError(f"n1={n1} is smaller than the other shards ({rest[0]})")
    return [n1] + rest


def shard_dataset(dataset, sizes, seed):
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise ValueError("every shard needs at least one sample")
    if sum(sizes) != dataset.n:
        raise ValueError(f"shard sizes sum to {sum(sizes)}, dataset has {dataset.n}")
    perm = np.random.default_rng(seed).permutation(dataset.n)
    bounds = np.cumsum([0] + sizes)
    parts = [perm[bounds[k] : bounds[k + 1]] for k in range(len(sizes))]
    # stable sort: equal sizes keep their original order
    order = sorted(range(len(sizes)), key=lambda k: -sizes[k])
    parts = [parts[k] for k in order]
    return Cluster(shards=[dataset.subset(ix) for ix in parts], indices=parts)


# --------------------------------------------------------------------- csv


def dump_csv(dataset, path):
    header = "y," + ",".join(f"x{j}" for j in range(dataset.p))
    table = np.column_stack([dataset.y, dataset.X])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def load_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "y" or any(h != f"x{j}" for j, h in enumerate(header[1:])):
        raise ValueError(f"{path}: expected header y,x0,x1,...")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.size == 0:
        table = table.reshape(0, len(header))
    return Dataset(table[:, 1:], table[:, 0])
