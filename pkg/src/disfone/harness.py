"""Replicated simulation experiments: specs, runners, reports."""

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import data as datagen
from .data import derive_seed, even_sizes, first_heavy_sizes, shard_dataset
from .design import DesignSpec, standard_normal
from .distributed import DistributedFoneConfig, run_dcsgd, run_distributed_fone
from .erm import initial_estimator, solve_erm
from .fone import (
    FoneConfig,
    default_inference_eta,
    default_inference_iterations,
    default_tau_n,
    estimate_limiting_variance,
    estimate_sigma_inv_w,
)
from .models import LossModel, population_oracle
from .sgd import SgdConfig, SgdSchedule, default_batch_size, run_minibatch_sgd
from .tuning import DEFAULT_GRID, CandidateGrid, tune_fone_c0, tune_sgd_c0

log = logging.getLogger(__name__)

ESTIMATORS = ("INIT", "ERM", "SGD", "DCSGD", "DISFONE", "SINVW", "VARIANCE", "RANDINIT_SGD")
CSV_HEADER = (
    "estimator",
    "replication",
    "err_to_truth",
    "err_to_erm",
    "comm_vectors",
    "seconds",
    "spec_hash",
    "status",
)
DEFAULT_K = {"logistic": 20, "quantile": 80, "quadratic": 20}


@dataclass(frozen=True)
class ExperimentSpec:
    model: str = "logistic"
    tau: float = 0.25
    design: str = "identity"
    rho: float = 0.0
    N: int = 100_000
    p: int = 100
    L: int = 20
    n1: int | None = None
    m: int | None = None
    alpha: float = 1.0
    T: int = 20
    K: int | None = None
    n0: int | None = None
    reps: int = 100
    seed: int = 0
    estimators: tuple = ("INIT", "ERM", "SGD", "DCSGD", "DISFONE")
    grid: tuple = DEFAULT_GRID
    retune: bool = False
    fix_theta: bool = False
    noise_sd: float = 1.0
    erm_tol: float = 1e-8
    # inference (SINVW / VARIANCE)
    tau_n: float | None = None
    eta_inf: float | None = None
    T_inf: int | None = None
    mc_samples: int = 10**6

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(str(e).upper() for e in self.estimators))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if self.K is None:
            object.__setattr__(self, "K", DEFAULT_K.get(self.model, 20))
        if self.n0 is None:
            object.__setattr__(self, "n0", 10 * self.p)
        self.validate()

    def validate(self):
        self.loss_model()
        self.design_spec()
        CandidateGrid(self.grid)
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ValueError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
        if self.N < 1 or self.L < 1 or self.L > self.N:
            raise ValueError(f"need 1 <= L <= N, got N={self.N}, L={self.L}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.T < 1 or self.K < 0:
            raise ValueError("T must be >= 1 and K >= 0")
        if self.n0 < self.p:
            raise ValueError(f"n0={self.n0} is smaller than p={self.p}")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        self.shard_sizes()
        if self.m is not None and not 1 <= self.m <= min(self.shard_sizes()):
            raise ValueError(f"m={self.m} must lie in [1, smallest shard size]")

    def loss_model(self):
        if self.model == "quantile":
            return LossModel.quantile(self.tau)
        return LossModel(self.model)

    def design_spec(self):
        return DesignSpec(self.p, self.design, self.rho)

    def shard_sizes(self):
        if self.n1 is None:
            return even_sizes(self.N, self.L)
        return first_heavy_sizes(self.N, self.L, self.n1)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["estimators"] = list(self.estimators)
        out["grid"] = list(self.grid)
        return out

    def spec_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_text(cls, text):
        return cls(**parse_config(text))

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_text(self):
        lines = []
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            if isinstance(val, tuple):
                val = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in val)
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {
    "model": str, "tau": float, "design": str, "rho": float, "N": int, "p": int, "L": int,
    "n1": int, "m": int, "alpha": float, "T": int, "K": int, "n0": int, "reps": int,
    "seed": int, "estimators": "strs", "grid": "floats", "retune": bool,
    "fix_theta": bool, "noise_sd": float, "erm_tol": float, "tau_n": float,
    "eta_inf": float, "T_inf": int, "mc_samples": int,
}


def _int(text):
    val = float(text)
    if val != int(val):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma-separated."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        kind = _FIELD_TYPES[key]
        try:
            if value.lower() in ("none", "") and kind not in ("strs", "floats"):
                out[key] = None
            elif kind == "strs":
                out[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif kind == "floats":
                out[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif kind is int:
                out[key] = _int(value)
            elif kind is bool:
                out[key] = _bool(value)
            else:
                out[key] = kind(value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from None
    return out


# ------------------------------------------------------------------ report


@dataclass
class ReportRow:
    estimator: str
    replication: int
    err_to_truth: float
    err_to_erm: float
    comm_vectors: float
    seconds: float
    spec_hash: str
    status: str = "ok"

    def key(self):
        """Everything except wall time, which is never reproducible."""
        return (self.estimator, self.replication, self.err_to_truth, self.err_to_erm,
                self.comm_vectors, self.spec_hash, self.status)


@dataclass
class AggregateRow:
    estimator: str
    kind: str  # "AGG" (mean) or "AGG_SE" (standard error)
    err_to_truth: float
    err_to_erm: float
    comm_vectors: float
    seconds: float
    spec_hash: str
    status: str


@dataclass
class ExperimentReport:
    spec_hash: str
    rows: list = field(default_factory=list)
    spec: ExperimentSpec | None = None
    tuning: dict = field(default_factory=dict)

    def estimators(self):
        seen = []
        for r in self.rows:
            if r.estimator not in seen:
                seen.append(r.estimator)
        return seen

    def aggregates(self):
        out = []
        for est in self.estimators():
            rows = [r for r in self.rows if r.estimator == est]
            ok = [r for r in rows if r.status == "ok"]
            status = "ok" if len(ok) == len(rows) else f"incomplete({len(ok)}/{len(rows)})"
            cols = ("err_to_truth", "err_to_erm", "comm_vectors", "seconds")
            means, ses = {}, {}
            for c in cols:
                vals = [getattr(r, c) for r in ok]
                means[c], ses[c] = _mean_se(vals)
            out.append(AggregateRow(est, "AGG", **means, spec_hash=self.spec_hash, status=status))
            out.append(AggregateRow(est, "AGG_SE", **ses, spec_hash=self.spec_hash, status=status))
        return out

    def mean(self, estimator, column="err_to_truth"):
        for a in self.aggregates():
            if a.estimator == estimator and a.kind == "AGG":
                return getattr(a, column)
        raise KeyError(estimator)


def _mean_se(vals):
    n = len(vals)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(vals) / n
    if n == 1:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return mean, math.sqrt(var / n)


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def emit_report(report, path, format="csv"):
    """Write ``report`` as CSV (with AGG / AGG_SE rows) or as an aligned text table."""
    if format == "csv":
        text = report_to_csv(report)
    elif format == "table":
        text = render_table(report)
    else:
        raise ValueError(f"unknown format {format!r}")
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    if format == "csv" and (report.spec is not None or report.tuning):
        meta = {"spec_hash": report.spec_hash, "tuning": report.tuning,
                "spec": report.spec.to_dict() if report.spec is not None else None}
        spec = report.spec
        if spec is not None and {"SINVW", "VARIANCE"} & set(spec.estimators):
            # logistic has no closed form for Sigma and A; the truth is simulated
            meta["oracle"] = "monte_carlo" if spec.model == "logistic" else "closed_form"
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=1)


def report_to_csv(report):
    lines = [",".join(CSV_HEADER)]
    for r in report.rows:
        lines.append(",".join(_fmt(getattr(r, c)) for c in CSV_HEADER))
    for a in report.aggregates():
        vals = [a.estimator, a.kind, a.err_to_truth, a.err_to_erm, a.comm_vectors,
                a.seconds, a.spec_hash, a.status]
        lines.append(",".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def parse_report_csv(path):
    """Read a CSV written by ``emit_report``; returns (report, stored aggregate rows)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows, aggs, hashes = [], [], set()
        for rec in reader:
            if not rec:
                continue
            est, rep, t, e, c, s, h, status = rec
            hashes.add(h)
            if rep in ("AGG", "AGG_SE"):
                aggs.append(AggregateRow(est, rep, float(t), float(e), float(c), float(s), h, status))
            else:
                rows.append(ReportRow(est, int(rep), float(t), float(e), float(c), float(s), h, status))
    if len(hashes) > 1:
        raise ValueError(f"{path}: rows from several specs {sorted(hashes)}")
    return ExperimentReport(spec_hash=hashes.pop() if hashes else "", rows=rows), aggs


LABELS = {
    "INIT": "theta0", "DCSGD": "DC", "SGD": "SGD", "DISFONE": "DisFONE",
    "ERM": "ERM", "SINVW": "SinvW", "VARIANCE": "sqrt-ratio", "RANDINIT_SGD": "SGD(rand)",
}


def render_table(report):
    aggs = {(a.estimator, a.kind): a for a in report.aggregates()}
    ests = report.estimators()
    truth = [e for e in ests if e != "VARIANCE"]
    to_erm = [e for e in ests if e in ("DCSGD", "SGD", "DISFONE", "RANDINIT_SGD")]
    head = [LABELS.get(e, e) for e in truth]
    cells = [f"{aggs[(e, 'AGG')].err_to_truth:.3f}" for e in truth]
    ses = [f"({aggs[(e, 'AGG_SE')].err_to_truth:.3f})" for e in truth]
    if to_erm:
        head += ["|"] + [LABELS.get(e, e) for e in to_erm]
        cells += ["|"] + [f"{aggs[(e, 'AGG')].err_to_erm:.3f}" for e in to_erm]
        ses += ["|"] + [f"({aggs[(e, 'AGG_SE')].err_to_erm:.3f})" for e in to_erm]
    if "VARIANCE" in ests:
        head += ["|", "sqrt-ratio"]
        cells += ["|", f"{aggs[('VARIANCE', 'AGG')].err_to_truth:.3f}"]
        ses += ["|", f"({aggs[('VARIANCE', 'AGG_SE')].err_to_truth:.3f})"]
    width = [max(len(a), len(b), len(c)) for a, b, c in zip(head, cells, ses)]
    fmt = lambda xs: "  ".join(x.rjust(w) for x, w in zip(xs, width))  # noqa: E731
    nrep = len({r.replication for r in report.rows})
    title = f"# spec {report.spec_hash}, {nrep} replications; left: L2 to truth"
    if to_erm:
        title += ", right of '|': L2 to ERM"
    lines = [title, fmt(head), fmt(cells), fmt(ses)]
    for name, rec in report.tuning.items():
        lines.append(f"# tuned {name}: {rec['chosen']:g}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ runner


def _tune_constants(spec, problem, theta0, cluster):
    model = spec.loss_model()
    grid = CandidateGrid(spec.grid)
    base = derive_seed(problem.seed, "tune")
    out = {}
    want = set(spec.estimators)
    if "SGD" in want:
        m = spec.m or default_batch_size(spec.p, spec.N)
        res = tune_sgd_c0(model, problem.dataset, theta0, m, spec.alpha, grid, derive_seed(base, "sgd"))
        out["SGD"] = {"chosen": res.chosen, "scores": res.scores}
    if "RANDINIT_SGD" in want:
        # Same schedule as the consistent start so only theta_0 differs.
        if "SGD" not in out:
            m = spec.m or default_batch_size(spec.p, spec.N)
            res = tune_sgd_c0(model, problem.dataset, theta0, m, spec.alpha, grid,
                              derive_seed(base, "sgd"))
            out["SGD"] = {"chosen": res.chosen, "scores": res.scores}
        out["RANDINIT_SGD"] = dict(out["SGD"])
    if "DCSGD" in want:
        m = spec.m or default_batch_size(spec.p, min(cluster.sizes))
        res = tune_sgd_c0(model, cluster.shards[0], theta0, m, spec.alpha, grid, derive_seed(base, "dc"))
        out["DCSGD"] = {"chosen": res.chosen, "scores": res.scores}
    if "DISFONE" in want:
        m = spec.m or default_batch_size(spec.p, cluster.sizes[0])
        res = tune_fone_c0(model, cluster, theta0, m, spec.T, grid, derive_seed(base, "fone"))
        out["DISFONE"] = {"chosen": res.chosen, "scores": res.scores}
    return out


def random_sphere_point(rng, p, radius):
    v = standard_normal(rng, p)
    return radius * v / np.linalg.norm(v)


@dataclass
class _Setup:
    problem: object
    theta0: np.ndarray
    cluster: object
    random_theta0: np.ndarray | None


def _setup(spec, rep_seed, theta_fixed):
    model = spec.loss_model()
    design = spec.design_spec()
    problem = datagen.generate_problem(
        model, design, spec.N, seed=derive_seed(rep_seed, "data"),
        theta_raw=theta_fixed, noise_sd=spec.noise_sd,
    )
    theta0 = initial_estimator(model, design, problem, spec.n0, seed=derive_seed(rep_seed, "init"))
    cluster = shard_dataset(problem.dataset, spec.shard_sizes(), derive_seed(rep_seed, "shard"))
    rand0 = None
    if "RANDINIT_SGD" in spec.estimators:
        rng = np.random.default_rng(derive_seed(rep_seed, "randinit"))
        # ||theta_0 - theta*||^2 = p exactly
        rand0 = problem.theta_star + random_sphere_point(rng, spec.p, math.sqrt(spec.p))
    return _Setup(problem, theta0, cluster, rand0)


def _theta_fixed(spec):
    if not spec.fix_theta:
        return None
    return datagen.draw_theta(np.random.default_rng(derive_seed(spec.seed, "theta")), spec.p)


def cell_tuning(spec):
    """Constants tuned once per experiment cell on a dedicated replication stream."""
    st = _setup(spec, derive_seed(spec.seed, "tuning"), _theta_fixed(spec))
    return _tune_constants(spec, st.problem, st.theta0, st.cluster)


def run_replication(spec, r, tuning=None, shash=None):
    """All requested estimators on replication ``r``; returns (rows, tuning used)."""
    shash = shash or spec.spec_hash()
    rep_seed = derive_seed(spec.seed, "rep", r)
    st = _setup(spec, rep_seed, _theta_fixed(spec))
    model = spec.loss_model()
    problem, theta0, cluster = st.problem, st.theta0, st.cluster
    theta_star = problem.theta_star
    if tuning is None:
        tuning = _tune_constants(spec, problem, theta0, cluster)
    want = spec.estimators
    rows = []
    results = {}

    def record(name, fn):
        t0 = time.perf_counter()
        try:
            theta, comm = fn()
            status = "ok"
        except Exception as exc:  # recorded per row; the run carries on
            log.warning("replication %d: %s failed: %r", r, name, exc)
            theta, comm, status = None, math.nan, f"error:{type(exc).__name__}"
        results[name] = theta
        return name, theta, comm, time.perf_counter() - t0, status

    pending = []
    pending.append(record("INIT", lambda: (theta0, 0)))
    erm_theta = None
    if any(e in want for e in ("ERM", "SINVW", "VARIANCE")):
        pending.append(record("ERM", lambda: (solve_erm(model, problem.dataset, tol=spec.erm_tol).theta_hat, 0)))
        erm_theta = results["ERM"]
    if "SGD" in want:
        m = spec.m or default_batch_size(spec.p, spec.N)
        cfg = SgdConfig(m, SgdSchedule(tuning["SGD"]["chosen"], spec.alpha))
        pending.append(record("SGD", lambda: (
            run_minibatch_sgd(model, problem.dataset, theta0, cfg, derive_seed(rep_seed, "sgd")), 0)))
    if "RANDINIT_SGD" in want:
        m = spec.m or default_batch_size(spec.p, spec.N)
        cfg = SgdConfig(m, SgdSchedule(tuning["RANDINIT_SGD"]["chosen"], spec.alpha))
        pending.append(record("RANDINIT_SGD", lambda: (
            run_minibatch_sgd(model, problem.dataset, st.random_theta0, cfg,
                              derive_seed(rep_seed, "sgd")), 0)))
    if "DCSGD" in want:
        def dc():
            cl = cluster.with_fresh_ledger()
            m = spec.m or default_batch_size(spec.p, min(cl.sizes))
            cfg = SgdConfig(m, SgdSchedule(tuning["DCSGD"]["chosen"], spec.alpha))
            est = run_dcsgd(cl, model, theta0, cfg, derive_seed(rep_seed, "dc"))
            return est, cl.ledger.vectors_sent
        pending.append(record("DCSGD", dc))
    if "DISFONE" in want:
        def disfone():
            cl = cluster.with_fresh_ledger()
            m = spec.m or default_batch_size(spec.p, cl.sizes[0])
            eta = tuning["DISFONE"]["chosen"] * m / cl.sizes[0]
            cfg = DistributedFoneConfig(FoneConfig(eta, m, spec.T, derive_seed(rep_seed, "fone")), spec.K)
            return run_distributed_fone(cl, model, theta0, cfg), cl.ledger.vectors_sent
        pending.append(record("DISFONE", disfone))

    for name, theta, comm, secs, status in pending:
        if name not in want:
            continue
        if theta is None:
            rows.append(ReportRow(name, r, math.nan, math.nan, comm, secs, shash, status))
            continue
        e_truth = float(np.linalg.norm(theta - theta_star))
        e_erm = float(np.linalg.norm(theta - erm_theta)) if erm_theta is not None else math.nan
        rows.append(ReportRow(name, r, e_truth, e_erm, float(comm), secs, shash, status))

    if "SINVW" in want or "VARIANCE" in want:
        rows.extend(_inference_rows(spec, r, problem, erm_theta, rep_seed, shash))
    return rows, tuning


def inference_settings(spec, n):
    model = spec.loss_model()
    m = spec.m or default_batch_size(spec.p, n)
    eta = spec.eta_inf or default_inference_eta(model, n, spec.p)
    T = spec.T_inf or default_inference_iterations(eta, n)
    tau_n = spec.tau_n or default_tau_n(model, n, spec.p)
    return m, eta, T, tau_n


def _inference_rows(spec, r, problem, erm_theta, rep_seed, shash):
    """Sigma^{-1} w and limiting-variance estimates at w = 1_p / sqrt(p), theta0 = ERM."""
    model = spec.loss_model()
    data = problem.dataset
    rows = []
    t0 = time.perf_counter()
    try:
        if erm_theta is None:
            raise RuntimeError("ERM failed; no centre for inference")
        w = np.ones(spec.p) / math.sqrt(spec.p)
        m, eta, T, tau_n = inference_settings(spec, data.n)
        oracle = population_oracle(model, problem.design, problem.theta_star,
                                   mc_samples=spec.mc_samples, seed=derive_seed(rep_seed, "oracle"),
                                   noise_sd=spec.noise_sd)
        cfg = FoneConfig(eta, m, T, derive_seed(rep_seed, "sinvw"))
        est = estimate_sigma_inv_w(model, data, erm_theta, w, cfg, tau_n=tau_n)
        err = float(np.linalg.norm(est - oracle.sigma_inv(w)))
        t1 = time.perf_counter()
        var_hat = estimate_limiting_variance(model, data, erm_theta, est)
        ratio = math.sqrt(var_hat / oracle.limiting_variance(w))
        t2 = time.perf_counter()
        results = {"SINVW": (err, t1 - t0), "VARIANCE": (ratio, t2 - t1)}
        status = "ok"
    except Exception as exc:
        log.warning("replication %d: inference failed: %r", r, exc)
        results = {"SINVW": (math.nan, 0.0), "VARIANCE": (math.nan, 0.0)}
        status = f"error:{type(exc).__name__}"
    for name in ("SINVW", "VARIANCE"):
        if name in spec.estimators:
            val, secs = results[name]
            rows.append(ReportRow(name, r, val, math.nan, 0.0, secs, shash, status))
    return rows


def run_experiment(spec, threads=1, replications=None):
    """Run ``spec.reps`` replications (or the given indices) and collect a report.

    Replication ``r`` draws everything from streams derived from
    ``(spec.seed, r)``, so results do not depend on ``threads`` or on which
    other replications run.
    """
    shash = spec.spec_hash()
    reps = list(range(spec.reps)) if replications is None else list(replications)
    tuning = None if spec.retune else cell_tuning(spec)

    def one(r):
        return run_replication(spec, r, tuning, shash)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(one, reps))
    else:
        outs = [one(r) for r in reps]
    order = {e: i for i, e in enumerate(ESTIMATORS)}
    rows = sorted((row for rs, _ in outs for row in rs),
                  key=lambda row: (order[row.estimator], row.replication))
    record = {}
    if tuning is not None:
        record = {k: {"chosen": v["chosen"], "scores": v["scores"], "grid": list(spec.grid)}
                  for k, v in tuning.items()}
    else:
        for r, (_, tun) in zip(reps, outs):
            for k, v in tun.items():
                record[f"{k}@{r}"] = {"chosen": v["chosen"], "scores": v["scores"]}
    return ExperimentReport(spec_hash=shash, rows=rows, spec=spec, tuning=record)


SWEEP_PARAMS = ("N", "p", "L", "K", "T", "n1")


def run_sweep(spec, param, values, threads=1):
    if param not in SWEEP_PARAMS:
        raise ValueError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")
    return [(v, run_experiment(spec.replace(**{param: v}), threads)) for v in values]


def sweep_summary_csv(param, results):
    cols = [param, "estimator", "mean_err_to_truth", "se_err_to_truth",
            "mean_err_to_erm", "se_err_to_erm", "spec_hash"]
    lines = [",".join(cols)]
    for value, rep in results:
        aggs = {(a.estimator, a.kind): a for a in rep.aggregates()}
        for est in rep.estimators():
            m, s = aggs[(est, "AGG")], aggs[(est, "AGG_SE")]
            lines.append(",".join(_fmt(x) for x in (
                value, est, m.err_to_truth, s.err_to_truth, m.err_to_erm, s.err_to_erm, rep.spec_hash)))
    return "\n".join(lines) + "\n"
