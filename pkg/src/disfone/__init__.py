"""First-order distributed estimation: mini-batch SGD, divide-and-conquer SGD,
FONE (a first-order Newton-type estimator) and its multi-round distributed
variant, plus Sigma^{-1} w inference and a replicated-experiment harness."""

from ._kernels import backend
from .data import (
    Cluster,
    CommLedger,
    GeneratedProblem,
    derive_seed,
    dump_csv,
    even_sizes,
    first_heavy_sizes,
    generate_problem,
    load_csv,
    shard_dataset,
)
from .design import DesignSpec
from .distributed import (
    DistributedFoneConfig,
    aggregate_subgradient,
    run_dcsgd,
    run_distributed_fone,
)
from .erm import ErmResult, initial_estimator, solve_erm
from .fone import (
    FoneConfig,
    FoneDivergenceError,
    FoneOutput,
    estimate_limiting_variance,
    estimate_sigma_inv_w,
    run_fone,
)
from .harness import (
    ExperimentReport,
    ExperimentSpec,
    emit_report,
    parse_report_csv,
    run_experiment,
)
from .models import (
    Dataset,
    LossModel,
    PopulationOracle,
    Sample,
    averaged_subgradient,
    empirical_risk,
    loss,
    population_oracle,
    subgradient,
)
from .sgd import SgdConfig, SgdSchedule, run_minibatch_sgd, step_size
from .tuning import CandidateGrid, TuningError, select_scale_constant

__version__ = "0.1.0"
