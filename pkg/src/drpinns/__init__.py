"""Deep Ritz PINN solver for obstacle-type elliptic variational inequalities."""

from .estimator import DeepRitzVI, evaluate_network, oracle_solution
from .fd import GridSolution, interpolate, solve_obstacle_fd
from .losses import (
    LossBreakdown,
    LossWeights,
    boundary_term,
    constraint_term,
    energy_term,
    total_loss,
)
from .metrics import MetricReport, compute_metrics
from .network import (
    NetworkParams,
    forward,
    grad_input,
    grad_params,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .optim import (
    AdamState,
    BoState,
    adam_step,
    bo_update,
    expected_improvement,
    gp_fit,
    propose_weights,
)
from .problems import (
    ProblemSpec,
    evaluate_exact,
    example1,
    example2,
    example3,
    example4,
    load_problem_config,
    make_problem,
    resolve_problem,
)
from .runs import run_ablation, run_training
from .sampling import (
    CollocationSet,
    ResampleConfig,
    latin_hypercube,
    resample,
    sample_boundary,
    sampling_probabilities,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "BoState", "CollocationSet", "DeepRitzVI", "GridSolution",
    "LossBreakdown", "LossWeights", "MetricReport", "NetworkParams",
    "ProblemSpec", "ResampleConfig", "adam_step", "bo_update",
    "boundary_term", "compute_metrics", "constraint_term", "energy_term",
    "evaluate_exact", "evaluate_network", "example1", "example2", "example3",
    "example4", "expected_improvement", "forward", "gp_fit", "grad_input",
    "grad_params", "init_params", "interpolate", "latin_hypercube",
    "load_checkpoint", "load_problem_config", "make_problem",
    "oracle_solution", "propose_weights", "resample", "resolve_problem",
    "run_ablation", "run_training", "sample_boundary",
    "sampling_probabilities", "save_checkpoint", "solve_obstacle_fd",
    "total_loss",
]
