"""Space-filling input design for dynamical systems.

Optimizes the parameters of an excitation signal so that the simulated
state-input trajectory of a system covers a region of interest, by
minimizing the mean Gaussian-process posterior variance at a grid of
anchor points.  Coverage is scored by the weighted filling distance.
"""

from .design import (
    DesignProblem,
    design_cost,
    design_cost_gradient,
    design_cost_with_gradient,
)
from .dynamics import (
    MsdParams,
    SystemModel,
    Trajectory,
    continuous_system,
    lti_from_continuous,
    lti_system,
    msd_field_jacobians,
    msd_system,
    msd_vector_field,
    reachability_advisory,
    rk4_step,
    rollout,
    trajectory_to_csv,
    zoh_discretize,
)
from .errors import (
    ConfigurationError,
    DatasetParseError,
    EmptyDatasetError,
    HorizonError,
    IllConditionedGramError,
    IntegrationDivergedError,
    JacobiansUnavailableError,
    TrajectoryDivergedError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    RunRecord,
    VariantResult,
    evaluate_dataset,
    report_to_json,
    report_to_mapping,
    run_experiment,
    schroeder_baseline,
)
from .gp import (
    AnchorSet,
    Dataset,
    KernelConfig,
    anchor_variances,
    default_jitter,
    gram_matrix,
    mean_anchor_variance,
    posterior_mean,
    posterior_variance,
    seard_kernel,
)
from .optimize import (
    IterationRecord,
    OptimizationTrace,
    OptimizerConfig,
    gradient_check,
    optimize,
    trace_to_csv,
)
from .regions import (
    MetricWeight,
    RegionOfInterest,
    anchor_epsilon,
    evaluation_grid,
    filling_distance,
    largest_empty_ball,
    points_from_csv,
    points_to_csv,
    uniform_anchor_grid,
)
from .signals import (
    FreeFormSignal,
    InputSignal,
    MultisineSignal,
    PiecewiseConstantSignal,
    project_theta,
    schroeder_multisine,
    signal_to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "ConfigurationError",
    "Dataset",
    "DatasetParseError",
    "DesignProblem",
    "EmptyDatasetError",
    "ExperimentConfig",
    "ExperimentReport",
    "FreeFormSignal",
    "HorizonError",
    "IllConditionedGramError",
    "InputSignal",
    "IntegrationDivergedError",
    "IterationRecord",
    "JacobiansUnavailableError",
    "KernelConfig",
    "MetricWeight",
    "MsdParams",
    "MultisineSignal",
    "OptimizationTrace",
    "OptimizerConfig",
    "PiecewiseConstantSignal",
    "RegionOfInterest",
    "RunRecord",
    "SystemModel",
    "Trajectory",
    "TrajectoryDivergedError",
    "VariantResult",
    "anchor_epsilon",
    "anchor_variances",
    "continuous_system",
    "default_jitter",
    "design_cost",
    "design_cost_gradient",
    "design_cost_with_gradient",
    "evaluate_dataset",
    "evaluation_grid",
    "filling_distance",
    "gradient_check",
    "gram_matrix",
    "largest_empty_ball",
    "lti_from_continuous",
    "lti_system",
    "mean_anchor_variance",
    "msd_field_jacobians",
    "msd_system",
    "msd_vector_field",
    "optimize",
    "points_from_csv",
    "points_to_csv",
    "posterior_mean",
    "posterior_variance",
    "project_theta",
    "reachability_advisory",
    "report_to_json",
    "report_to_mapping",
    "rk4_step",
    "rollout",
    "run_experiment",
    "schroeder_baseline",
    "schroeder_multisine",
    "seard_kernel",
    "signal_to_csv",
    "trace_to_csv",
    "trajectory_to_csv",
    "uniform_anchor_grid",
    "zoh_discretize",
]
