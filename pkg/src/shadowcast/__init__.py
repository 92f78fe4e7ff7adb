"""Locate a cylindrical obstacle in an indoor VLC cell from LOS blockage.

The package simulates blockage indicators over the links between user
transmitters and a ceiling grid of photodetectors, then estimates the
obstacle's center and radius with a maximum-likelihood grid search or a
guard-constrained least-squares (KKT active-set) solver, and reproduces
the Monte Carlo RMSE and outage studies.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateLink,
    InvalidGrid,
    Outage,
    SamplingExhausted,
    ShadowcastError,
)
from .geometry import (
    LinkKind,
    LinkLine,
    Point2,
    Point3,
    distance_vector,
    intersect_lines,
    line_offset,
    project_link,
    projection_param,
    segment_distance,
)
from .harness import (
    MetricsRow,
    ScenarioConfig,
    SweepPoint,
    TrialResult,
    derive_trial_seed,
    run_monte_carlo,
    run_sweep,
    run_trial,
    run_trial_detailed,
)
from .likelihood import (
    GridSpec,
    link_log_likelihood,
    ml_grid_search,
    q_function,
    total_log_likelihood,
)
from .qp import (
    KktSolution,
    QpProblem,
    active_constraints,
    build_problem,
    estimate_radius,
    feasible_intersections,
    mmse_estimate,
    objective,
    solve_on_constraint,
    truncated_normal_mean,
    unconstrained_minimum,
)
from .scene import (
    Cylinder,
    ObservationSet,
    PdGrid,
    RadiusPrior,
    Room,
    blocks,
    pd_grid_positions,
    poisson_disk_sample,
    simulate_observations,
)

__all__ = [
    "__version__",
    "ConfigError",
    "Cylinder",
    "DegenerateLink",
    "GridSpec",
    "InvalidGrid",
    "KktSolution",
    "LinkKind",
    "LinkLine",
    "MetricsRow",
    "ObservationSet",
    "Outage",
    "PdGrid",
    "Point2",
    "Point3",
    "QpProblem",
    "RadiusPrior",
    "Room",
    "SamplingExhausted",
    "ScenarioConfig",
    "ShadowcastError",
    "SweepPoint",
    "TrialResult",
    "active_constraints",
    "blocks",
    "build_problem",
    "derive_trial_seed",
    "distance_vector",
    "estimate_radius",
    "feasible_intersections",
    "intersect_lines",
    "line_offset",
    "link_log_likelihood",
    "ml_grid_search",
    "mmse_estimate",
    "objective",
    "pd_grid_positions",
    "poisson_disk_sample",
    "project_link",
    "projection_param",
    "q_function",
    "run_monte_carlo",
    "run_sweep",
    "run_trial",
    "run_trial_detailed",
    "segment_distance",
    "simulate_observations",
    "solve_on_constraint",
    "total_log_likelihood",
    "truncated_normal_mean",
    "unconstrained_minimum",
]
