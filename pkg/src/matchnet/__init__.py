"""Simulation and stability analysis of stochastic matching networks.

Items of compatible classes arrive as Poisson streams on a graph, are matched
by a (possibly noisy) max-weight style rule or stored, and may abandon after
exponential patience.  The package provides the exact event-driven simulator,
subcriticality checks, closed-form stationary bounds with their drift
evaluators, and an exact truncated-chain oracle for small instances, plus a
command-line front end with experiment presets.
"""

from .bounds import (
    BoundsReport,
    bounds_report,
    drift_f2_rhs,
    drift_f3_rhs,
    f_cubic,
    f_quadratic,
    generator_apply,
    lower_bound_mean,
    upper_bound_mean,
    upper_bound_variance,
)
from .engine import (
    EnsembleSummary,
    SimConfig,
    TrajectoryRecord,
    batch_means,
    record_to_csv,
    run,
    run_ensemble,
    step,
    time_average,
    value_at,
)
from .errors import (
    BoundNotApplicableError,
    InputError,
    MatchnetError,
    NumericalError,
    SizeLimitError,
    UnsupportedModeError,
)
from .graph import Graph, erdos_renyi, is_bipartite, is_connected, max_deficit, neighborhood
from .model import (
    ModelSpec,
    NcondResult,
    arrival_probabilities,
    check_ncond,
    find_stabilizing_lambda,
    is_admissible,
    is_stabilizable,
    load_model,
    validate,
)
from .noise import DIRAC_ZERO, NoiseSpec, abs_tail, u_kappa, u_kappa_single
from .policy import MatchDistribution, PolicyKind, choose_match, match_distribution, mw_score
from .rng import derive_seed, stream

__version__ = "0.1.0"
