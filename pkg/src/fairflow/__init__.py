"""Equilibria, fair path decompositions and efficiency bounds for nonatomic routing games."""

from .decomp import (
    FairnessReport,
    brute_force_best_decomposition,
    check_PNE_acyclic,
    greedy_decomposition,
    measure_fairness,
    remove_positive_cycles,
    sparsify,
)
from .errors import (
    CapabilityError,
    CapacityError,
    ConstructionError,
    ConvergenceError,
    DomainError,
    FairflowError,
    InfeasibleError,
    PreconditionError,
    StructuralError,
    ValidationError,
)
from .fairness import (
    BoundResult,
    LatencyClass,
    check_variational_inequality,
    gamma_of,
    omega,
    poa_upper_bound,
    pos_upper_bound_mm1,
    pos_upper_bound_poly,
    pos_upper_bound_series_parallel,
)
from .latency import MM1, Affine, Constant, LatencyFn, Polynomial
from .model import (
    PositiveThreshold,
    Commodity,
    Edge,
    EdgeFlow,
    Instance,
    PathFlow,
    check_feasible,
    enumerate_paths,
    eval_latency,
    eval_marginal,
    induced_edge_flow,
    path_latency,
    social_cost,
)
from .solvers import (
    PotentialSpec,
    SolveResult,
    SolverConfig,
    bounded_toll_potential,
    design_modified_potential,
    minimize_potential,
    shortest_path,
    solve_nash,
    solve_social_optimum,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
