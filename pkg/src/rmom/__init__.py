"""Geodesically convex optimization with momentum on Riemannian
manifolds: manifolds, curvature constants, optimizers, benchmark
problems and a runtime certifier for the convergence-proof inequalities.
"""

from .curvature import (
    CurvatureBounds,
    CurvatureConstants,
    accel_horizon,
    delta,
    discrepancy,
    rgd_dominance_check,
    zeta,
)
from .manifolds import SPD, Euclidean, ManifoldDomainError, Sphere
from .optimizers import (
    IterRecord,
    NumericalAbort,
    OptConfig,
    OptState,
    RestartConfig,
    Trace,
    a_next,
    ragdsdr_step,
    rgd_step,
    run_ragd,
    run_ragdsdr,
    run_restarted,
    run_rgd,
)
from .problems import (
    KarcherProblem,
    RayleighProblem,
    ScalingProblem,
    gen_rayleigh,
    gen_scaling,
    gen_spd_set,
)
from .search import SearchConfig, SearchResult, golden_section, search_geodesic, verify_conditions

__all__ = [
    "CurvatureBounds",
    "CurvatureConstants",
    "Euclidean",
    "IterRecord",
    "KarcherProblem",
    "ManifoldDomainError",
    "NumericalAbort",
    "OptConfig",
    "OptState",
    "RayleighProblem",
    "RestartConfig",
    "SPD",
    "ScalingProblem",
    "SearchConfig",
    "SearchResult",
    "Sphere",
    "Trace",
    "a_next",
    "accel_horizon",
    "delta",
    "discrepancy",
    "gen_rayleigh",
    "gen_scaling",
    "gen_spd_set",
    "golden_section",
    "ragdsdr_step",
    "rgd_dominance_check",
    "rgd_step",
    "run_ragd",
    "run_ragdsdr",
    "run_restarted",
    "run_rgd",
    "search_geodesic",
    "verify_conditions",
    "zeta",
]

__version__ = "0.1.0"
