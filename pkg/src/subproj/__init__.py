"""Exact and iterative projections onto submodular base polytopes.

Projection solvers (pool-adjacent-violators for cardinality-based functions,
away-step Frank-Wolfe with a tight-set toolkit for the general case),
Monte Carlo projection-geometry checks, and an online-learning harness.
"""

from .core import (
    CardinalityFunction,
    Chain,
    CoverageFunction,
    ExplicitFunction,
    LevelPartition,
    ProjectionResult,
    SubmodularFunction,
    ValidationReport,
    load_function,
    minimal_face_certificate,
    permutahedron,
    validate_submodular,
)
from .divergence import DomainError, MirrorMap, bregman, get_map, pool
from .fw import ALL_TOOLS, ActiveSet, SolverOptions, a2fw_project, afw_project, line_search
from .geometry import (
    BallSpec,
    MCEstimate,
    PerturbVerdict,
    check_perturb_conditions,
    face_safety_radii,
    mc_same_face,
    mc_vertex_fraction,
    sample_ball,
    substream,
)
from .linopt import edmonds_greedy, enumerate_vertices, face_greedy
from .online import LossStream, RunTrace, generate_losses, ofw_fpl_run, omd_run
from .pav import bruteforce_project, pav_project
from .toolkit import (
    InferredChain,
    RationalGrid,
    RoundingError,
    RoundingResult,
    find_violated_set,
    infer_from_iterate,
    infer_from_previous,
    membership,
    relax_check,
    reuse_decision,
    round_rational,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_TOOLS",
    "ActiveSet",
    "BallSpec",
    "CardinalityFunction",
    "Chain",
    "CoverageFunction",
    "DomainError",
    "ExplicitFunction",
    "InferredChain",
    "LevelPartition",
    "LossStream",
    "MCEstimate",
    "MirrorMap",
    "PerturbVerdict",
    "ProjectionResult",
    "RationalGrid",
    "RoundingError",
    "RoundingResult",
    "RunTrace",
    "SolverOptions",
    "SubmodularFunction",
    "ValidationReport",
    "a2fw_project",
    "afw_project",
    "bregman",
    "bruteforce_project",
    "check_perturb_conditions",
    "edmonds_greedy",
    "enumerate_vertices",
    "face_greedy",
    "face_safety_radii",
    "find_violated_set",
    "generate_losses",
    "get_map",
    "infer_from_iterate",
    "infer_from_previous",
    "line_search",
    "load_function",
    "mc_same_face",
    "mc_vertex_fraction",
    "membership",
    "minimal_face_certificate",
    "ofw_fpl_run",
    "omd_run",
    "pav_project",
    "permutahedron",
    "pool",
    "relax_check",
    "reuse_decision",
    "round_rational",
    "sample_ball",
    "substream",
    "validate_submodular",
]
