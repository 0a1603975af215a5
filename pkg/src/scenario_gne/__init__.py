"""Robustness certificates for equilibrium sets of quadratic aggregative
games whose coupling constraints are built from sampled uncertainty.

The public surface mirrors the pipeline: define a game (game), pool it
with sampled halfspaces (scenario), solve for one equilibrium and the set
invariants (equilibrium), count the supporting samples and bound the
violation probability (scenario), then validate the bound empirically
(validation).
"""

__version__ = "0.1.0"

from .equilibrium import (
    EquilibriumInvariants,
    VIProblem,
    compute_invariants,
    is_equilibrium,
    solve_vi,
)
from .errors import (
    ConfigError,
    DimensionError,
    EmptyEquilibriumSetError,
    InfeasibleSystemError,
    NonSegmentSetError,
    NumericalError,
    RayTerminationError,
    ScenarioGneError,
    UnboundedSystemError,
)
from .game import (
    AggregativeGame,
    Monotonicity,
    PlayerSpec,
    assemble_game,
    box_rows,
    check_monotone,
    game_from_document,
    game_from_json,
)
from .lp import (
    FeasibilityResult,
    LinearProgram,
    LpOutcome,
    LpStatus,
    Tolerances,
    check_feasible,
    solve_lp,
)
from .polytope import (
    HalfspaceSystem,
    active_samples,
    extent_along,
    support_value,
    support_witness,
)
from .scenario import (
    Certificate,
    SamplerSpec,
    Scenario,
    ScenarioProgram,
    SupportResult,
    build_program,
    certify,
    epsilon_defining_sum,
    epsilon_even_split,
    epsilon_from_weights,
    sample_scenarios,
    support_subsample_count,
)
from .validation import (
    SweepResult,
    ViolationReport,
    empirical_violation,
    grid_equilibrium_set,
    sweep_normalized_length,
)

__all__ = [
    "__version__",
    "AggregativeGame",
    "Certificate",
    "ConfigError",
    "DimensionError",
    "EmptyEquilibriumSetError",
    "EquilibriumInvariants",
    "FeasibilityResult",
    "HalfspaceSystem",
    "InfeasibleSystemError",
    "LinearProgram",
    "LpOutcome",
    "LpStatus",
    "Monotonicity",
    "NonSegmentSetError",
    "NumericalError",
    "PlayerSpec",
    "RayTerminationError",
    "SamplerSpec",
    "Scenario",
    "ScenarioGneError",
    "ScenarioProgram",
    "SupportResult",
    "SweepResult",
    "Tolerances",
    "UnboundedSystemError",
    "VIProblem",
    "ViolationReport",
    "active_samples",
    "assemble_game",
    "box_rows",
    "build_program",
    "certify",
    "check_feasible",
    "check_monotone",
    "compute_invariants",
    "empirical_violation",
    "epsilon_defining_sum",
    "epsilon_even_split",
    "epsilon_from_weights",
    "extent_along",
    "game_from_document",
    "game_from_json",
    "grid_equilibrium_set",
    "is_equilibrium",
    "sample_scenarios",
    "solve_lp",
    "solve_vi",
    "support_subsample_count",
    "support_value",
    "support_witness",
    "sweep_normalized_length",
]
