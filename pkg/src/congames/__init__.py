"""Mirror-descent learning dynamics in congestion games.

Bulletin-board dynamics for nonatomic games, episode-based bandit dynamics
for atomic games, certified equilibrium oracles, and the machinery to check
the convergence, equilibrium-approximation, and social-cost guarantees.
"""

from .bandit import (
    BanditConfig,
    BanditParams,
    BanditReport,
    ChoiceVector,
    EpisodeRecord,
    MixedDeltaResult,
    descent_step_check,
    entropy_preset,
    episode_length,
    estimate_gradient,
    euclidean_preset,
    expected_path_costs,
    mixed_delta_bound,
    mixed_delta_gap,
    restrict_profile,
    run_bandit,
    sample_choices,
)
from .bregman import (
    ConfigurationError,
    DivergenceDomainError,
    EntropyGeometry,
    EuclideanGeometry,
    FeasibleSet,
    make_geometry,
    project_simplex,
)
from .bulletin import (
    BulletinConfig,
    BulletinReport,
    OracleMinima,
    SocialRatioReport,
    delta_equilibrium_gap,
    equilibrium_gap_bound,
    regret,
    run_bulletin,
    social_ratio_report,
    theorem_delta_gap,
)
from .costs import CostValidationError, PolynomialCost, validate_cost
from .game import (
    CongestionGame,
    FlowProfile,
    GameStructureError,
    SmoothnessParams,
    parallel_links_game,
)
from .gamefile import GameFileError, parse_game, parse_game_text, render_game
from .generator import generate_random_game
from .minimize import (
    CertifiedMinimum,
    MaxCostMinimum,
    min_average_cost,
    min_max_cost,
    reference_minimizer,
)

__version__ = "0.1.0"

__all__ = [
    "BanditConfig",
    "BanditParams",
    "BanditReport",
    "BulletinConfig",
    "BulletinReport",
    "CertifiedMinimum",
    "ChoiceVector",
    "CongestionGame",
    "ConfigurationError",
    "CostValidationError",
    "DivergenceDomainError",
    "EntropyGeometry",
    "EpisodeRecord",
    "EuclideanGeometry",
    "FeasibleSet",
    "FlowProfile",
    "GameFileError",
    "GameStructureError",
    "MaxCostMinimum",
    "MixedDeltaResult",
    "OracleMinima",
    "PolynomialCost",
    "SmoothnessParams",
    "SocialRatioReport",
    "delta_equilibrium_gap",
    "descent_step_check",
    "entropy_preset",
    "episode_length",
    "equilibrium_gap_bound",
    "estimate_gradient",
    "euclidean_preset",
    "expected_path_costs",
    "generate_random_game",
    "make_geometry",
    "min_average_cost",
    "min_max_cost",
    "mixed_delta_bound",
    "mixed_delta_gap",
    "parallel_links_game",
    "parse_game",
    "parse_game_text",
    "project_simplex",
    "reference_minimizer",
    "regret",
    "render_game",
    "restrict_profile",
    "run_bandit",
    "run_bulletin",
    "sample_choices",
    "social_ratio_report",
    "theorem_delta_gap",
    "validate_cost",
]
