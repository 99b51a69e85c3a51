"""Partial server pooling between two providers with replicated jobs.

Exact and simulated waiting probabilities and mean response times for
cancel-on-complete and cancel-on-start replication, Pareto frontiers
over sharing configurations and the Kalai-Smorodinsky bargaining point.
"""
from .coc import (
    RateRegion,
    bf_occupancy_oracle,
    mean_response_coc,
    mean_response_overall,
    mean_response_pair,
    normalization_G,
    pareto_coc,
    single_server_metrics,
)
from .cos import (
    ServerClasses,
    blocked_rate,
    mixed_config_metrics,
    solve_assignment_rates,
    stationary_normalization,
    waiting_probabilities,
)
from .ctmc import typed_ctmc_oracle
from .erlang import erlang_b, erlang_c, invert_erlang_c, provider_from_wait, standalone_delay
from .estimators import CocPoolingModel, CosPoolingModel, ParetoFrontierSearch
from .exceptions import (
    ConfigError,
    DomainError,
    InstabilityError,
    NoFrontierError,
    PoolingError,
)
from .pareto import (
    FrontierStructure,
    ParetoPoint,
    boundary_direction_check,
    conjecture_check,
    ksbs,
    mixture_sign_constants,
    pareto_frontier,
    unit_frontier_closed_form,
)
from .params import MetricPair, ProviderParams, SharingConfig

__version__ = "0.1.0"

__all__ = [
    "CocPoolingModel",
    "ConfigError",
    "CosPoolingModel",
    "DomainError",
    "FrontierStructure",
    "InstabilityError",
    "MetricPair",
    "NoFrontierError",
    "ParetoFrontierSearch",
    "ParetoPoint",
    "PoolingError",
    "ProviderParams",
    "RateRegion",
    "ServerClasses",
    "SharingConfig",
    "bf_occupancy_oracle",
    "blocked_rate",
    "boundary_direction_check",
    "conjecture_check",
    "erlang_b",
    "erlang_c",
    "invert_erlang_c",
    "ksbs",
    "mixture_sign_constants",
    "mean_response_coc",
    "mean_response_overall",
    "mean_response_pair",
    "mixed_config_metrics",
    "normalization_G",
    "pareto_coc",
    "pareto_frontier",
    "provider_from_wait",
    "single_server_metrics",
    "solve_assignment_rates",
    "standalone_delay",
    "stationary_normalization",
    "unit_frontier_closed_form",
    "typed_ctmc_oracle",
    "waiting_probabilities",
]
