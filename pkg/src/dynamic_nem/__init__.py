"""Dynamic NEM pricing for energy communities."""

from .core import (
    Community,
    Device,
    DeviceBounds,
    Member,
    NemTariff,
    QuadraticUtility,
    clamped_demand,
    inverse_marginal_utility,
    marginal_utility,
    utility_value,
)
from .pricing import (
    CommunityPrice,
    Thresholds,
    Zone,
    aggregate_demand_at_price,
    benchmark_payment,
    community_payment,
    community_price,
    compute_thresholds,
    member_payment,
    solve_net_zero_price,
)
from .welfare import (
    MemberOutcome,
    Outcome,
    benchmark_standalone_optimum,
    centralized_optimum,
    decentralized_outcome,
    member_best_response,
    optimal_aggregate_consumption,
    surplus_gain,
)
from .axioms import Axiom, AxiomReport, audit

__version__ = "0.1.0"
