"""Training-data market simulator: buyer/seller pricing solvers and repeated-game dynamics."""

__version__ = "0.1.0"

from .analysis import compare_strategies, spearman, summarize
from .buyer import max_willingness_to_pay, solve_purchase, will_purchase
from .dynamics import (
    DynamicsState,
    Exploitative,
    Fairshare,
    HorizonPolicyResult,
    ParticipationState,
    RandomBelowFair,
    RatioParticipation,
    Reduced,
    ScenarioConfig,
    SimulationTrace,
    StepRecord,
    TabulatedParticipation,
    check_assumptions,
    fairshare_price_single,
    horizon_optimal_price,
    participation_bound_check,
    price_grid_points,
    run_scenario,
    step_market,
    tradeoff_partial_sums,
    tradeoff_threshold,
)
from .market import (
    BuyerProfile,
    DatasetListing,
    MarketState,
    PurchaseDecision,
    UtilityFunction,
    net_utility,
    validate_market,
)
from .outcomes import (
    DiscreteOutcome,
    LinearOutcome,
    MultiTaskOutcome,
    ZeroOneOutcome,
    map_utility,
)
from .seller import (
    FlatPriceResult,
    ProfitCurve,
    RoyaltyBuyer,
    RoyaltyResult,
    price_flat,
    price_grid,
    price_royalty,
)
from .valuation import (
    Bm25Index,
    Corpus,
    ToyModel,
    ToySample,
    ValuationScore,
    infl_ip,
    ingest_scores,
    normalize_batch,
    oracle_one_step,
    value_bm25,
    value_constant,
    value_random,
)
