"""Repeated-game market dynamics.

Each step, active sellers arrive in shuffled order with a fresh synthetic
dataset, compute the profit-maximizing flat price against the market listed so
far, then post a strategy-transformed price. Buyers purchase once all sellers
have listed. A seller paid below its profit-maximizing price becomes less
likely to keep participating; the survival probability is the running product
of per-step participation factors, and exits are irreversible.

The single buyer/seller infinite-horizon analysis lives here too: the
per-horizon optimal constant price, the horizon threshold where honest pricing
overtakes any underpaying price stream, and the survival lower bound check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .buyer import solve_purchase
from .errors import ConfigurationError, ParameterError
from .market import BuyerProfile, DatasetListing, MarketState
from .outcomes import LinearOutcome, OutcomeMapping, map_utility
from .seller import price_flat


# ---------------------------------------------------------------------------
# Participation models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioParticipation:
    """Participation probability equal to the posted/fair price ratio."""

    kind: str = "ratio"

    def probability(self, price: float, fair_price: float) -> float:
        if fair_price <= 0:
            return 1.0  # a worthless dataset cannot be underpaid
        return min(max(price / fair_price, 0.0), 1.0)

    def lipschitz_lower(self, fair_price_max: float) -> float:
        return 1.0 / fair_price_max


@dataclass(frozen=True)
class TabulatedParticipation:
    """Piecewise-linear participation over the posted/fair price ratio.

    Points are (ratio, probability) pairs; a valid curve starts at (0, 0),
    ends at (1, 1) and is strictly increasing.
    """

    points: tuple[tuple[float, float], ...]
    kind: str = "tabulated"

    def __post_init__(self):
        if len(self.points) < 2:
            raise ConfigurationError("tabulated participation needs at least two points")
        xs = [x for x, _ in self.points]
        ys = [y for _, y in self.points]
        if any(a >= b for a, b in zip(xs, xs[1:])) or any(a >= b for a, b in zip(ys, ys[1:])):
            raise ConfigurationError("tabulated participation must be strictly increasing")

    def probability(self, price: float, fair_price: float) -> float:
        if fair_price <= 0:
            return 1.0
        ratio = min(max(price / fair_price, 0.0), 1.0)
        xs = [x for x, _ in self.points]
        ys = [y for _, y in self.points]
        if ratio <= xs[0]:
            return ys[0]
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            if ratio <= x1:
                return y0 + (y1 - y0) * (ratio - x0) / (x1 - x0)
        return ys[-1]

    def lipschitz_lower(self, fair_price_max: float) -> float:
        slopes = [
            (y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(self.points, self.points[1:])
        ]
        return min(slopes) / fair_price_max


ParticipationModel = Union[RatioParticipation, TabulatedParticipation]


@dataclass
class ParticipationState:
    """Per-seller survival bookkeeping; exits never reverse."""

    seller_id: str
    survival_product: float = 1.0
    active: bool = True
    exit_time: int | None = None


# ---------------------------------------------------------------------------
# Pricing strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Fairshare:
    def posted_price(self, fair_price: float, avg_utility: float, rng) -> float:
        return fair_price

    @property
    def label(self) -> str:
        return "fairshare"


@dataclass(frozen=True)
class Reduced:
    factor: float

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ParameterError(f"reduced factor must be in (0, 1), got {self.factor}")

    def posted_price(self, fair_price: float, avg_utility: float, rng) -> float:
        return self.factor * fair_price

    @property
    def label(self) -> str:
        return f"reduced({self.factor})"


@dataclass(frozen=True)
class RandomBelowFair:
    def posted_price(self, fair_price: float, avg_utility: float, rng) -> float:
        if fair_price <= 0:
            return 0.0
        return float(rng.uniform(0.0, fair_price))

    @property
    def label(self) -> str:
        return "random-below-fair"


@dataclass(frozen=True)
class Exploitative:
    """Fixed low price: a fraction of the dataset's average per-buyer utility."""

    fraction: float

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ParameterError(f"exploitative fraction must be in (0, 1), got {self.fraction}")

    def posted_price(self, fair_price: float, avg_utility: float, rng) -> float:
        return self.fraction * avg_utility

    @property
    def label(self) -> str:
        return f"exploitative({self.fraction})"


PricingStrategy = Union[Fairshare, Reduced, RandomBelowFair, Exploitative]


# ---------------------------------------------------------------------------
# Scenario configuration and trace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    num_buyers: int
    num_sellers: int
    horizon: int
    discount: float
    seed: int
    budget_bands: tuple[tuple[float, float], ...]
    strategy: PricingStrategy
    participation: ParticipationModel
    mode: str = "expected"  # "expected" carries survival weights; "stochastic" samples exits
    seller_cost: float = 0.0
    utility_mapping: OutcomeMapping = LinearOutcome(gamma=1.0, beta=0.5)

    def violations(self) -> list[str]:
        problems = []
        if self.num_buyers < 1:
            problems.append("need at least one buyer")
        if self.num_sellers < 1:
            problems.append("need at least one seller")
        if self.horizon < 0:
            problems.append("horizon must be >= 0")
        if not 0.0 < self.discount < 1.0:
            problems.append(f"discount factor must be in (0, 1), got {self.discount}")
        if len(self.budget_bands) != self.num_buyers:
            problems.append(
                f"{len(self.budget_bands)} budget bands for {self.num_buyers} buyers"
            )
        for k, (lo, hi) in enumerate(self.budget_bands):
            if not (0.0 <= lo < hi <= 1.0):
                problems.append(f"budget band {k} must satisfy 0 <= low < high <= 1, got ({lo}, {hi})")
        if self.mode not in ("expected", "stochastic"):
            problems.append(f"sampling mode must be 'expected' or 'stochastic', got {self.mode!r}")
        if self.seller_cost < 0:
            problems.append("seller cost must be >= 0")
        for v in (0.0, 0.25, 0.5, 0.75, 1.0):
            try:
                value = map_utility(self.utility_mapping, v)
            except Exception as exc:  # mapping must cover [0, 1]
                problems.append(f"utility mapping rejects score {v}: {exc}")
                continue
            if not math.isfinite(value) or value < 0:
                problems.append(f"utility mapping gives invalid utility {value} at score {v}")
        return problems

    @property
    def buyer_ids(self) -> tuple[str, ...]:
        return tuple(f"b{k + 1}" for k in range(self.num_buyers))

    @property
    def seller_ids(self) -> tuple[str, ...]:
        width = len(str(self.num_sellers))
        return tuple(f"s{j + 1:0{width}d}" for j in range(self.num_sellers))


@dataclass(frozen=True)
class StepRecord:
    step: int
    active_sellers: float
    buyer_net: dict[str, float]
    buyer_spend: dict[str, float]
    buyer_cumulative: dict[str, float]
    seller_fair: dict[str, float]
    seller_posted: dict[str, float]
    seller_revenue: dict[str, float]
    seller_profit_cumulative: dict[str, float]
    seller_survival: dict[str, float]


@dataclass(frozen=True)
class SimulationTrace:
    config: ScenarioConfig
    records: tuple[StepRecord, ...]

    def final_buyer_cumulative(self) -> dict[str, float]:
        if not self.records:
            return {b: 0.0 for b in self.config.buyer_ids}
        return dict(self.records[-1].buyer_cumulative)

    def final_seller_profit(self) -> dict[str, float]:
        if not self.records:
            return {s: 0.0 for s in self.config.seller_ids}
        return dict(self.records[-1].seller_profit_cumulative)

    def active_series(self) -> list[float]:
        return [r.active_sellers for r in self.records]


@dataclass
class DynamicsState:
    """Mutable engine state threaded through step_market calls."""

    config: ScenarioConfig
    rng: np.random.Generator
    time: int = 0
    participation: dict[str, ParticipationState] = field(default_factory=dict)
    buyer_cumulative: dict[str, float] = field(default_factory=dict)
    seller_profit: dict[str, float] = field(default_factory=dict)

    @classmethod
    def fresh(cls, config: ScenarioConfig) -> "DynamicsState":
        state = cls(config=config, rng=np.random.default_rng(config.seed))
        for s in config.seller_ids:
            state.participation[s] = ParticipationState(seller_id=s)
        for b in config.buyer_ids:
            state.buyer_cumulative[b] = 0.0
        for s in config.seller_ids:
            state.seller_profit[s] = 0.0
        return state


def step_market(state: DynamicsState) -> StepRecord:
    """Advance the market by one step and return its trace record."""
    cfg = state.config
    t = state.time
    if cfg.mode == "stochastic":
        listing_sellers = [s for s in cfg.seller_ids if state.participation[s].active]
    else:
        listing_sellers = list(cfg.seller_ids)

    buyer_net = {b: 0.0 for b in cfg.buyer_ids}
    buyer_spend = {b: 0.0 for b in cfg.buyer_ids}
    seller_fair: dict[str, float] = {}
    seller_posted: dict[str, float] = {}
    seller_revenue: dict[str, float] = {}

    if listing_sellers:
        # Fresh synthetic datasets: a uniform score per (seller, buyer) mapped to utility.
        utilities: dict[str, dict[str, float]] = {}
        for s in listing_sellers:
            utilities[s] = {
                b: float(map_utility(cfg.utility_mapping, state.rng.uniform(0.0, 1.0)))
                for b in cfg.buyer_ids
            }
        totals = {
            b: sum(utilities[s][b] for s in listing_sellers) for b in cfg.buyer_ids
        }
        budgets = {
            b: float(state.rng.uniform(lo, hi)) * totals[b]
            for b, (lo, hi) in zip(cfg.buyer_ids, cfg.budget_bands)
        }
        buyers = tuple(BuyerProfile(buyer_id=b, budget=budgets[b]) for b in cfg.buyer_ids)

        order = [listing_sellers[i] for i in state.rng.permutation(len(listing_sellers))]
        listed: list[DatasetListing] = []
        for s in order:
            listing = DatasetListing(
                dataset_id=f"{s}-t{t}",
                seller_id=s,
                cost=cfg.seller_cost,
                per_buyer_utility=utilities[s],
            )
            snapshot = MarketState(time=t, listings=tuple(listed), buyers=buyers)
            result = price_flat(listing, snapshot)
            fair = result.price if result.price is not None else 0.0
            avg_utility = sum(utilities[s].values()) / len(utilities[s])
            posted = cfg.strategy.posted_price(fair, avg_utility, state.rng)
            posted = min(max(posted, 0.0), fair)  # participation is defined on [0, fair]
            seller_fair[s] = fair
            seller_posted[s] = posted
            listed.append(listing.priced(posted))

        final_market = MarketState(time=t, listings=tuple(listed), buyers=buyers)
        demand_by_index = [0] * len(listed)
        for buyer in buyers:
            u = final_market.utility_for(buyer.buyer_id)
            decision = solve_purchase(u, final_market.price_vector, buyer.budget)
            buyer_net[buyer.buyer_id] = decision.net_utility
            buyer_spend[buyer.buyer_id] = decision.total_spend
            for i, bit in enumerate(decision.selection):
                demand_by_index[i] += bit

        for i, listing in enumerate(listed):
            s = listing.seller_id
            revenue = (listing.price or 0.0) * demand_by_index[i]
            seller_revenue[s] = revenue
            state.seller_profit[s] += revenue - cfg.seller_cost

        # Participation responds to posted vs. fair price; exits are permanent.
        for s in listing_sellers:
            factor = cfg.participation.probability(seller_posted[s], seller_fair[s])
            p_state = state.participation[s]
            p_state.survival_product *= factor
            if cfg.mode == "stochastic" and p_state.active:
                if state.rng.uniform(0.0, 1.0) >= factor:
                    p_state.active = False
                    p_state.exit_time = t

    for b in cfg.buyer_ids:
        state.buyer_cumulative[b] += (cfg.discount ** t) * buyer_net[b]

    if cfg.mode == "stochastic":
        active = float(sum(1 for s in cfg.seller_ids if state.participation[s].active))
    else:
        active = float(sum(state.participation[s].survival_product for s in cfg.seller_ids))

    record = StepRecord(
        step=t,
        active_sellers=active,
        buyer_net=buyer_net,
        buyer_spend=buyer_spend,
        buyer_cumulative=dict(state.buyer_cumulative),
        seller_fair=seller_fair,
        seller_posted=seller_posted,
        seller_revenue=seller_revenue,
        seller_profit_cumulative=dict(state.seller_profit),
        seller_survival={
            s: state.participation[s].survival_product for s in cfg.seller_ids
        },
    )
    state.time += 1
    return record


def run_scenario(config: ScenarioConfig) -> SimulationTrace:
    """Run the full horizon; fully deterministic for a given config and seed."""
    problems = config.violations()
    if problems:
        raise ConfigurationError("; ".join(problems))
    state = DynamicsState.fresh(config)
    records = tuple(step_market(state) for _ in range(config.horizon))
    return SimulationTrace(config=config, records=records)


# ---------------------------------------------------------------------------
# Assumption validation
# ---------------------------------------------------------------------------


def _as_stream(value, length: int, name: str) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)] * length
    stream = [float(v) for v in value]
    if len(stream) < length:
        raise ParameterError(f"{name} stream has {len(stream)} entries, need {length}")
    return stream[:length]


def check_assumptions(
    participation: ParticipationModel,
    utilities,
    budgets,
    discount: float,
) -> list[str]:
    """Check the participation-boundary, sensitivity and discount conditions.

    Violations come back as data; an empty list means all assumptions hold.
    """
    violations: list[str] = []
    u_list = [float(utilities)] if isinstance(utilities, (int, float)) else [float(v) for v in utilities]
    b_list = [float(budgets)] if isinstance(budgets, (int, float)) else [float(v) for v in budgets]
    if len(u_list) != len(b_list):
        if len(u_list) == 1:
            u_list = u_list * len(b_list)
        elif len(b_list) == 1:
            b_list = b_list * len(u_list)
        else:
            violations.append(
                f"utility stream has {len(u_list)} entries but budget stream has {len(b_list)}"
            )
            return violations

    fair_prices = [fairshare_price_single(u, b) for u, b in zip(u_list, b_list)]
    fair_max = max(fair_prices)
    if fair_max <= 0:
        violations.append("every fair price is zero; participation boundary conditions undefined")
        return violations

    zero = participation.probability(0.0, fair_max)
    if abs(zero) > 1e-12:
        violations.append(f"participation at zero price must be 0, got {zero}")
    full = participation.probability(fair_max, fair_max)
    if abs(full - 1.0) > 1e-12:
        violations.append(f"participation at the fair price must be 1, got {full}")
    grid = [fair_max * k / 10.0 for k in range(11)]
    probs = [participation.probability(p, fair_max) for p in grid]
    if any(a >= b for a, b in zip(probs, probs[1:])):
        violations.append("participation must be strictly increasing on [0, fair price]")

    if not 0.0 < discount < 1.0:
        violations.append(f"discount factor must be in (0, 1), got {discount}")

    margin = min(u - p for u, p in zip(u_list, fair_prices))
    sensitivity = participation.lipschitz_lower(fair_max)
    if margin <= 0:
        violations.append(
            f"expected per-step surplus min(u - fair price) = {margin} must be positive "
            "for the discount bound to be satisfiable"
        )
    else:
        bound = 1.0 / (1.0 + sensitivity * margin)
        if discount < bound - 1e-12:
            violations.append(
                f"discount factor {discount} below required bound {bound:.6f} "
                f"(sensitivity {sensitivity:.6f}, surplus {margin:.6f})"
            )
    return violations


# ---------------------------------------------------------------------------
# Single-pair horizon analysis
# ---------------------------------------------------------------------------


def fairshare_price_single(utility: float, budget: float) -> float:
    """Profit-maximizing single-pair price: the smaller of utility and budget."""
    return min(utility, budget)


@dataclass(frozen=True)
class HorizonPolicyResult:
    horizon: int
    price: float
    value: float


def horizon_optimal_price(
    utility: float,
    budget: float,
    discount: float,
    participation: ParticipationModel,
    horizon: int,
    grid: Sequence[float],
) -> HorizonPolicyResult:
    """Best constant price over a finite horizon, by direct summation.

    The objective for price p is sum over t < T of (discount * pi(p))^t * (u - p):
    survival compounds multiplicatively, so underpricing trades future
    transactions for present surplus. Ties break toward the highest price.
    """
    if not grid:
        raise ParameterError("price grid is empty")
    fair = fairshare_price_single(utility, budget)
    for p in grid:
        if p < 0 or p > fair + 1e-12:
            raise ParameterError(f"grid price {p} outside [0, fair price {fair}]")
    best_price = None
    best_value = -math.inf
    for p in sorted(grid):
        stay = participation.probability(p, fair)
        weight = 1.0
        value = 0.0
        for _ in range(horizon):
            value += weight * (utility - p)
            weight *= discount * stay
        if value >= best_value:  # >= so ties keep the highest price
            best_value = value
            best_price = p
    return HorizonPolicyResult(horizon=horizon, price=float(best_price), value=best_value)


def price_grid_points(fair_price: float, step: float) -> list[float]:
    """Evenly spaced candidate prices over [0, fair_price], endpoint included exactly."""
    if step <= 0:
        raise ParameterError(f"grid step must be > 0, got {step}")
    n = int(math.floor(fair_price / step + 1e-9))
    points = [k * step for k in range(n + 1)]
    if fair_price - points[-1] > 1e-9:
        points.append(fair_price)
    else:
        points[-1] = fair_price
    return points


def tradeoff_partial_sums(
    utility,
    fair_price,
    exploit_prices,
    participation: ParticipationModel,
    discount: float,
    horizon_cap: int,
) -> list[float]:
    """Running discounted gap between fair pricing and the given price stream.

    Entry T is sum over t <= T of d^t * ((u_t - fair_t) - P_t * (u_t - p_t))
    with P_t the survival product of the underpaying stream before step t.
    """
    length = horizon_cap + 1
    u_list = _as_stream(utility, length, "utility")
    fair_list = _as_stream(fair_price, length, "fair price")
    price_list = _as_stream(exploit_prices, length, "price")
    sums: list[float] = []
    survival = 1.0
    discount_pow = 1.0
    running = 0.0
    for t in range(length):
        gap = (u_list[t] - fair_list[t]) - survival * (u_list[t] - price_list[t])
        running += discount_pow * gap
        sums.append(running)
        survival *= participation.probability(price_list[t], fair_list[t])
        discount_pow *= discount
    return sums


def tradeoff_threshold(
    utility,
    fair_price,
    exploit_prices,
    participation: ParticipationModel,
    discount: float,
    horizon_cap: int,
) -> int:
    """Largest horizon at which the underpaying stream still matches fair pricing.

    Returns -1 when fair pricing is already ahead at horizon 0.
    """
    sums = tradeoff_partial_sums(
        utility, fair_price, exploit_prices, participation, discount, horizon_cap
    )
    threshold = -1
    for t, value in enumerate(sums):
        if value <= 0.0:
            threshold = t
    return threshold


def participation_bound_check(
    prices: Sequence[float],
    fair_prices: Sequence[float],
    participation: ParticipationModel,
) -> tuple[float, float, bool]:
    """Survival product P, cumulative shortfall S = sum(1 - pi), and P <= e^-S."""
    if len(prices) != len(fair_prices):
        raise ParameterError("price and fair-price sequences differ in length")
    survival = 1.0
    shortfall = 0.0
    for p, fair in zip(prices, fair_prices):
        pi = participation.probability(p, fair)
        survival *= pi
        shortfall += 1.0 - pi
    holds = survival <= math.exp(-shortfall) + 1e-12
    return survival, shortfall, holds
