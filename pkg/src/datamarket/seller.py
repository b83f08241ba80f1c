"""Seller-side pricing.

Flat-rate pricing exploits the shape of the seller's profit function: demand
only drops at a buyer's maximum willingness to pay, so profit is piecewise
linear in price and the optimum sits on a breakpoint. ``price_flat`` searches
exactly those breakpoints, ``price_grid`` sweeps an externally supplied
candidate grid instead, and ``price_royalty`` solves the fractional-rate
variant where payment is a share of realized bundle utility.

A buyer at its exact willingness boundary counts as a sale, so the breakpoint
revenue the lemma-style search assigns to each candidate is realizable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .buyer import max_willingness_to_pay, solve_purchase
from .errors import DimensionMismatch, EmptyMarketError, ParameterError, SizeLimitExceeded
from .market import DatasetListing, MarketState, UtilityFunction

# Strict inequalities bound the royalty sup from above; step just inside.
_STRICT_MARGIN = 1e-9


@dataclass(frozen=True)
class CurvePoint:
    price: float
    demand: int
    profit: float


@dataclass(frozen=True)
class ProfitCurve:
    """Seller profit evaluated at candidate prices, ascending and deduplicated."""

    points: tuple[CurvePoint, ...]

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(pt.price for pt in self.points)

    def profit_at(self, price: float) -> float:
        for pt in self.points:
            if pt.price == price:
                return pt.profit
        raise KeyError(f"price {price} is not on the curve")


@dataclass(frozen=True)
class FlatPriceResult:
    """Chosen price (None when no price earns a non-negative profit on any sale)."""

    price: float | None
    profit: float
    curve: ProfitCurve
    willingness: dict[str, float]


def _buyer_willingness(new_listing: DatasetListing, state: MarketState) -> dict[str, float]:
    """Each buyer's maximum willingness to pay for the arriving dataset."""
    j = len(state.listings)
    mwps: dict[str, float] = {}
    for buyer in state.buyers:
        old_u = state.utility_for(buyer.buyer_id)
        prior = solve_purchase(old_u, state.price_vector, buyer.budget)
        full_u = state.utility_for(buyer.buyer_id, extra=new_listing)
        mwps[buyer.buyer_id] = max_willingness_to_pay(
            full_u, state.price_vector, buyer.budget, prior, j
        )
    return mwps


def _demand(price: float, mwps: dict[str, float]) -> int:
    # A buyer with zero willingness never purchases; at the boundary the sale counts.
    return sum(1 for m in mwps.values() if m > 0 and price <= m)


def _build_curve(mwps: dict[str, float], candidates: Sequence[float], cost: float) -> ProfitCurve:
    points = []
    for price in sorted(set(candidates)):
        demand = _demand(price, mwps)
        points.append(CurvePoint(price=price, demand=demand, profit=price * demand - cost))
    return ProfitCurve(points=tuple(points))


def _select(curve: ProfitCurve, mwps: dict[str, float]) -> tuple[float | None, float]:
    best_price: float | None = None
    best_profit = 0.0
    for pt in curve.points:  # ascending, so ties keep the lowest price
        if pt.demand < 1 or pt.profit < 0:
            continue
        if best_price is None or pt.profit > best_profit:
            best_price = pt.price
            best_profit = pt.profit
    return best_price, best_profit if best_price is not None else 0.0


def price_flat(new_listing: DatasetListing, state: MarketState) -> FlatPriceResult:
    """Profit-maximizing flat price over the breakpoints {0} union buyer willingness."""
    if not state.buyers:
        raise EmptyMarketError("flat pricing needs at least one buyer")
    mwps = _buyer_willingness(new_listing, state)
    candidates = [0.0] + list(mwps.values())
    curve = _build_curve(mwps, candidates, new_listing.cost)
    price, profit = _select(curve, mwps)
    return FlatPriceResult(price=price, profit=profit, curve=curve, willingness=mwps)


def price_grid(
    new_listing: DatasetListing, state: MarketState, candidates: Sequence[float]
) -> FlatPriceResult:
    """Profit argmax over exactly the supplied candidate prices."""
    if not state.buyers:
        raise EmptyMarketError("grid pricing needs at least one buyer")
    if not candidates:
        raise ParameterError("candidate price grid is empty")
    mwps = _buyer_willingness(new_listing, state)
    curve = _build_curve(mwps, candidates, new_listing.cost)
    price, profit = _select(curve, mwps)
    return FlatPriceResult(price=price, profit=profit, curve=curve, willingness=mwps)


# ---------------------------------------------------------------------------
# Royalty (fractional-rate) pricing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoyaltyBuyer:
    """A buyer in the royalty market.

    ``utility`` covers the prior listings plus the arriving dataset as its
    last index; ``cap`` is the highest total rate the buyer accepts.
    """

    buyer_id: str
    utility: UtilityFunction
    cap: float


@dataclass(frozen=True)
class RoyaltyResult:
    rate: float | None
    revenue: float
    candidates: tuple[float, ...]


def _fractional_value(u: UtilityFunction, selection: Sequence[int], rates: Sequence[float]) -> tuple[float, float]:
    """(total rate, fractional net utility) of a selection: (1 - f) * u(x)."""
    f = sum(r for r, bit in zip(rates, selection) if bit)
    return f, (1.0 - f) * u.of(selection)


def _solve_fractional(
    u: UtilityFunction, rates: Sequence[float], cap: float
) -> tuple[tuple[int, ...], float]:
    """Buyer's optimal bundle under fractional pricing; lex-smallest tie-break."""
    if u.size > 20:
        raise SizeLimitExceeded("fractional solve supports at most 20 datasets")
    best_sel: tuple[int, ...] = (0,) * u.size
    best_value = 0.0
    for selection in itertools.product((0, 1), repeat=u.size):
        f, value = _fractional_value(u, selection, rates)
        if f > cap or value < 0:
            continue
        if value > best_value:
            best_sel = selection
            best_value = value
    return best_sel, best_value


def price_royalty(
    buyers: Sequence[RoyaltyBuyer], prior_rates: Sequence[float], cost: float = 0.0
) -> RoyaltyResult:
    """Revenue-maximizing royalty rate for an arriving dataset.

    For each buyer and each feasible prior-market bundle that gains from the
    dataset at a zero rate, the largest workable rate is the smaller of the
    rate that would erase the utility gain (a strict bound, approached from
    below) and the rate that exactly exhausts the buyer's cap. The optimum is
    the revenue argmax over that candidate set; revenue at a rate is the rate
    times the realized bundle utility of every buyer whose re-solved optimum
    includes the dataset, minus the creation cost.
    """
    n = len(prior_rates) + 1
    j = n - 1
    for b in buyers:
        if not 0.0 <= b.cap < 1.0:
            raise ParameterError(f"buyer {b.buyer_id}: royalty cap must be in [0, 1), got {b.cap}")
        if b.utility.size != n:
            raise DimensionMismatch(
                f"buyer {b.buyer_id}: utility covers {b.utility.size} datasets, expected {n}"
            )

    candidates: set[float] = set()
    for b in buyers:
        old_utility = _restricted_to_old(b.utility, j)
        _prior_sel, prior_value = _solve_fractional(old_utility, prior_rates, b.cap)
        # Enumerate feasible prior-market bundles; keep those that gain from j at rate 0.
        for mask in itertools.product((0, 1), repeat=n - 1):
            f_old, value_old = _fractional_value(old_utility, mask, prior_rates)
            if f_old > b.cap or value_old < 0:
                continue
            with_j = tuple(mask) + (1,)
            u_new = b.utility.of(with_j)
            gain_at_zero = (1.0 - f_old) * u_new
            if not gain_at_zero > prior_value:
                continue  # outside the improving set; j cannot help through this bundle
            # Strict utility-gain bound: (1 - f_old - a) * u_new > prior_value.
            sup_gain = 1.0 - f_old - prior_value / u_new
            sup_cap = b.cap - f_old
            alpha = min(sup_gain - _STRICT_MARGIN, sup_cap)
            if alpha < 0.0:
                continue
            candidates.add(alpha)

    best_rate: float | None = None
    best_revenue = 0.0
    ordered = tuple(sorted(candidates))
    for alpha in ordered:
        if alpha <= 0.0:
            continue
        gross = 0.0
        sold = 0
        for b in buyers:
            rates = list(prior_rates) + [alpha]
            selection, _value = _solve_fractional(b.utility, rates, b.cap)
            if selection[j]:
                gross += alpha * b.utility.of(selection)
                sold += 1
        net = gross - cost
        if sold < 1 or net < 0:
            continue
        if best_rate is None or net > best_revenue:
            best_rate = alpha
            best_revenue = net
    return RoyaltyResult(rate=best_rate, revenue=best_revenue if best_rate is not None else 0.0, candidates=ordered)


def _restricted_to_old(u: UtilityFunction, j: int) -> UtilityFunction:
    """View of a utility function over every dataset except index j."""
    if u.kind == "additive":
        return UtilityFunction.additive([v for i, v in enumerate(u.values) if i != j])
    old_indices = [i for i in range(u.size) if i != j]
    table = {}
    assert u.table is not None
    for subset, value in u.table.items():
        if j in subset:
            continue
        table[frozenset(old_indices.index(i) for i in subset)] = value
    return UtilityFunction.tabulated(table, u.size - 1)
