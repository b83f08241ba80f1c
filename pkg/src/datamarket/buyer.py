"""Exact buyer-side solvers.

``solve_purchase`` finds the net-utility-maximizing bundle under a budget,
``will_purchase`` decides whether a newly arrived dataset changes that
decision at a proposed price, and ``max_willingness_to_pay`` is the highest
price at which it still would. The willingness value is the smaller of the
best marginal utility the new dataset can add over any feasible prior-market
bundle and the budget surplus left by the prior optimal decision.
"""
from __future__ import annotations

import itertools
import math
from typing import Sequence

from .errors import DimensionMismatch, ParameterError, SizeLimitExceeded, UnsetPrice
from .market import PurchaseDecision, UtilityFunction, net_utility

_BOUND_SLACK = 1e-9


def _check_prices(prices: Sequence[float]) -> None:
    for i, p in enumerate(prices):
        if p is None or (isinstance(p, float) and math.isnan(p)):
            raise UnsetPrice(f"listing index {i} has no price set")


def solve_purchase(
    u: UtilityFunction, prices: Sequence[float], budget: float
) -> PurchaseDecision:
    """Maximize g(x) = u(x) - x . p subject to x . p <= budget and g(x) >= 0.

    The empty selection is always feasible, so a decision always exists. Ties
    break toward the lexicographically smallest selection vector, which in
    particular never includes a dataset that adds nothing.
    """
    if len(prices) != u.size:
        raise DimensionMismatch(f"{len(prices)} prices for {u.size} datasets")
    if budget < 0:
        raise ParameterError(f"budget must be >= 0, got {budget}")
    _check_prices(prices)
    if u.kind == "additive":
        return _solve_additive(u, prices, budget)
    return _solve_tabulated(u, prices, budget)


def _evaluate(u: UtilityFunction, prices: Sequence[float], chosen: Sequence[int]) -> tuple[float, float]:
    """Canonical (spend, net utility) of an index set, summed in index order."""
    selection = [0] * u.size
    for i in chosen:
        selection[i] = 1
    spend = sum(prices[i] for i in chosen)
    return spend, net_utility(u, selection, prices)


def _solve_additive(u: UtilityFunction, prices: Sequence[float], budget: float) -> PurchaseDecision:
    # Only datasets with strictly positive margin can appear in a lex-smallest
    # optimum; dropping any other one keeps the value and frees budget.
    candidates = [i for i in range(u.size) if u.values[i] - prices[i] > 0 and prices[i] <= budget]
    best_chosen: list[int] = []
    best_value = 0.0

    if candidates:
        margins = [u.values[i] - prices[i] for i in candidates]
        suffix = [0.0] * (len(candidates) + 1)
        for k in range(len(candidates) - 1, -1, -1):
            suffix[k] = suffix[k + 1] + margins[k]

        chosen: list[int] = []

        def walk(k: int, spend: float, value: float) -> None:
            nonlocal best_chosen, best_value
            # Upper bound ignores the budget; slack keeps float noise from
            # pruning a true optimum.
            bound = value + suffix[k]
            if bound + _BOUND_SLACK * (1.0 + abs(bound)) <= best_value:
                return
            if k == len(candidates):
                return
            # Exclude-first keeps the first optimum found lexicographically smallest.
            walk(k + 1, spend, value)
            i = candidates[k]
            new_spend = spend + prices[i]
            if new_spend <= budget:
                chosen.append(i)
                _, exact = _evaluate(u, prices, chosen)
                if exact > best_value:
                    best_value = exact
                    best_chosen = list(chosen)
                walk(k + 1, new_spend, value + margins[k])
                chosen.pop()

        walk(0, 0.0, 0.0)

    selection = [0] * u.size
    for i in best_chosen:
        selection[i] = 1
    spend, value = _evaluate(u, prices, best_chosen)
    return PurchaseDecision(selection=tuple(selection), total_spend=spend, net_utility=value)


def _solve_tabulated(u: UtilityFunction, prices: Sequence[float], budget: float) -> PurchaseDecision:
    if u.size > 20:
        raise SizeLimitExceeded(f"tabulated solve supports at most 20 datasets, got {u.size}")
    best = PurchaseDecision(selection=(0,) * u.size, total_spend=0.0, net_utility=0.0)
    # itertools.product yields selection vectors in lexicographic order, so
    # strictly-greater updates keep the lex-smallest optimum.
    for selection in itertools.product((0, 1), repeat=u.size):
        spend = sum(p for p, bit in zip(prices, selection) if bit)
        if spend > budget:
            continue
        value = net_utility(u, selection, prices)
        if value < 0:
            continue
        if value > best.net_utility:
            best = PurchaseDecision(selection=selection, total_spend=spend, net_utility=value)
    return best


def _best_marginal_utility(
    u: UtilityFunction, prices: Sequence[float], budget: float, prior: PurchaseDecision, j: int
) -> float:
    """max over feasible prior-market bundles x of u(x + e_j) - x . p - g(prior)."""
    if u.kind == "additive":
        # g(x + e_j) at zero price is g(x) + u_j, maximized at the prior optimum.
        return u.values[j]
    if u.size > 20:
        raise SizeLimitExceeded("tabulated marginal search supports at most 20 datasets")
    old_indices = [i for i in range(u.size) if i != j]
    best = -math.inf
    for mask in itertools.product((0, 1), repeat=len(old_indices)):
        spend = sum(p for p, bit in zip(prices, mask) if bit)
        if spend > budget:
            continue
        selection = [0] * u.size
        for i, bit in zip(old_indices, mask):
            selection[i] = bit
        if u.of(selection) - spend < 0:
            continue  # bundle infeasible on its own
        selection[j] = 1
        gain = u.of(selection) - spend - prior.net_utility
        if gain > best:
            best = gain
    return best


def _check_arrival_args(u, prices, prior, j):
    if u.size != len(prices) + 1:
        raise DimensionMismatch(
            f"utility covers {u.size} datasets but {len(prices)} prior-market prices given"
        )
    if not 0 <= j < u.size:
        raise ParameterError(f"new listing index {j} outside [0, {u.size})")
    if len(prior.selection) != len(prices):
        raise DimensionMismatch(
            f"prior decision covers {len(prior.selection)} datasets, prices cover {len(prices)}"
        )
    _check_prices(prices)


def will_purchase(
    u: UtilityFunction,
    prices: Sequence[float],
    budget: float,
    prior: PurchaseDecision,
    j: int,
    price_j: float,
) -> bool:
    """Whether the buyer adopts the new dataset j at price_j.

    Two requirements, both against the prior optimum: some feasible
    prior-market bundle plus j must strictly beat the prior net utility with
    price_j charged, and price_j must fit inside the prior decision's budget
    surplus budget - prior spend.
    """
    _check_arrival_args(u, prices, prior, j)
    surplus = budget - prior.total_spend
    if price_j > surplus:
        return False
    return _best_marginal_utility(u, prices, budget, prior, j) > price_j


def max_willingness_to_pay(
    u: UtilityFunction,
    prices: Sequence[float],
    budget: float,
    prior: PurchaseDecision,
    j: int,
) -> float:
    """Highest price the buyer would accept for the new dataset j.

    The smaller of the best positive marginal utility j adds over any feasible
    prior-market bundle and the prior decision's budget surplus; 0 when no
    bundle gains from j.
    """
    _check_arrival_args(u, prices, prior, j)
    surplus = budget - prior.total_spend
    gain = _best_marginal_utility(u, prices, budget, prior, j)
    return min(max(gain, 0.0), max(surplus, 0.0))
