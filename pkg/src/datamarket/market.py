"""Core market domain types and bookkeeping.

All types are immutable value objects; solvers and the dynamics engine share
them freely. Money is real-valued in a single unnamed currency unit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import DimensionMismatch, SizeLimitExceeded, UnsetPrice

TABULATED_MAX_SIZE = 20


@dataclass(frozen=True)
class UtilityFunction:
    """Bundle utility u(x) over an ordered list of datasets.

    Two representations:
      * ``additive``: u(x) = sum of per-dataset utilities over the selection.
      * ``tabulated``: an explicit subset -> money table for set functions that
        are not additive; capped at ``TABULATED_MAX_SIZE`` datasets so exact
        evaluation stays tractable. u(empty) = 0 always.
    """

    kind: str
    size: int
    values: tuple[float, ...] = ()
    table: Mapping[frozenset[int], float] | None = None

    @classmethod
    def additive(cls, values: Sequence[float]) -> "UtilityFunction":
        vals = tuple(float(v) for v in values)
        return cls(kind="additive", size=len(vals), values=vals)

    @classmethod
    def tabulated(cls, table: Mapping[frozenset[int], float], size: int) -> "UtilityFunction":
        if size > TABULATED_MAX_SIZE:
            raise SizeLimitExceeded(
                f"tabulated utility supports at most {TABULATED_MAX_SIZE} datasets, got {size}"
            )
        return cls(kind="tabulated", size=size, table=dict(table))

    def of(self, selection: Sequence[int]) -> float:
        """Evaluate u(x) for a 0/1 selection vector."""
        if len(selection) != self.size:
            raise DimensionMismatch(
                f"selection has length {len(selection)}, utility covers {self.size} datasets"
            )
        if self.kind == "additive":
            return sum(self.values[i] for i, bit in enumerate(selection) if bit)
        chosen = frozenset(i for i, bit in enumerate(selection) if bit)
        if not chosen:
            return 0.0
        assert self.table is not None
        if chosen not in self.table:
            raise KeyError(f"tabulated utility undefined for subset {sorted(chosen)}")
        return float(self.table[chosen])


@dataclass(frozen=True)
class DatasetListing:
    """One seller's dataset on the market."""

    dataset_id: str
    seller_id: str
    cost: float
    per_buyer_utility: Mapping[str, float]
    price: float | None = None  # unset until the seller has priced it

    def __post_init__(self):
        if self.cost < 0:
            raise ValueError(f"listing {self.dataset_id}: cost must be >= 0, got {self.cost}")
        if self.price is not None and self.price < 0:
            raise ValueError(f"listing {self.dataset_id}: price must be >= 0, got {self.price}")
        for buyer_id, u in self.per_buyer_utility.items():
            if not math.isfinite(u) or u < 0:
                raise ValueError(
                    f"listing {self.dataset_id}: utility for buyer {buyer_id} must be finite and >= 0"
                )

    def priced(self, price: float) -> "DatasetListing":
        return DatasetListing(
            dataset_id=self.dataset_id,
            seller_id=self.seller_id,
            cost=self.cost,
            per_buyer_utility=self.per_buyer_utility,
            price=price,
        )


@dataclass(frozen=True)
class BuyerProfile:
    """A buyer: budget plus optional hooks for valuation and outcome mapping.

    Budget validity is checked by ``validate_market`` rather than at
    construction so malformed states can be represented and reported.
    """

    buyer_id: str
    budget: float
    mapping: object | None = None  # an outcomes.OutcomeMapping variant, when used
    valuation_source: object | None = None


@dataclass(frozen=True)
class PurchaseDecision:
    """A buyer's solved selection over the current listings."""

    selection: tuple[int, ...]
    total_spend: float
    net_utility: float

    @property
    def chosen_indices(self) -> tuple[int, ...]:
        return tuple(i for i, bit in enumerate(self.selection) if bit)


EMPTY_DECISION = PurchaseDecision(selection=(), total_spend=0.0, net_utility=0.0)


def empty_decision(n: int) -> PurchaseDecision:
    return PurchaseDecision(selection=(0,) * n, total_spend=0.0, net_utility=0.0)


@dataclass(frozen=True)
class MarketState:
    """Snapshot of the market at one time index."""

    time: int
    listings: tuple[DatasetListing, ...]
    buyers: tuple[BuyerProfile, ...]
    price_vector: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.price_vector and self.listings:
            object.__setattr__(
                self,
                "price_vector",
                tuple(l.price if l.price is not None else float("nan") for l in self.listings),
            )

    def utility_for(self, buyer_id: str, extra: DatasetListing | None = None) -> UtilityFunction:
        """Additive utility over current listings (plus an arriving one at the end)."""
        values = [float(l.per_buyer_utility.get(buyer_id, 0.0)) for l in self.listings]
        if extra is not None:
            values.append(float(extra.per_buyer_utility.get(buyer_id, 0.0)))
        return UtilityFunction.additive(values)


def net_utility(u: UtilityFunction, selection: Sequence[int], prices: Sequence[float]) -> float:
    """Net utility g(x) = u(x) - x . p of a selection at the given prices."""
    if len(selection) != len(prices):
        raise DimensionMismatch(
            f"selection length {len(selection)} != price vector length {len(prices)}"
        )
    spend = 0.0
    for i, bit in enumerate(selection):
        if not bit:
            continue
        p = prices[i]
        if p is None or (isinstance(p, float) and math.isnan(p)):
            raise UnsetPrice(f"listing index {i} has no price set")
        spend += p
    return u.of(selection) - spend


def validate_market(state: MarketState) -> list[str]:
    """Collect every invariant violation; an empty list means the state is well formed."""
    violations: list[str] = []
    if len(state.price_vector) != len(state.listings):
        violations.append(
            f"price vector length {len(state.price_vector)} != listings length {len(state.listings)}"
        )
    for listing, price in zip(state.listings, state.price_vector):
        if price is None or math.isnan(price):
            violations.append(f"listing {listing.dataset_id} has no price set")
        elif price < 0:
            violations.append(f"listing {listing.dataset_id} has negative price {price}")
    for buyer in state.buyers:
        if buyer.budget < 0 or not math.isfinite(buyer.budget):
            violations.append(f"buyer {buyer.buyer_id} has invalid budget {buyer.budget}")
    if state.time < 0:
        violations.append(f"time index must be >= 0, got {state.time}")
    return violations
