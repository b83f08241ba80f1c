import itertools

import pytest
from hypothesis import given, strategies as st

from datamarket import (
    BuyerProfile,
    DatasetListing,
    MarketState,
    UtilityFunction,
    net_utility,
    validate_market,
)
from datamarket.errors import DimensionMismatch, UnsetPrice


def test_net_utility_additive_single():
    u = UtilityFunction.additive([3, 2])
    assert net_utility(u, (1, 0), (1, 1.5)) == 2.0


def test_net_utility_empty_selection_is_zero():
    u = UtilityFunction.additive([3, 2])
    assert net_utility(u, (0, 0), (7.0, 9.0)) == 0.0
    table = {frozenset({0}): 4.0, frozenset({1}): 1.0, frozenset({0, 1}): 4.5}
    t = UtilityFunction.tabulated(table, 2)
    assert net_utility(t, (0, 0), (7.0, 9.0)) == 0.0


def test_net_utility_full_bundle():
    u = UtilityFunction.additive([3, 2])
    assert net_utility(u, (1, 1), (1, 1.5)) == 2.5


def test_net_utility_length_mismatch():
    u = UtilityFunction.additive([3, 2])
    with pytest.raises(DimensionMismatch):
        net_utility(u, (1, 0, 1), (1, 1.5))


def test_net_utility_unset_price():
    u = UtilityFunction.additive([3, 2])
    with pytest.raises(UnsetPrice):
        net_utility(u, (1, 0), (float("nan"), 1.5))


@given(
    st.lists(st.floats(0, 100), min_size=1, max_size=8),
    st.data(),
)
def test_net_utility_linear_in_prices(values, data):
    """Shifting prices by delta lowers g by exactly the selected share of delta."""
    n = len(values)
    u = UtilityFunction.additive(values)
    selection = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    prices = data.draw(st.lists(st.floats(0, 50), min_size=n, max_size=n))
    delta = data.draw(st.lists(st.floats(-10, 10), min_size=n, max_size=n))
    base = net_utility(u, selection, prices)
    shifted = net_utility(u, selection, [p + d for p, d in zip(prices, delta)])
    selected_shift = sum(d for d, bit in zip(delta, selection) if bit)
    assert shifted == pytest.approx(base - selected_shift, abs=1e-9)


def test_tabulated_matches_additive_exhaustively():
    values = [0.5, 1.25, 2.0, 0.0, 3.5, 1.0, 0.25, 2.75, 0.125, 1.5]
    u_add = UtilityFunction.additive(values)
    table = {
        frozenset(chosen): sum(values[i] for i in chosen)
        for r in range(len(values) + 1)
        for chosen in itertools.combinations(range(len(values)), r)
    }
    u_tab = UtilityFunction.tabulated(table, len(values))
    for selection in itertools.product((0, 1), repeat=len(values)):
        assert u_tab.of(selection) == pytest.approx(u_add.of(selection), abs=1e-12)


def _listing(dataset_id="d1", price=1.0, utility=2.0):
    return DatasetListing(
        dataset_id=dataset_id,
        seller_id="s1",
        cost=0.0,
        per_buyer_utility={"b1": utility, "b2": utility},
        price=price,
    )


def test_validate_market_ok():
    state = MarketState(
        time=0,
        listings=(_listing("d1"), _listing("d2")),
        buyers=(BuyerProfile("b1", 5.0), BuyerProfile("b2", 3.0)),
    )
    assert validate_market(state) == []


def test_validate_market_unset_price():
    state = MarketState(
        time=0,
        listings=(_listing("d1"), _listing("d2", price=None)),
        buyers=(BuyerProfile("b1", 5.0),),
    )
    violations = validate_market(state)
    assert len(violations) == 1
    assert "d2" in violations[0]


def test_validate_market_negative_budget():
    state = MarketState(
        time=0,
        listings=(_listing("d1"),),
        buyers=(BuyerProfile("b1", -1.0),),
    )
    violations = validate_market(state)
    assert len(violations) == 1
    assert "b1" in violations[0]


def test_listing_rejects_negative_cost():
    with pytest.raises(ValueError):
        DatasetListing(dataset_id="d", seller_id="s", cost=-0.5, per_buyer_utility={})
