import pytest
from hypothesis import given, strategies as st

from datamarket import (
    DiscreteOutcome,
    LinearOutcome,
    MultiTaskOutcome,
    ZeroOneOutcome,
    map_utility,
)
from datamarket.errors import DimensionMismatch, ParameterError


def test_linear():
    assert map_utility(LinearOutcome(gamma=2.0, beta=0.5), 0.25) == 1.0


def test_zero_one_certain_normal_outcome():
    assert map_utility(ZeroOneOutcome(reward_normal=1.0, reward_rare=-10.0), 1.0) == 1.0


def test_discrete_bucket():
    m = DiscreteOutcome(thresholds=(0.0, 0.5, 1.0), rewards=(1.0, 4.0))
    assert map_utility(m, 0.5) == 4.0
    assert map_utility(m, 0.49) == 1.0


def test_discrete_out_of_range():
    m = DiscreteOutcome(thresholds=(0.0, 0.5, 1.0), rewards=(1.0, 4.0))
    with pytest.raises(ParameterError):
        map_utility(m, 1.0)
    with pytest.raises(ParameterError):
        map_utility(m, -0.01)


def test_multi_task_dot_product():
    m = MultiTaskOutcome(
        theta=(1.0, 1.0),
        epsilon=0.0,
        per_task=(LinearOutcome(1.0, 0.0), LinearOutcome(1.0, 0.0)),
    )
    assert map_utility(m, (0.2, 0.3)) == pytest.approx(0.5, abs=1e-12)


def test_multi_task_length_mismatch():
    m = MultiTaskOutcome(theta=(1.0,), epsilon=0.0, per_task=(LinearOutcome(1.0, 0.0),))
    with pytest.raises(DimensionMismatch):
        map_utility(m, (0.2, 0.3))


def test_discrete_requires_increasing_thresholds():
    with pytest.raises(ParameterError):
        DiscreteOutcome(thresholds=(0.0, 0.0, 1.0), rewards=(1.0, 2.0))
    with pytest.raises(ParameterError):
        DiscreteOutcome(thresholds=(0.0, 0.5, 1.0), rewards=(2.0, 1.0))


@given(st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_score(v1, v2):
    lo, hi = sorted((v1, v2))
    mappings = [
        LinearOutcome(gamma=2.0, beta=0.1),
        ZeroOneOutcome(reward_normal=1.0, reward_rare=-5.0),
        DiscreteOutcome(thresholds=(0.0, 0.25, 0.75, 1.5), rewards=(0.5, 1.0, 3.0)),
    ]
    for m in mappings:
        assert map_utility(m, hi) >= map_utility(m, lo)
    multi = MultiTaskOutcome(
        theta=(0.5, 2.0),
        epsilon=0.25,
        per_task=(LinearOutcome(1.0, 0.0), ZeroOneOutcome(1.0, -1.0)),
    )
    assert map_utility(multi, (hi, hi)) >= map_utility(multi, (lo, lo))


@given(st.floats(0, 1))
def test_zero_one_is_affine(v):
    zero_one = ZeroOneOutcome(reward_normal=1.0, reward_rare=-10.0)
    linear = LinearOutcome(gamma=1.0 - (-10.0), beta=-10.0)
    assert map_utility(zero_one, v) == pytest.approx(map_utility(linear, v), abs=1e-12)
