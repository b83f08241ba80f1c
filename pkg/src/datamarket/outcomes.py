"""Outcome mappings: convert a normalized valuation score into economic utility.

Four variants cover the usual buyer preferences: an affine relationship,
threshold buckets with fixed rewards, a risk-averse two-outcome expectation,
and a weighted combination across tasks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DimensionMismatch, ParameterError


@dataclass(frozen=True)
class LinearOutcome:
    """u = gamma * v + beta, gamma > 0."""

    gamma: float
    beta: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")

    def utility(self, v: float) -> float:
        return self.gamma * v + self.beta


@dataclass(frozen=True)
class DiscreteOutcome:
    """Bucketed reward: v in [c_h, c_{h+1}) pays rewards[h].

    ``thresholds`` has H+1 strictly increasing entries; the last one closes the
    top bucket explicitly. ``rewards`` has H strictly increasing entries.
    """

    thresholds: tuple[float, ...]
    rewards: tuple[float, ...]

    def __post_init__(self):
        if len(self.thresholds) != len(self.rewards) + 1:
            raise ParameterError(
                f"need len(thresholds) == len(rewards) + 1, got {len(self.thresholds)} and {len(self.rewards)}"
            )
        if any(a >= b for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ParameterError("thresholds must be strictly increasing")
        if any(a >= b for a, b in zip(self.rewards, self.rewards[1:])):
            raise ParameterError("rewards must be strictly increasing")

    def utility(self, v: float) -> float:
        if v < self.thresholds[0] or v >= self.thresholds[-1]:
            raise ParameterError(
                f"score {v} outside covered range [{self.thresholds[0]}, {self.thresholds[-1]})"
            )
        for h in range(len(self.rewards)):
            if self.thresholds[h] <= v < self.thresholds[h + 1]:
                return self.rewards[h]
        raise AssertionError("unreachable: thresholds cover the checked range")


@dataclass(frozen=True)
class ZeroOneOutcome:
    """Expected utility of a two-outcome draw: v pays reward_normal, 1-v pays reward_rare.

    Expectation v * (reward_normal - reward_rare) + reward_rare, which is the
    affine map with gamma = reward_normal - reward_rare, beta = reward_rare.
    """

    reward_normal: float
    reward_rare: float

    def __post_init__(self):
        if self.reward_normal <= 0:
            raise ParameterError("reward_normal must be > 0")
        if self.reward_rare >= 0:
            raise ParameterError("reward_rare must be < 0")

    def utility(self, v: float) -> float:
        return v * (self.reward_normal - self.reward_rare) + self.reward_rare


@dataclass(frozen=True)
class MultiTaskOutcome:
    """u = theta . (per-task utilities of the score vector) + epsilon."""

    theta: tuple[float, ...]
    epsilon: float
    per_task: tuple["OutcomeMapping", ...]

    def __post_init__(self):
        if len(self.theta) != len(self.per_task):
            raise DimensionMismatch(
                f"theta length {len(self.theta)} != number of per-task mappings {len(self.per_task)}"
            )

    def utility(self, v: Sequence[float]) -> float:
        if len(v) != len(self.per_task):
            raise DimensionMismatch(
                f"score vector length {len(v)} != number of tasks {len(self.per_task)}"
            )
        return sum(t * m.utility(s) for t, m, s in zip(self.theta, self.per_task, v)) + self.epsilon


OutcomeMapping = Union[LinearOutcome, DiscreteOutcome, ZeroOneOutcome, MultiTaskOutcome]


def map_utility(mapping: OutcomeMapping, v) -> float:
    """Apply an outcome mapping to a scalar score (or vector, for multi-task)."""
    return mapping.utility(v)
