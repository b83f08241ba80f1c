"""Post-hoc statistics over simulation traces and valuation scores."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dynamics import SimulationTrace
from .errors import ConfigurationError, ParameterError

DEFAULT_CHECKPOINTS = (10, 25, 50, 100)


def _average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank range."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    if len(xs) != len(ys):
        raise ParameterError(f"input lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ParameterError("need at least two observations")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = float(np.sqrt((rx * rx).sum() * (ry * ry).sum()))
    if denom == 0.0:
        raise ParameterError("rank correlation undefined for a constant input")
    return float((rx * ry).sum() / denom)


def summarize(trace: SimulationTrace) -> list[dict]:
    """Flatten a trace into summary rows.

    Rows carry entity_kind, entity_id, metric, step and value: final
    cumulative discounted utility per buyer, final cumulative profit per
    seller, and the active-seller count at every step. An empty trace gives an
    empty summary.
    """
    rows: list[dict] = []
    if not trace.records:
        return rows
    final_step = trace.records[-1].step
    for buyer_id, value in trace.final_buyer_cumulative().items():
        rows.append(
            {
                "entity_kind": "buyer",
                "entity_id": buyer_id,
                "metric": "final_cumulative_discounted_utility",
                "step": final_step,
                "value": value,
            }
        )
    for seller_id, value in trace.final_seller_profit().items():
        rows.append(
            {
                "entity_kind": "seller",
                "entity_id": seller_id,
                "metric": "final_cumulative_profit",
                "step": final_step,
                "value": value,
            }
        )
    for record in trace.records:
        rows.append(
            {
                "entity_kind": "market",
                "entity_id": "",
                "metric": "active_sellers",
                "step": record.step,
                "value": record.active_sellers,
            }
        )
    return rows


@dataclass(frozen=True)
class StrategyRanking:
    checkpoint: int
    metric: str
    ordering: tuple[tuple[str, float], ...]  # (strategy label, value), best first


def compare_strategies(
    traces: Sequence[SimulationTrace],
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
) -> list[StrategyRanking]:
    """Rank strategies per metric at each checkpoint step.

    All traces must come from configs identical except for the pricing
    strategy. Metrics: mean seller cumulative profit, mean buyer cumulative
    discounted utility, and active sellers, each read after `checkpoint` steps.
    """
    if len(traces) < 2:
        raise ParameterError("need at least two traces to compare")
    base = replace(traces[0].config, strategy=None)
    labels = []
    for trace in traces:
        if replace(trace.config, strategy=None) != base:
            raise ConfigurationError(
                "traces differ beyond the pricing strategy; comparison is not meaningful"
            )
        labels.append(trace.config.strategy.label)

    horizon = traces[0].config.horizon
    rankings: list[StrategyRanking] = []
    for checkpoint in checkpoints:
        if checkpoint < 1 or checkpoint > horizon:
            continue
        record_index = checkpoint - 1
        per_metric = {
            "seller_mean_cumulative_profit": [],
            "buyer_mean_cumulative_utility": [],
            "active_sellers": [],
        }
        for trace, label in zip(traces, labels):
            record = trace.records[record_index]
            sellers = record.seller_profit_cumulative
            buyers = record.buyer_cumulative
            per_metric["seller_mean_cumulative_profit"].append(
                (label, sum(sellers.values()) / len(sellers))
            )
            per_metric["buyer_mean_cumulative_utility"].append(
                (label, sum(buyers.values()) / len(buyers))
            )
            per_metric["active_sellers"].append((label, record.active_sellers))
        for metric, pairs in per_metric.items():
            ordering = tuple(sorted(pairs, key=lambda item: -item[1]))
            rankings.append(
                StrategyRanking(checkpoint=checkpoint, metric=metric, ordering=ordering)
            )
    return rankings
