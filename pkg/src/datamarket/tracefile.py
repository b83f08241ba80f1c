"""File formats: trace records, summaries, score files, and run manifests.

Traces are line-delimited CSV, one row per (step, entity, metric), chosen for
diff-ability. Floats are written with repr, so identical runs emit
byte-identical files and every value round-trips exactly.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .config import config_digest, config_from_dict, config_to_dict
from .dynamics import ScenarioConfig, SimulationTrace, StepRecord
from .errors import ConfigurationError
from .valuation import ValuationScore

TRACE_HEADER = ("step", "entity_kind", "entity_id", "metric", "value")
SUMMARY_HEADER = ("entity_kind", "entity_id", "metric", "step", "value")

_BUYER_METRICS = ("net_utility", "spend", "cumulative_discounted_utility")
_SELLER_LISTED_METRICS = ("fairshare_price", "posted_price", "revenue")
_SELLER_METRICS = ("cumulative_profit", "survival_product")


def trace_rows(trace: SimulationTrace) -> Iterable[tuple[int, str, str, str, float]]:
    for record in trace.records:
        yield record.step, "market", "", "active_sellers", record.active_sellers
        for buyer_id in trace.config.buyer_ids:
            yield record.step, "buyer", buyer_id, "net_utility", record.buyer_net[buyer_id]
            yield record.step, "buyer", buyer_id, "spend", record.buyer_spend[buyer_id]
            yield (
                record.step,
                "buyer",
                buyer_id,
                "cumulative_discounted_utility",
                record.buyer_cumulative[buyer_id],
            )
        for seller_id in trace.config.seller_ids:
            if seller_id in record.seller_posted:
                yield record.step, "seller", seller_id, "fairshare_price", record.seller_fair[seller_id]
                yield record.step, "seller", seller_id, "posted_price", record.seller_posted[seller_id]
                yield record.step, "seller", seller_id, "revenue", record.seller_revenue[seller_id]
            yield (
                record.step,
                "seller",
                seller_id,
                "cumulative_profit",
                record.seller_profit_cumulative[seller_id],
            )
            yield (
                record.step,
                "seller",
                seller_id,
                "survival_product",
                record.seller_survival[seller_id],
            )


def write_trace(trace: SimulationTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for step, kind, entity, metric, value in trace_rows(trace):
            fh.write(f"{step},{kind},{entity},{metric},{value!r}\n")


def read_trace(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != TRACE_HEADER:
            raise ConfigurationError(f"{path} is not a trace file (header {reader.fieldnames})")
        for row in reader:
            rows.append(
                {
                    "step": int(row["step"]),
                    "entity_kind": row["entity_kind"],
                    "entity_id": row["entity_id"],
                    "metric": row["metric"],
                    "value": float(row["value"]),
                }
            )
    return rows


def trace_from_rows(config: ScenarioConfig, rows: Sequence[dict]) -> SimulationTrace:
    """Rebuild an in-memory trace from file rows (inverse of trace_rows)."""
    by_step: dict[int, list[dict]] = {}
    for row in rows:
        by_step.setdefault(row["step"], []).append(row)
    records = []
    for step in sorted(by_step):
        group = by_step[step]
        buyer = {m: {} for m in _BUYER_METRICS}
        seller = {m: {} for m in _SELLER_LISTED_METRICS + _SELLER_METRICS}
        active = 0.0
        for row in group:
            kind, metric, value = row["entity_kind"], row["metric"], row["value"]
            if kind == "market" and metric == "active_sellers":
                active = value
            elif kind == "buyer" and metric in buyer:
                buyer[metric][row["entity_id"]] = value
            elif kind == "seller" and metric in seller:
                seller[metric][row["entity_id"]] = value
        records.append(
            StepRecord(
                step=step,
                active_sellers=active,
                buyer_net=buyer["net_utility"],
                buyer_spend=buyer["spend"],
                buyer_cumulative=buyer["cumulative_discounted_utility"],
                seller_fair=seller["fairshare_price"],
                seller_posted=seller["posted_price"],
                seller_revenue=seller["revenue"],
                seller_profit_cumulative=seller["cumulative_profit"],
                seller_survival=seller["survival_product"],
            )
        )
    return SimulationTrace(config=config, records=tuple(records))


def write_summary(rows: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SUMMARY_HEADER) + "\n")
        for row in rows:
            fh.write(
                f"{row['entity_kind']},{row['entity_id']},{row['metric']},{row['step']},{row['value']!r}\n"
            )


def write_scores(scores: Sequence[ValuationScore], path) -> None:
    """Emit normalized scores in the ingestable line format dataset_id,buyer_id,score."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in scores:
            fh.write(f"{s.dataset_id},{s.buyer_id},{s.normalized!r}\n")


@dataclass(frozen=True)
class RunManifest:
    config: dict
    digest: str
    seed: int
    tool_version: str
    started_at: str
    finished_at: str
    outputs: dict


def write_manifest(
    path,
    config: ScenarioConfig,
    started_at: datetime,
    finished_at: datetime,
    outputs: dict,
) -> RunManifest:
    manifest = RunManifest(
        config=config_to_dict(config),
        digest=config_digest(config),
        seed=config.seed,
        tool_version=__version__,
        started_at=started_at.astimezone(timezone.utc).isoformat(),
        finished_at=finished_at.astimezone(timezone.utc).isoformat(),
        outputs=outputs,
    )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.__dict__, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_manifest(path) -> tuple[ScenarioConfig, dict]:
    """Load a manifest, verify its digest, and rebuild the config."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    config = config_from_dict(data["config"])
    if config_digest(config) != data["digest"]:
        raise ConfigurationError(f"{path}: config digest mismatch; manifest corrupted")
    return config, data


def load_run(run_dir) -> SimulationTrace:
    """Read a run directory (manifest.json + trace.csv) back into a trace."""
    run = Path(run_dir)
    config, _ = read_manifest(run / "manifest.json")
    rows = read_trace(run / "trace.csv")
    return trace_from_rows(config, rows)
