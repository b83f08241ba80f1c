"""Command-line interface.

Subcommands: simulate, price, value, analyze, check-assumptions, bellman,
threshold. Exit codes: 0 success, 2 usage/config error, 3 IO failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import compare_strategies, spearman, summarize
from .config import config_digest, load_scenario_config
from .dynamics import (
    RatioParticipation,
    TabulatedParticipation,
    check_assumptions,
    horizon_optimal_price,
    price_grid_points,
    run_scenario,
    tradeoff_threshold,
)
from .errors import ConfigurationError, MarketError
from .market import BuyerProfile, DatasetListing, MarketState, UtilityFunction
from .seller import RoyaltyBuyer, price_flat, price_grid, price_royalty
from .tracefile import load_run, write_manifest, write_scores, write_summary, write_trace
from .valuation import (
    Corpus,
    ToyModel,
    ToySample,
    infl_ip,
    ingest_scores,
    oracle_one_step,
    value_bm25,
    value_constant,
    value_random,
)

OUT_DIR_ENV = "DATAMARKET_OUT"


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse number list {text!r}: {exc}") from None


def _participation_from_args(args) -> RatioParticipation | TabulatedParticipation:
    if args.participation == "ratio":
        return RatioParticipation()
    if not args.points:
        raise ConfigurationError("tabulated participation needs --points 'x:y,x:y,...'")
    points = []
    for pair in args.points.split(","):
        x, _, y = pair.partition(":")
        points.append((float(x), float(y)))
    return TabulatedParticipation(points=tuple(points))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    config, config_out = load_scenario_config(args.config)
    out_dir = args.out or config_out or os.environ.get(OUT_DIR_ENV)
    if out_dir is None:
        out_dir = f"runs/run-{config_digest(config)[:12]}"
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    started = datetime.now(timezone.utc)
    trace = run_scenario(config)
    finished = datetime.now(timezone.utc)

    trace_path = run_dir / "trace.csv"
    summary_path = run_dir / "summary.csv"
    manifest_path = run_dir / "manifest.json"
    write_trace(trace, trace_path)
    write_summary(summarize(trace), summary_path)
    write_manifest(
        manifest_path,
        config,
        started_at=started,
        finished_at=finished,
        outputs={"trace": trace_path.name, "summary": summary_path.name},
    )
    print(f"wrote {trace_path}")
    print(f"wrote {summary_path}")
    print(f"wrote {manifest_path}")
    return 0


# ---------------------------------------------------------------------------
# price
# ---------------------------------------------------------------------------


def _load_snapshot(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"cannot parse snapshot {path}: {exc}") from None
    try:
        buyers = tuple(
            BuyerProfile(buyer_id=str(b["buyer_id"]), budget=float(b["budget"]))
            for b in data["buyers"]
        )
        listings = tuple(
            DatasetListing(
                dataset_id=str(l["dataset_id"]),
                seller_id=str(l.get("seller_id", "")),
                cost=float(l.get("cost", 0.0)),
                per_buyer_utility={str(k): float(v) for k, v in l["per_buyer_utility"].items()},
                price=float(l["price"]) if l.get("price") is not None else None,
            )
            for l in data.get("listings", [])
        )
        new = data["new"]
        new_listing = DatasetListing(
            dataset_id=str(new["dataset_id"]),
            seller_id=str(new.get("seller_id", "")),
            cost=float(new.get("cost", 0.0)),
            per_buyer_utility={str(k): float(v) for k, v in new["per_buyer_utility"].items()},
        )
        caps = {
            str(b["buyer_id"]): float(b["royalty_cap"])
            for b in data["buyers"]
            if "royalty_cap" in b
        }
        rates = [float(l.get("royalty_rate", 0.0)) for l in data.get("listings", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed snapshot {path}: {exc}") from exc
    return buyers, listings, new_listing, caps, rates


def cmd_price(args) -> int:
    buyers, listings, new_listing, caps, rates = _load_snapshot(args.snapshot)
    if args.mode in ("flat", "grid"):
        state = MarketState(time=0, listings=listings, buyers=buyers)
        if args.mode == "flat":
            result = price_flat(new_listing, state)
        else:
            if not args.grid:
                raise ConfigurationError("grid mode needs --grid with at least one price")
            result = price_grid(new_listing, state, _floats(args.grid))
        if result.price is None:
            print("price: no-profitable-price")
        else:
            print(f"price: {result.price!r}")
            print(f"profit: {result.profit!r}")
        print("price,demand,profit")
        for pt in result.curve.points:
            print(f"{pt.price!r},{pt.demand},{pt.profit!r}")
        return 0

    # royalty
    missing = [b.buyer_id for b in buyers if b.buyer_id not in caps]
    if missing:
        raise ConfigurationError(f"royalty mode needs royalty_cap for buyers: {missing}")
    royalty_buyers = []
    for b in buyers:
        values = [l.per_buyer_utility.get(b.buyer_id, 0.0) for l in listings]
        values.append(new_listing.per_buyer_utility.get(b.buyer_id, 0.0))
        royalty_buyers.append(
            RoyaltyBuyer(
                buyer_id=b.buyer_id,
                utility=UtilityFunction.additive(values),
                cap=caps[b.buyer_id],
            )
        )
    result = price_royalty(royalty_buyers, rates, cost=new_listing.cost)
    if result.rate is None:
        print("rate: no-profitable-rate")
    else:
        print(f"rate: {result.rate!r}")
        print(f"revenue: {result.revenue!r}")
    return 0


# ---------------------------------------------------------------------------
# value
# ---------------------------------------------------------------------------


def _read_dataset_ids(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _toy_instance(seed: int, samples: int, dim: int, tests: int):
    rng = np.random.default_rng(seed)
    model = ToyModel(weights=tuple(rng.normal(0.0, 1.0, size=dim)))
    train = [
        ToySample(features=tuple(rng.normal(0.0, 1.0, size=dim)), target=float(rng.normal()))
        for _ in range(samples)
    ]
    test = [
        ToySample(features=tuple(rng.normal(0.0, 1.0, size=dim)), target=float(rng.normal()))
        for _ in range(tests)
    ]
    return model, train, test


def cmd_value(args) -> int:
    from .valuation import _batch  # batch normalization over raw scores

    if args.method == "constant":
        scores = value_constant(_read_dataset_ids(args.datasets), args.buyer)
    elif args.method == "random":
        scores = value_random(_read_dataset_ids(args.datasets), args.buyer, seed=args.seed)
    elif args.method == "bm25":
        with open(args.corpus, encoding="utf-8") as fh:
            corpus_data = json.load(fh)
        corpus = Corpus(
            documents=tuple((str(d["id"]), str(d["text"])) for d in corpus_data["documents"]),
            representative_ids=frozenset(str(i) for i in corpus_data["representative_ids"]),
        )
        with open(args.dataset_texts, encoding="utf-8") as fh:
            texts = json.load(fh)
        scores = value_bm25(
            corpus, [(str(t["dataset_id"]), str(t["text"])) for t in texts], args.buyer
        )
    elif args.method in ("toy-influence", "toy-oracle"):
        model, train, test = _toy_instance(args.seed, args.samples, args.dim, args.tests)
        ids = [f"sample-{i:04d}" for i in range(len(train))]
        if args.method == "toy-influence":
            raw = [infl_ip(model, d, test) for d in train]
        else:
            raw = [oracle_one_step(model, d, test, eta=args.eta) for d in train]
        scores = _batch(ids, args.buyer, raw)
    elif args.method == "ingest":
        scores = ingest_scores(args.scores)
    else:
        raise ConfigurationError(f"unknown valuation method {args.method!r}")
    write_scores(scores, args.out)
    print(f"wrote {len(scores)} scores to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    if args.statistic == "spearman":
        if len(args.inputs) != 2:
            raise ConfigurationError("spearman needs exactly two score files")
        first = ingest_scores(args.inputs[0])
        second = ingest_scores(args.inputs[1])
        lookup = {(s.dataset_id, s.buyer_id): s.normalized for s in second}
        xs, ys = [], []
        for s in first:
            key = (s.dataset_id, s.buyer_id)
            if key not in lookup:
                raise ConfigurationError(f"record {key} missing from {args.inputs[1]}")
            xs.append(s.normalized)
            ys.append(lookup[key])
        if len(first) != len(second):
            raise ConfigurationError("score files cover different record sets")
        print(f"spearman: {spearman(xs, ys)!r}")
        return 0
    if args.statistic == "summary":
        if len(args.inputs) != 1:
            raise ConfigurationError("summary needs exactly one run directory")
        trace = load_run(args.inputs[0])
        print(",".join(("entity_kind", "entity_id", "metric", "step", "value")))
        for row in summarize(trace):
            print(
                f"{row['entity_kind']},{row['entity_id']},{row['metric']},{row['step']},{row['value']!r}"
            )
        return 0
    if args.statistic == "compare":
        if len(args.inputs) < 2:
            raise ConfigurationError("compare needs at least two run directories")
        traces = [load_run(d) for d in args.inputs]
        print("checkpoint,metric,ranking")
        for ranking in compare_strategies(traces):
            ordered = " > ".join(f"{label}={value!r}" for label, value in ranking.ordering)
            print(f"{ranking.checkpoint},{ranking.metric},{ordered}")
        return 0
    raise ConfigurationError(f"unknown statistic {args.statistic!r}")


# ---------------------------------------------------------------------------
# single-pair analysis commands
# ---------------------------------------------------------------------------


def cmd_check_assumptions(args) -> int:
    participation = _participation_from_args(args)
    violations = check_assumptions(
        participation, _floats(args.utilities), _floats(args.budgets), args.delta
    )
    if violations:
        for v in violations:
            print(f"violation: {v}")
    else:
        print("ok")
    return 0


def cmd_bellman(args) -> int:
    participation = _participation_from_args(args)
    fair = min(args.utility, args.budget)
    grid = price_grid_points(fair, args.grid_step)
    print("horizon,price,value")
    for horizon in sorted(set(int(h) for h in _floats(args.horizons))):
        result = horizon_optimal_price(
            args.utility, args.budget, args.delta, participation, horizon, grid
        )
        print(f"{result.horizon},{result.price!r},{result.value!r}")
    return 0


def cmd_threshold(args) -> int:
    participation = _participation_from_args(args)
    deltas = _floats(args.delta_grid) if args.delta_grid else [args.delta]
    if args.delta_grid:
        print("delta,t_star")
    for delta in deltas:
        t_star = tradeoff_threshold(
            args.utility, args.fair_price, args.price, participation, delta, args.cap
        )
        if args.delta_grid:
            print(f"{delta!r},{t_star}")
        else:
            print(f"t_star: {t_star}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_participation_args(parser) -> None:
    parser.add_argument("--participation", choices=("ratio", "tabulated"), default="ratio")
    parser.add_argument("--points", help="tabulated curve as 'ratio:prob,...'", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datamarket")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a market scenario from a TOML config")
    p.add_argument("config")
    p.add_argument("--out", help=f"output directory (default: config, then ${OUT_DIR_ENV})")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("price", help="price an arriving dataset against a market snapshot")
    p.add_argument("snapshot", help="JSON market snapshot")
    p.add_argument("--mode", choices=("flat", "grid", "royalty"), default="flat")
    p.add_argument("--grid", help="comma-separated candidate prices for grid mode")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("value", help="score datasets with a valuation method")
    p.add_argument(
        "--method",
        required=True,
        choices=("constant", "random", "bm25", "toy-influence", "toy-oracle", "ingest"),
    )
    p.add_argument("--datasets", help="file with one dataset id per line")
    p.add_argument("--buyer", default="buyer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus", help="JSON corpus with documents and representative_ids")
    p.add_argument("--dataset-texts", help="JSON list of {dataset_id, text}")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--tests", type=int, default=20)
    p.add_argument("--eta", type=float, default=1e-3)
    p.add_argument("--scores", help="raw score file for the ingest method")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("analyze", help="statistics over score files and run directories")
    p.add_argument("statistic", choices=("spearman", "summary", "compare"))
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check-assumptions", help="validate participation/discount assumptions")
    p.add_argument("--utilities", required=True, help="comma-separated utility stream")
    p.add_argument("--budgets", required=True, help="comma-separated budget stream")
    p.add_argument("--delta", type=float, required=True)
    _add_participation_args(p)
    p.set_defaults(func=cmd_check_assumptions)

    p = sub.add_parser("bellman", help="per-horizon optimal constant price")
    p.add_argument("--utility", type=float, required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--horizons", default="1,2,3,4,5,10,25,50,100")
    _add_participation_args(p)
    p.set_defaults(func=cmd_bellman)

    p = sub.add_parser("threshold", help="largest horizon where underpricing still wins")
    p.add_argument("--utility", type=float, required=True)
    p.add_argument("--fair-price", type=float, required=True)
    p.add_argument("--price", type=float, required=True, help="constant underpaying price")
    p.add_argument("--delta", type=float, default=0.95)
    p.add_argument("--delta-grid", help="comma-separated discount factors for a sweep")
    p.add_argument("--cap", type=int, default=500)
    _add_participation_args(p)
    p.set_defaults(func=cmd_threshold)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MarketError, FileNotFoundError, NotADirectoryError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
