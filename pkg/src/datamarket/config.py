"""Scenario configuration: TOML loading, canonical dicts, and content digests.

A scenario file is a TOML document with sections market, buyers, sellers,
strategy, participation, valuation and output. The digest is computed over the
canonical dict form, so a manifest embedding that dict can always prove which
configuration produced a run.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .dynamics import (
    Exploitative,
    Fairshare,
    ParticipationModel,
    PricingStrategy,
    RandomBelowFair,
    RatioParticipation,
    Reduced,
    ScenarioConfig,
    TabulatedParticipation,
)
from .errors import ConfigurationError
from .outcomes import DiscreteOutcome, LinearOutcome, OutcomeMapping, ZeroOneOutcome


def _strategy_from_dict(d: dict) -> PricingStrategy:
    kind = d.get("kind")
    if kind == "fairshare":
        return Fairshare()
    if kind == "reduced":
        return Reduced(factor=float(d["factor"]))
    if kind == "random-below-fair":
        return RandomBelowFair()
    if kind == "exploitative":
        return Exploitative(fraction=float(d["fraction"]))
    raise ConfigurationError(f"unknown strategy kind {kind!r}")


def _strategy_to_dict(strategy: PricingStrategy) -> dict:
    if isinstance(strategy, Fairshare):
        return {"kind": "fairshare"}
    if isinstance(strategy, Reduced):
        return {"kind": "reduced", "factor": strategy.factor}
    if isinstance(strategy, RandomBelowFair):
        return {"kind": "random-below-fair"}
    if isinstance(strategy, Exploitative):
        return {"kind": "exploitative", "fraction": strategy.fraction}
    raise ConfigurationError(f"unknown strategy object {strategy!r}")


def _participation_from_dict(d: dict) -> ParticipationModel:
    kind = d.get("kind", "ratio")
    if kind == "ratio":
        return RatioParticipation()
    if kind == "tabulated":
        points = tuple((float(x), float(y)) for x, y in d["points"])
        return TabulatedParticipation(points=points)
    raise ConfigurationError(f"unknown participation kind {kind!r}")


def _participation_to_dict(model: ParticipationModel) -> dict:
    if isinstance(model, RatioParticipation):
        return {"kind": "ratio"}
    if isinstance(model, TabulatedParticipation):
        return {"kind": "tabulated", "points": [list(p) for p in model.points]}
    raise ConfigurationError(f"unknown participation object {model!r}")


def _mapping_from_dict(d: dict) -> OutcomeMapping:
    kind = d.get("kind", "linear")
    if kind == "linear":
        return LinearOutcome(gamma=float(d.get("gamma", 1.0)), beta=float(d.get("beta", 0.0)))
    if kind == "zero-one":
        return ZeroOneOutcome(
            reward_normal=float(d["reward_normal"]), reward_rare=float(d["reward_rare"])
        )
    if kind == "discrete":
        return DiscreteOutcome(
            thresholds=tuple(float(v) for v in d["thresholds"]),
            rewards=tuple(float(v) for v in d["rewards"]),
        )
    raise ConfigurationError(f"unknown valuation mapping kind {kind!r} (scenario configs support linear, zero-one, discrete)")


def _mapping_to_dict(mapping: OutcomeMapping) -> dict:
    if isinstance(mapping, LinearOutcome):
        return {"kind": "linear", "gamma": mapping.gamma, "beta": mapping.beta}
    if isinstance(mapping, ZeroOneOutcome):
        return {
            "kind": "zero-one",
            "reward_normal": mapping.reward_normal,
            "reward_rare": mapping.reward_rare,
        }
    if isinstance(mapping, DiscreteOutcome):
        return {
            "kind": "discrete",
            "thresholds": list(mapping.thresholds),
            "rewards": list(mapping.rewards),
        }
    raise ConfigurationError(f"unsupported mapping for scenario configs: {mapping!r}")


def config_to_dict(config: ScenarioConfig) -> dict:
    return {
        "market": {
            "buyers": config.num_buyers,
            "sellers": config.num_sellers,
            "horizon": config.horizon,
            "discount": config.discount,
            "seed": config.seed,
        },
        "buyers": {"bands": [list(band) for band in config.budget_bands]},
        "sellers": {"cost": config.seller_cost},
        "strategy": _strategy_to_dict(config.strategy),
        "participation": {**_participation_to_dict(config.participation), "mode": config.mode},
        "valuation": _mapping_to_dict(config.utility_mapping),
    }


def config_from_dict(data: dict) -> ScenarioConfig:
    try:
        market = data["market"]
        participation = dict(data.get("participation", {"kind": "ratio", "mode": "expected"}))
        mode = participation.pop("mode", "expected")
        bands = data.get("buyers", {}).get("bands")
        if bands is None:
            raise ConfigurationError("missing buyers.bands (one [low, high] pair per buyer)")
        config = ScenarioConfig(
            num_buyers=int(market["buyers"]),
            num_sellers=int(market["sellers"]),
            horizon=int(market["horizon"]),
            discount=float(market["discount"]),
            seed=int(market["seed"]),
            budget_bands=tuple((float(lo), float(hi)) for lo, hi in bands),
            strategy=_strategy_from_dict(data.get("strategy", {"kind": "fairshare"})),
            participation=_participation_from_dict(participation),
            mode=str(mode),
            seller_cost=float(data.get("sellers", {}).get("cost", 0.0)),
            utility_mapping=_mapping_from_dict(
                data.get("valuation", {"kind": "linear", "gamma": 1.0, "beta": 0.5})
            ),
        )
    except ConfigurationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed scenario config: {exc}") from exc
    problems = config.violations()
    if problems:
        raise ConfigurationError("; ".join(problems))
    return config


def config_digest(config: ScenarioConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_scenario_config(path) -> tuple[ScenarioConfig, str | None]:
    """Parse a scenario TOML file; returns the config and its output directory, if set."""
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    out_dir = data.get("output", {}).get("directory")
    return config_from_dict(data), out_dir
