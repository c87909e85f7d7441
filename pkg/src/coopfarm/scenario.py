"""Scenario configuration ingestion and deterministic report serialization.

Scenarios are JSON files; every section except ``farms`` has documented
defaults, every violated constraint is reported with its field path, and
duplicate keys are rejected outright. Reports serialize to canonical JSON:
sorted keys, two-space indentation, shortest-round-trip float formatting (at
most 17 significant digits), trailing newline. Identical runs therefore
produce byte-identical files, and reading a written report reconstructs it
exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any, Optional

from .datagen import CorruptionMode, CorruptionSpec
from .equilibrium import (
    DeviationWitness,
    EquilibriumAnalysis,
    EquilibriumReport,
    Theorem1Result,
    Theorem2Counterexample,
    Theorem2Result,
)
from .ml import AccuracyScore, Clustering
from .model import (
    AccuracyModelParams,
    CostVector,
    Farm,
    PayoffParams,
    Strategy,
    StrategyProfile,
    singleton_accuracy,
)

if TYPE_CHECKING:
    from .strategy import Bloc, BlocAssignment, RoundTrace

REPORT_VERSION = "coopfarm-report/1"
MAX_SEED = 2 ** 64 - 1

DEFAULT_SEED = 42
DEFAULT_DEVICE_COUNT = 10
DEFAULT_QUALITY = 0.9
DEFAULT_COSTS = {"membership": 0.3, "penalty": 0.2, "upload_comm": 0.2,
                 "download_comm": 0.1, "storage": 0.2, "local_compute": 0.6}
DEFAULT_PAYOFF = {"benefit_coefficient": 10.0, "a_min": 0.5, "a_max": 0.99,
                  "volume_scale": 10.0}
DEFAULT_PIPELINE = {"k": 2, "restarts": 10, "lambda_reg": 1e-4, "steps": 3000,
                    "records_per_device": 25, "golden_records": 2000}
DEFAULT_DYNAMICS = {"rounds": 100, "epsilon": 1e-12}


class ScenarioError(ValueError):
    """Base for scenario ingestion failures."""


class ScenarioParseError(ScenarioError):
    """The file is not well-formed JSON (including duplicate keys)."""


class ScenarioValidationError(ScenarioError):
    """A constraint violation, carrying the offending field path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class FarmSpec:
    device_count: int
    quality: float
    corruption: Optional[CorruptionSpec] = None


@dataclass(frozen=True)
class PipelineConfig:
    k: int
    restarts: int
    lambda_reg: float
    steps: int
    records_per_device: int
    golden_records: int


@dataclass(frozen=True)
class DynamicsConfig:
    rounds: int
    epsilon: float


@dataclass(frozen=True)
class ScenarioConfig:
    farms: tuple[FarmSpec, ...]
    costs: CostVector
    payoff: PayoffParams
    pipeline: PipelineConfig
    dynamics: DynamicsConfig
    seed: int
    penalty_in_coop_cost: bool

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)


def build_farms(config: ScenarioConfig) -> list[Farm]:
    """Farm objects with analytic stand-alone accuracies for a scenario."""
    return [
        Farm(id=i,
             device_count=spec.device_count,
             quality=spec.quality,
             local_accuracy=singleton_accuracy(spec.device_count, spec.quality,
                                               config.payoff.accuracy_model),
             malicious=spec.corruption)
        for i, spec in enumerate(config.farms)
    ]


# ---------------------------------------------------------------------------
# parsing + validation

def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ScenarioParseError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def _require_mapping(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioValidationError(path, f"expected an object, got {type(value).__name__}")
    return value


def _known_keys(mapping: dict, allowed: set[str], path: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ScenarioValidationError(f"{path}.{key}" if path else key, "unknown field")


def _get_int(mapping: dict, key: str, path: str, default=None, minimum=None, maximum=None) -> int:
    value = mapping.get(key, default)
    field = f"{path}.{key}" if path else key
    if value is None:
        raise ScenarioValidationError(field, "required field is missing")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioValidationError(field, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioValidationError(field, f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ScenarioValidationError(field, f"must be <= {maximum}, got {value}")
    return value


def _get_float(mapping: dict, key: str, path: str, default=None,
               minimum=None, maximum=None, exclusive_minimum=None) -> float:
    value = mapping.get(key, default)
    field = f"{path}.{key}" if path else key
    if value is None:
        raise ScenarioValidationError(field, "required field is missing")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioValidationError(field, f"expected a number, got {value!r}")
    value = float(value)
    if value != value:  # NaN
        raise ScenarioValidationError(field, "must not be NaN")
    if minimum is not None and value < minimum:
        raise ScenarioValidationError(field, f"must be >= {minimum}, got {value}")
    if exclusive_minimum is not None and value <= exclusive_minimum:
        raise ScenarioValidationError(field, f"must be > {exclusive_minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ScenarioValidationError(field, f"must be <= {maximum}, got {value}")
    return value


def _get_bool(mapping: dict, key: str, path: str, default: bool) -> bool:
    value = mapping.get(key, default)
    field = f"{path}.{key}" if path else key
    if not isinstance(value, bool):
        raise ScenarioValidationError(field, f"expected a boolean, got {value!r}")
    return value


def _parse_corruption(value: Any, path: str) -> Optional[CorruptionSpec]:
    if value is None:
        return None
    mapping = _require_mapping(value, path)
    _known_keys(mapping, {"mode", "rate"}, path)
    mode = mapping.get("mode", "none")
    try:
        mode = CorruptionMode(mode)
    except ValueError:
        raise ScenarioValidationError(
            f"{path}.mode",
            f"must be one of {[m.value for m in CorruptionMode]}, got {mode!r}") from None
    rate = _get_float(mapping, "rate", path, default=0.0, minimum=0.0, maximum=1.0)
    return CorruptionSpec(mode=mode, rate=rate)


def _parse_farm(value: Any, path: str) -> FarmSpec:
    mapping = _require_mapping(value, path)
    _known_keys(mapping, {"device_count", "quality", "corruption"}, path)
    return FarmSpec(
        device_count=_get_int(mapping, "device_count", path,
                              default=DEFAULT_DEVICE_COUNT, minimum=1),
        quality=_get_float(mapping, "quality", path, default=DEFAULT_QUALITY,
                           minimum=0.0, maximum=1.0),
        corruption=_parse_corruption(mapping.get("corruption"), f"{path}.corruption"),
    )


def parse_scenario(raw: Any) -> ScenarioConfig:
    """Validate a decoded JSON object and fill documented defaults."""
    top = _require_mapping(raw, "<root>")
    _known_keys(top, {"farms", "costs", "payoff", "pipeline", "dynamics",
                      "seed", "penalty_in_coop_cost"}, "")

    farms_raw = top.get("farms")
    if not isinstance(farms_raw, list) or not farms_raw:
        raise ScenarioValidationError("farms", "must be a nonempty list of farm objects")
    farms = tuple(_parse_farm(f, f"farms[{i}]") for i, f in enumerate(farms_raw))

    costs_raw = _require_mapping(top.get("costs", {}), "costs")
    _known_keys(costs_raw, set(DEFAULT_COSTS), "costs")
    costs = CostVector(**{
        key: _get_float(costs_raw, key, "costs", default=DEFAULT_COSTS[key], minimum=0.0)
        for key in DEFAULT_COSTS})

    payoff_raw = _require_mapping(top.get("payoff", {}), "payoff")
    _known_keys(payoff_raw, set(DEFAULT_PAYOFF), "payoff")
    a_min = _get_float(payoff_raw, "a_min", "payoff", default=DEFAULT_PAYOFF["a_min"],
                       minimum=0.0, maximum=1.0)
    a_max = _get_float(payoff_raw, "a_max", "payoff", default=DEFAULT_PAYOFF["a_max"],
                       minimum=0.0, maximum=1.0)
    if not a_min < a_max:
        raise ScenarioValidationError("payoff.a_max", f"must exceed a_min={a_min}, got {a_max}")
    payoff = PayoffParams(
        benefit_coefficient=_get_float(payoff_raw, "benefit_coefficient", "payoff",
                                       default=DEFAULT_PAYOFF["benefit_coefficient"],
                                       exclusive_minimum=0.0),
        accuracy_model=AccuracyModelParams(
            a_min=a_min, a_max=a_max,
            volume_scale=_get_float(payoff_raw, "volume_scale", "payoff",
                                    default=DEFAULT_PAYOFF["volume_scale"],
                                    exclusive_minimum=0.0)))

    pipeline_raw = _require_mapping(top.get("pipeline", {}), "pipeline")
    _known_keys(pipeline_raw, set(DEFAULT_PIPELINE), "pipeline")
    pipeline = PipelineConfig(
        k=_get_int(pipeline_raw, "k", "pipeline", default=DEFAULT_PIPELINE["k"], minimum=1),
        restarts=_get_int(pipeline_raw, "restarts", "pipeline",
                          default=DEFAULT_PIPELINE["restarts"], minimum=1),
        lambda_reg=_get_float(pipeline_raw, "lambda_reg", "pipeline",
                              default=DEFAULT_PIPELINE["lambda_reg"], exclusive_minimum=0.0),
        steps=_get_int(pipeline_raw, "steps", "pipeline",
                       default=DEFAULT_PIPELINE["steps"], minimum=1),
        records_per_device=_get_int(pipeline_raw, "records_per_device", "pipeline",
                                    default=DEFAULT_PIPELINE["records_per_device"], minimum=1),
        golden_records=_get_int(pipeline_raw, "golden_records", "pipeline",
                                default=DEFAULT_PIPELINE["golden_records"], minimum=2),
    )

    dynamics_raw = _require_mapping(top.get("dynamics", {}), "dynamics")
    _known_keys(dynamics_raw, set(DEFAULT_DYNAMICS), "dynamics")
    dynamics = DynamicsConfig(
        rounds=_get_int(dynamics_raw, "rounds", "dynamics",
                        default=DEFAULT_DYNAMICS["rounds"], minimum=1),
        epsilon=_get_float(dynamics_raw, "epsilon", "dynamics",
                           default=DEFAULT_DYNAMICS["epsilon"], minimum=0.0),
    )

    return ScenarioConfig(
        farms=farms,
        costs=costs,
        payoff=payoff,
        pipeline=pipeline,
        dynamics=dynamics,
        seed=_get_int(top, "seed", "", default=DEFAULT_SEED, minimum=0, maximum=MAX_SEED),
        penalty_in_coop_cost=_get_bool(top, "penalty_in_coop_cost", "", default=True),
    )


def load_scenario(path) -> ScenarioConfig:
    """Read, parse, and validate a scenario file.

    Raises FileNotFoundError/OSError for I/O problems, ScenarioParseError
    for malformed JSON (duplicate keys included), and
    ScenarioValidationError for constraint violations.
    """
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except ScenarioParseError:
        raise
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON in {path}: {exc}") from exc
    return parse_scenario(raw)


# ---------------------------------------------------------------------------
# report model + canonical serialization

@dataclass(frozen=True)
class SimulationReport:
    """Everything one run produced, in a deterministically serializable shape."""

    version: str
    scenario: ScenarioConfig
    scores: Optional[tuple[AccuracyScore, ...]]
    clustering: Optional[Clustering]
    blocs: Optional["BlocAssignment"]
    equilibrium: Optional[EquilibriumAnalysis]
    rounds: tuple["RoundTrace", ...]


def scenario_to_dict(config: ScenarioConfig) -> dict:
    return {
        "farms": [
            {"device_count": f.device_count, "quality": f.quality,
             "corruption": None if f.corruption is None else
             {"mode": f.corruption.mode.value, "rate": f.corruption.rate}}
            for f in config.farms],
        "costs": {key: getattr(config.costs, key) for key in DEFAULT_COSTS},
        "payoff": {
            "benefit_coefficient": config.payoff.benefit_coefficient,
            "a_min": config.payoff.accuracy_model.a_min,
            "a_max": config.payoff.accuracy_model.a_max,
            "volume_scale": config.payoff.accuracy_model.volume_scale,
        },
        "pipeline": {
            "k": config.pipeline.k,
            "restarts": config.pipeline.restarts,
            "lambda_reg": config.pipeline.lambda_reg,
            "steps": config.pipeline.steps,
            "records_per_device": config.pipeline.records_per_device,
            "golden_records": config.pipeline.golden_records,
        },
        "dynamics": {"rounds": config.dynamics.rounds, "epsilon": config.dynamics.epsilon},
        "seed": config.seed,
        "penalty_in_coop_cost": config.penalty_in_coop_cost,
    }


def _profile_to_list(profile: StrategyProfile) -> list[str]:
    return [s.value for s in profile.strategies]


def _witness_to_dict(witness: DeviationWitness) -> dict:
    return {"farm_id": witness.farm_id, "old_payoff": witness.old_payoff,
            "new_payoff": witness.new_payoff}


def _equilibrium_to_dict(analysis: EquilibriumAnalysis) -> dict:
    report = analysis.report
    t2 = analysis.theorem2
    counterexample = None
    if t2.counterexample is not None:
        ce = t2.counterexample
        counterexample = {
            "costs": {key: getattr(ce.costs, key) for key in DEFAULT_COSTS},
            "params": {
                "benefit_coefficient": ce.params.benefit_coefficient,
                "a_min": ce.params.accuracy_model.a_min,
                "a_max": ce.params.accuracy_model.a_max,
                "volume_scale": ce.params.accuracy_model.volume_scale,
            },
            "margins": list(ce.margins),
        }
    return {
        "nash_profiles": [_profile_to_list(p) for p in report.nash_profiles],
        "all_df_is_ne": report.all_df_is_ne,
        "all_cp_is_ne": report.all_cp_is_ne,
        "witness_deviations": {key: _witness_to_dict(w)
                               for key, w in sorted(report.witness_deviations.items())},
        "profiles_checked": report.profiles_checked,
        "theorem1": {"holds": analysis.theorem1.holds,
                     "condition_met": analysis.theorem1.condition_met},
        "theorem2": {"all_cp_is_ne": t2.all_cp_is_ne,
                     "paper_claim_holds": t2.paper_claim_holds,
                     "margins": list(t2.margins),
                     "counterexample": counterexample},
    }


def report_to_dict(report: SimulationReport) -> dict:
    return {
        "version": report.version,
        "scenario": scenario_to_dict(report.scenario),
        "scores": None if report.scores is None else
        [{"farm_id": s.farm_id, "accuracy": s.accuracy} for s in report.scores],
        "clustering": None if report.clustering is None else {
            "k": report.clustering.k,
            "centroids": list(report.clustering.centroids),
            "assignment": list(report.clustering.assignment),
            "inertia": report.clustering.inertia,
        },
        "blocs": None if report.blocs is None else {
            "blocs": [{"cluster_index": b.cluster_index,
                       "member_ids": list(b.member_ids),
                       "coop_accuracy": b.coop_accuracy}
                      for b in report.blocs.blocs],
            "strategy_of": [s.value for s in report.blocs.strategy_of],
        },
        "equilibrium": None if report.equilibrium is None
        else _equilibrium_to_dict(report.equilibrium),
        "rounds": [{"round": t.round,
                    "strategy_of": [s.value for s in t.strategy_of],
                    "payoffs": list(t.payoffs),
                    "defections_this_round": list(t.defections_this_round)}
                   for t in report.rounds],
    }


def canonical_json(payload: Any) -> str:
    """Canonical rendering: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False,
                      ensure_ascii=True) + "\n"


def write_report(report: SimulationReport, path, csv_tables: bool = False) -> None:
    """Write the canonical JSON report, plus CSV tables when requested.

    The CSV companions land next to the report: ``scores.csv`` (one row per
    farm) and ``rounds.csv`` (one row per farm per round).
    """
    from pathlib import Path

    path = Path(path)
    path.write_text(canonical_json(report_to_dict(report)), encoding="utf-8")
    if not csv_tables:
        return
    scores_path = path.parent / "scores.csv"
    with open(scores_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["farm_id", "accuracy"])
        for score in report.scores or ():
            writer.writerow([score.farm_id, repr(score.accuracy)])
    rounds_path = path.parent / "rounds.csv"
    with open(rounds_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["round", "farm_id", "strategy", "payoff", "defected"])
        for trace in report.rounds:
            for farm_id, (strat, payoff) in enumerate(zip(trace.strategy_of, trace.payoffs)):
                writer.writerow([trace.round, farm_id, strat.value, repr(payoff),
                                 int(farm_id in trace.defections_this_round)])


def _scenario_from_dict(raw: dict) -> ScenarioConfig:
    return parse_scenario(raw)


def _equilibrium_from_dict(raw: dict) -> EquilibriumAnalysis:
    witnesses = {
        key: DeviationWitness(farm_id=w["farm_id"], old_payoff=w["old_payoff"],
                              new_payoff=w["new_payoff"])
        for key, w in raw["witness_deviations"].items()}
    report = EquilibriumReport(
        nash_profiles=tuple(StrategyProfile.from_strategies(p)
                            for p in raw["nash_profiles"]),
        all_df_is_ne=raw["all_df_is_ne"],
        all_cp_is_ne=raw["all_cp_is_ne"],
        witness_deviations=witnesses,
        profiles_checked=raw["profiles_checked"],
    )
    t2_raw = raw["theorem2"]
    counterexample = None
    if t2_raw["counterexample"] is not None:
        ce = t2_raw["counterexample"]
        counterexample = Theorem2Counterexample(
            costs=CostVector(**ce["costs"]),
            params=PayoffParams(
                benefit_coefficient=ce["params"]["benefit_coefficient"],
                accuracy_model=AccuracyModelParams(
                    a_min=ce["params"]["a_min"], a_max=ce["params"]["a_max"],
                    volume_scale=ce["params"]["volume_scale"])),
            margins=tuple(ce["margins"]),
        )
    return EquilibriumAnalysis(
        report=report,
        theorem1=Theorem1Result(holds=raw["theorem1"]["holds"],
                                condition_met=raw["theorem1"]["condition_met"]),
        theorem2=Theorem2Result(all_cp_is_ne=t2_raw["all_cp_is_ne"],
                                paper_claim_holds=t2_raw["paper_claim_holds"],
                                margins=tuple(t2_raw["margins"]),
                                counterexample=counterexample),
    )


def report_from_dict(raw: dict) -> SimulationReport:
    from .strategy import Bloc, BlocAssignment, RoundTrace

    blocs = None
    if raw["blocs"] is not None:
        blocs = BlocAssignment(
            blocs=tuple(Bloc(cluster_index=b["cluster_index"],
                             member_ids=tuple(b["member_ids"]),
                             coop_accuracy=b["coop_accuracy"])
                        for b in raw["blocs"]["blocs"]),
            strategy_of=tuple(Strategy(s) for s in raw["blocs"]["strategy_of"]),
        )
    clustering = None
    if raw["clustering"] is not None:
        clustering = Clustering(
            k=raw["clustering"]["k"],
            centroids=tuple(raw["clustering"]["centroids"]),
            assignment=tuple(raw["clustering"]["assignment"]),
            inertia=raw["clustering"]["inertia"],
        )
    return SimulationReport(
        version=raw["version"],
        scenario=_scenario_from_dict(raw["scenario"]),
        scores=None if raw["scores"] is None else
        tuple(AccuracyScore(farm_id=s["farm_id"], accuracy=s["accuracy"])
              for s in raw["scores"]),
        clustering=clustering,
        blocs=blocs,
        equilibrium=None if raw["equilibrium"] is None
        else _equilibrium_from_dict(raw["equilibrium"]),
        rounds=tuple(RoundTrace(round=t["round"],
                                strategy_of=tuple(Strategy(s) for s in t["strategy_of"]),
                                payoffs=tuple(t["payoffs"]),
                                defections_this_round=tuple(t["defections_this_round"]))
                     for t in raw["rounds"]),
    )


def read_report(path) -> SimulationReport:
    with open(path, "r", encoding="utf-8") as handle:
        raw = json.load(handle)
    return report_from_dict(raw)
