"""The fair strategy pipeline and repeated-round defection dynamics.

Fair strategy: every farm's generated data is scored against the built-in
reference classifier, the scalar accuracy scores are clustered with 1-D
k-means, and each multi-member cluster becomes one co-op bloc. A farm whose
cluster is a singleton stays out and builds its model individually. The
naive baseline throws every farm into a single bloc regardless of quality.

Round dynamics: each round, every still-cooperating farm compares the payoff
of staying in its (possibly shrunken) bloc against going it alone. Farms
that profit from leaving defect simultaneously at round end, paying the
breach penalty once; defection is absorbing. Bloc accuracy during the
dynamics is the analytic coalition law, so rounds are cheap and exactly
reproducible; the classifier-based scores only ever seed the clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

from .datagen import GenConfig, generate_dataset, golden_fixture
from .ml import AccuracyScore, Clustering, kmeans_1d, score_farm, train_classifier
from .model import (
    Farm,
    Strategy,
    coalition_accuracy,
    payoff_cp,
    payoff_df,
    singleton_accuracy,
)
from .scenario import ScenarioConfig, build_farms

#: Stream tags xored into the scenario seed for the pipeline's own draws.
TRAINING_STREAM_TAG = 0x74726169  # "trai"
CLUSTERING_STREAM_TAG = 0x636C7573  # "clus"


@dataclass(frozen=True)
class Bloc:
    """One realized co-op: the cluster it came from, its members, and the
    accuracy their coalition model reaches."""

    cluster_index: int
    member_ids: tuple[int, ...]
    coop_accuracy: float


@dataclass(frozen=True)
class BlocAssignment:
    blocs: tuple[Bloc, ...]
    strategy_of: tuple[Strategy, ...]


@dataclass(frozen=True)
class RoundTrace:
    round: int
    strategy_of: tuple[Strategy, ...]
    payoffs: tuple[float, ...]
    defections_this_round: tuple[int, ...]


@dataclass(frozen=True)
class PipelineResult:
    """Everything the fair pipeline produced on the way to its assignment."""

    scores: tuple[AccuracyScore, ...]
    clustering: Clustering
    assignment: BlocAssignment


def _blocs_from_clusters(farms: list[Farm], assignment: list[int],
                         config: ScenarioConfig) -> BlocAssignment:
    members_of: dict[int, list[int]] = {}
    for farm, cluster in zip(farms, assignment):
        members_of.setdefault(cluster, []).append(farm.id)
    blocs = []
    strategy_of = [Strategy.DF] * len(farms)
    for cluster in sorted(members_of):
        ids = sorted(members_of[cluster])
        if len(ids) < 2:
            continue  # a singleton cluster's farm builds its model individually
        accuracy = coalition_accuracy([farms[i] for i in ids],
                                      config.payoff.accuracy_model)
        blocs.append(Bloc(cluster_index=cluster, member_ids=tuple(ids),
                          coop_accuracy=accuracy))
        for i in ids:
            strategy_of[i] = Strategy.CP
    return BlocAssignment(blocs=tuple(blocs), strategy_of=tuple(strategy_of))


def run_fair_pipeline(config: ScenarioConfig) -> PipelineResult:
    """Generate, score, cluster, and assign: the full fair strategy."""
    farms = build_farms(config)
    gen_config = GenConfig(records_per_device=config.pipeline.records_per_device,
                           golden_records=config.pipeline.golden_records)
    reference = golden_fixture(gen_config, config.seed)
    model = train_classifier(reference, config.pipeline.lambda_reg,
                             config.pipeline.steps,
                             seed=config.seed ^ TRAINING_STREAM_TAG)
    scores = tuple(score_farm(model, generate_dataset(farm, gen_config, config.seed))
                   for farm in farms)
    clustering = kmeans_1d([s.accuracy for s in scores], config.pipeline.k,
                           restarts=config.pipeline.restarts,
                           seed=config.seed ^ CLUSTERING_STREAM_TAG)
    assignment = _blocs_from_clusters(farms, list(clustering.assignment), config)
    return PipelineResult(scores=scores, clustering=clustering, assignment=assignment)


def run_fair_strategy(config: ScenarioConfig) -> BlocAssignment:
    """Bloc assignment under the fair strategy (see :func:`run_fair_pipeline`)."""
    return run_fair_pipeline(config).assignment


def run_naive_coop(config: ScenarioConfig) -> BlocAssignment:
    """Baseline: one bloc containing every farm, everyone cooperative."""
    farms = build_farms(config)
    accuracy = coalition_accuracy(farms, config.payoff.accuracy_model)
    bloc = Bloc(cluster_index=0,
                member_ids=tuple(farm.id for farm in farms),
                coop_accuracy=accuracy)
    return BlocAssignment(blocs=(bloc,),
                          strategy_of=tuple([Strategy.CP] * len(farms)))


def simulate_rounds(config: ScenarioConfig, assignment: BlocAssignment,
                    rounds: int | None = None) -> tuple[RoundTrace, ...]:
    """Play the repeated game from an initial bloc assignment.

    Each round every cooperating farm weighs its in-bloc payoff (bloc
    accuracy recomputed over the members still present) against defecting.
    All farms whose defection strictly improves their payoff beyond the
    configured tolerance leave together at round end and pay the breach
    penalty once, in that round. Once out, a farm never rejoins.
    """
    if rounds is None:
        rounds = config.dynamics.rounds
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    farms = build_farms(config)
    epsilon = config.dynamics.epsilon
    membership = {bloc.cluster_index: set(bloc.member_ids) for bloc in assignment.blocs}
    bloc_of = {farm_id: bloc.cluster_index
               for bloc in assignment.blocs for farm_id in bloc.member_ids}
    strategies = list(assignment.strategy_of)

    trace = []
    for round_number in range(1, rounds + 1):
        accuracy_of = {cluster: coalition_accuracy([farms[i] for i in members],
                                                   config.payoff.accuracy_model)
                       for cluster, members in membership.items() if members}
        payoffs = [0.0] * len(farms)
        defectors = []
        for farm in farms:
            if strategies[farm.id] is Strategy.DF:
                payoffs[farm.id] = payoff_df(farm.local_accuracy, config.costs,
                                             config.payoff)
                continue
            in_bloc = payoff_cp(accuracy_of[bloc_of[farm.id]], config.costs,
                                config.payoff, config.penalty_in_coop_cost)
            alone = payoff_df(farm.local_accuracy, config.costs, config.payoff)
            if alone > in_bloc + epsilon:
                defectors.append(farm.id)
                payoffs[farm.id] = in_bloc - config.costs.penalty
            else:
                payoffs[farm.id] = in_bloc
        trace.append(RoundTrace(
            round=round_number,
            strategy_of=tuple(strategies),
            payoffs=tuple(payoffs),
            defections_this_round=tuple(defectors),
        ))
        for farm_id in defectors:
            strategies[farm_id] = Strategy.DF
            membership[bloc_of[farm_id]].discard(farm_id)
    return tuple(trace)


def local_accuracies(config: ScenarioConfig) -> tuple[float, ...]:
    """Analytic stand-alone accuracy of each configured farm."""
    return tuple(singleton_accuracy(farm.device_count, farm.quality,
                                    config.payoff.accuracy_model)
                 for farm in config.farms)
