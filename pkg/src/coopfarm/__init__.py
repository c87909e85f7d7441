"""Co-op farming game simulator.

Library + CLI for the cooperative smart-farming game: cost/payoff
arithmetic, exhaustive Nash-equilibrium search with executable theorem
checkers, a deterministic synthetic sensor-data generator, the
classify/score/cluster fair strategy, and repeated-round defection
dynamics.
"""

from .datagen import (
    CorruptionMode,
    CorruptionSpec,
    FarmDataset,
    GenConfig,
    Label,
    SensorRecord,
    generate_dataset,
    golden_fixture,
)
from .equilibrium import (
    EquilibriumAnalysis,
    EquilibriumReport,
    ProfileSpaceError,
    analyze_equilibrium,
    check_theorem1,
    check_theorem2,
    enumerate_equilibria,
    is_nash,
)
from .ml import (
    AccuracyScore,
    Clustering,
    LinearModel,
    classify,
    kmeans_1d,
    kmeans_1d_exact,
    score_farm,
    train_classifier,
)
from .model import (
    DEFAULT_EPSILON,
    AccuracyModelParams,
    CostVector,
    Farm,
    PayoffParams,
    Strategy,
    StrategyProfile,
    coalition_accuracy,
    payoff_cp,
    payoff_df,
    profile_payoffs,
    singleton_accuracy,
    total_coop_cost,
)
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
    SimulationReport,
    build_farms,
    load_scenario,
    read_report,
    write_report,
)
from .strategy import (
    Bloc,
    BlocAssignment,
    RoundTrace,
    run_fair_pipeline,
    run_fair_strategy,
    run_naive_coop,
    simulate_rounds,
)

__version__ = "0.1.0"
