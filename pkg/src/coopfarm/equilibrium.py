"""Exhaustive Nash-equilibrium search over pure CP/DF strategy profiles.

The checker uses weak Nash semantics: a profile is an equilibrium when no
single farm can raise its own payoff by more than a tolerance by flipping
only its own strategy. Two canonical profiles get dedicated treatment:
All-DF (everyone builds locally) and All-CP (everyone in the co-op). The
theorem checkers report whether the textbook claims about those profiles
actually hold for the supplied parameters instead of assuming them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import (
    DEFAULT_EPSILON,
    CostVector,
    Farm,
    PayoffParams,
    Strategy,
    StrategyProfile,
    check_farm_ids,
    coalition_accuracy,
    payoff_cp,
    payoff_df,
    profile_payoffs,
    total_coop_cost,
)

#: 2^20 profiles is the largest space the exhaustive search will walk.
MAX_ENUM_FARMS = 20


class ProfileSpaceError(ValueError):
    """Raised when the 2^N profile space is too large to enumerate."""


@dataclass(frozen=True)
class DeviationWitness:
    """A unilateral strategy flip that strictly improves the deviator's payoff."""

    farm_id: int
    old_payoff: float
    new_payoff: float


@dataclass(frozen=True)
class EquilibriumReport:
    """Outcome of enumerating every pure strategy profile."""

    nash_profiles: tuple[StrategyProfile, ...]
    all_df_is_ne: bool
    all_cp_is_ne: bool
    # Keyed "all_df" / "all_cp"; present only when that profile is not a NE.
    witness_deviations: dict[str, DeviationWitness]
    profiles_checked: int


@dataclass(frozen=True)
class Theorem1Result:
    """All-DF equilibrium check and its sufficient cost condition."""

    holds: bool
    condition_met: bool


@dataclass(frozen=True)
class Theorem2Counterexample:
    """Parameters under which All-CP is an equilibrium after all."""

    costs: CostVector
    params: PayoffParams
    margins: tuple[float, ...]


@dataclass(frozen=True)
class Theorem2Result:
    """All-CP equilibrium check plus the per-farm defection margins."""

    all_cp_is_ne: bool
    paper_claim_holds: bool
    margins: tuple[float, ...]
    counterexample: Optional[Theorem2Counterexample]


def _flip_payoff(farms: Sequence[Farm], profile: StrategyProfile, farm_index: int,
                 costs: CostVector, params: PayoffParams,
                 penalty_in_coop_cost: bool) -> float:
    """Payoff farm ``farm_index`` would earn after flipping only its own strategy."""
    if profile.strategies[farm_index] is Strategy.CP:
        return payoff_df(farms[farm_index].local_accuracy, costs, params)
    cooperators = [farm for farm, s in zip(farms, profile.strategies) if s is Strategy.CP]
    cooperators.append(farms[farm_index])
    acc = coalition_accuracy(cooperators, params.accuracy_model)
    return payoff_cp(acc, costs, params, penalty_in_coop_cost)


def is_nash(farms: Sequence[Farm], profile: StrategyProfile, costs: CostVector,
            params: PayoffParams, epsilon: float = DEFAULT_EPSILON,
            penalty_in_coop_cost: bool = True,
            ) -> tuple[bool, Optional[DeviationWitness]]:
    """Weak Nash check with a deterministic witness.

    Returns ``(True, None)`` when no farm can improve its payoff by more than
    ``epsilon`` through a unilateral flip, else ``(False, witness)`` for the
    lowest-index improving farm (each farm's single possible flip is checked
    in id order, so reports are reproducible).
    """
    if len(farms) < 1:
        raise ValueError("need at least one farm")
    base = profile_payoffs(farms, profile, costs, params, penalty_in_coop_cost)
    for i in range(len(farms)):
        flipped = _flip_payoff(farms, profile, i, costs, params, penalty_in_coop_cost)
        if flipped > base[i] + epsilon:
            return False, DeviationWitness(farm_id=i, old_payoff=base[i], new_payoff=flipped)
    return True, None


def _profile_from_mask(mask: int, n: int) -> StrategyProfile:
    return StrategyProfile.from_strategies(
        Strategy.CP if mask >> i & 1 else Strategy.DF for i in range(n))


def enumerate_equilibria(farms: Sequence[Farm], costs: CostVector,
                         params: PayoffParams, epsilon: float = DEFAULT_EPSILON,
                         penalty_in_coop_cost: bool = True) -> EquilibriumReport:
    """Visit all 2^N profiles and collect every weak Nash equilibrium.

    Profiles are generated in canonical order (farm i's strategy is bit i of
    an ascending counter, with the bit set meaning CP), so ``nash_profiles``
    is deterministic. Refuses scenarios with more than ``MAX_ENUM_FARMS``
    farms.
    """
    n = len(farms)
    if n < 1:
        raise ValueError("need at least one farm")
    if n > MAX_ENUM_FARMS:
        raise ProfileSpaceError("profile space too large")
    check_farm_ids(farms)

    nash: list[StrategyProfile] = []
    witnesses: dict[str, DeviationWitness] = {}
    all_df_is_ne = False
    all_cp_is_ne = False
    full_mask = (1 << n) - 1
    for mask in range(1 << n):
        profile = _profile_from_mask(mask, n)
        ok, witness = is_nash(farms, profile, costs, params, epsilon, penalty_in_coop_cost)
        if ok:
            nash.append(profile)
        if mask == 0:
            all_df_is_ne = ok
            if witness is not None:
                witnesses["all_df"] = witness
        if mask == full_mask:
            all_cp_is_ne = ok
            if witness is not None:
                witnesses["all_cp"] = witness
    return EquilibriumReport(
        nash_profiles=tuple(nash),
        all_df_is_ne=all_df_is_ne,
        all_cp_is_ne=all_cp_is_ne,
        witness_deviations=witnesses,
        profiles_checked=1 << n,
    )


def check_theorem1(farms: Sequence[Farm], costs: CostVector, params: PayoffParams,
                   epsilon: float = DEFAULT_EPSILON,
                   penalty_in_coop_cost: bool = True) -> Theorem1Result:
    """Is All-DF a weak Nash equilibrium, and does the cost condition imply it?

    ``condition_met`` is the sufficient condition: for every farm, the full
    cooperative cost covers the local compute cost plus whatever accuracy a
    singleton co-op would add (nothing, under the singleton identity). The
    implication condition_met => holds is asserted; the converse need not
    hold and both flags are reported independently.
    """
    check_farm_ids(farms)
    coop_cost = total_coop_cost(costs)
    condition_met = all(
        coop_cost >= costs.local_compute + params.benefit_coefficient * (
            coalition_accuracy([farm], params.accuracy_model) - farm.local_accuracy)
        for farm in farms)
    holds, _ = is_nash(farms, StrategyProfile.all_df(len(farms)), costs, params,
                       epsilon, penalty_in_coop_cost)
    if condition_met and not holds:
        raise RuntimeError("cost condition held yet All-DF was not an equilibrium; "
                           "payoff arithmetic is inconsistent")
    return Theorem1Result(holds=holds, condition_met=condition_met)


@dataclass(frozen=True)
class EquilibriumAnalysis:
    """Full enumeration plus both canonical-profile theorem checks."""

    report: EquilibriumReport
    theorem1: Theorem1Result
    theorem2: "Theorem2Result"


def analyze_equilibrium(farms: Sequence[Farm], costs: CostVector, params: PayoffParams,
                        epsilon: float = DEFAULT_EPSILON,
                        penalty_in_coop_cost: bool = True) -> EquilibriumAnalysis:
    """Run the exhaustive search and both theorem checkers on one scenario."""
    return EquilibriumAnalysis(
        report=enumerate_equilibria(farms, costs, params, epsilon, penalty_in_coop_cost),
        theorem1=check_theorem1(farms, costs, params, epsilon, penalty_in_coop_cost),
        theorem2=check_theorem2(farms, costs, params, epsilon, penalty_in_coop_cost),
    )


def check_theorem2(farms: Sequence[Farm], costs: CostVector, params: PayoffParams,
                   epsilon: float = DEFAULT_EPSILON,
                   penalty_in_coop_cost: bool = True) -> Theorem2Result:
    """Measure whether All-CP fails to be an equilibrium, per farm.

    ``margins[i]`` is what farm i gains by defecting from the grand
    coalition. The claim that this is always positive is parameter-dependent:
    with enough accuracy synergy and low costs every margin can be <= 0, in
    which case All-CP *is* a weak NE and the result carries a counterexample
    instead of pretending otherwise.
    """
    check_farm_ids(farms)
    n = len(farms)
    all_cp = StrategyProfile.all_cp(n)
    coop_payoffs = profile_payoffs(farms, all_cp, costs, params, penalty_in_coop_cost)
    margins = tuple(
        payoff_df(farm.local_accuracy, costs, params) - coop_payoffs[farm.id]
        for farm in farms)
    all_cp_is_ne, _ = is_nash(farms, all_cp, costs, params, epsilon, penalty_in_coop_cost)
    counterexample = None
    if all_cp_is_ne:
        counterexample = Theorem2Counterexample(costs=costs, params=params, margins=margins)
    return Theorem2Result(
        all_cp_is_ne=all_cp_is_ne,
        paper_claim_holds=not all_cp_is_ne,
        margins=margins,
        counterexample=counterexample,
    )
