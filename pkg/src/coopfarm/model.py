"""Core domain types and payoff arithmetic for the co-op farming game.

A farm either cooperates (CP: ships its sensor data to the co-op cloud, pays
the full membership/communication/storage cost stack, and receives the
coalition model's accuracy) or defects (DF: trains locally, paying only its
local computation cost). Coalition accuracy follows a saturating
volume-times-quality law calibrated so a singleton coalition reproduces the
farm's standalone accuracy exactly.

Everything here is a pure function over immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

if TYPE_CHECKING:  # avoids a runtime cycle; datagen imports Farm back
    from .datagen import CorruptionSpec

#: Tolerance below which a payoff change does not count as an improvement.
DEFAULT_EPSILON = 1e-12


class Strategy(str, Enum):
    """The two pure strategies available to a farm."""

    CP = "CP"
    DF = "DF"


@dataclass(frozen=True)
class Farm:
    """One participating farm.

    ``local_accuracy`` is the accuracy the farm achieves on its own; builders
    derive it from ``device_count`` and ``quality`` via the same closed form
    used for coalitions, so the singleton identity holds bit-for-bit.
    """

    id: int
    device_count: int
    quality: float
    local_accuracy: float
    malicious: Optional["CorruptionSpec"] = None

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"farm id must be nonnegative, got {self.id}")
        if self.device_count < 1:
            raise ValueError(f"device_count must be >= 1, got {self.device_count}")
        if not (0.0 <= self.quality <= 1.0) or math.isnan(self.quality):
            raise ValueError(f"quality must lie in [0, 1], got {self.quality}")
        if not (0.0 <= self.local_accuracy <= 1.0) or math.isnan(self.local_accuracy):
            raise ValueError(f"local_accuracy must lie in [0, 1], got {self.local_accuracy}")


@dataclass(frozen=True)
class CostVector:
    """The five cooperative cost components plus the stand-alone compute cost.

    ``local_compute`` is what a defector pays instead of the cooperative
    stack; it is not part of the cooperative total.
    """

    membership: float
    penalty: float
    upload_comm: float
    download_comm: float
    storage: float
    local_compute: float

    def __post_init__(self) -> None:
        for name in ("membership", "penalty", "upload_comm", "download_comm",
                     "storage", "local_compute"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"cost component {name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class AccuracyModelParams:
    """Parameters of the coalition accuracy law.

    accuracy = a_min + (a_max - a_min) * Q * (1 - exp(-V / volume_scale))

    where V is the coalition's total device count and Q its volume-weighted
    mean data quality.
    """

    a_min: float
    a_max: float
    volume_scale: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.a_min < self.a_max <= 1.0):
            raise ValueError(
                f"need 0 <= a_min < a_max <= 1, got a_min={self.a_min}, a_max={self.a_max}")
        if not (self.volume_scale > 0.0) or not math.isfinite(self.volume_scale):
            raise ValueError(f"volume_scale must be positive, got {self.volume_scale}")


@dataclass(frozen=True)
class PayoffParams:
    """Benefit scaling plus the accuracy model.

    ``benefit_coefficient`` converts model accuracy into the same units as
    the cost components. Zero is tolerated here so degenerate benefit-free
    analyses can run; scenario validation requires a strictly positive value.
    """

    benefit_coefficient: float
    accuracy_model: AccuracyModelParams

    def __post_init__(self) -> None:
        if not math.isfinite(self.benefit_coefficient) or self.benefit_coefficient < 0.0:
            raise ValueError(
                f"benefit_coefficient must be finite and >= 0, got {self.benefit_coefficient}")


@dataclass(frozen=True)
class StrategyProfile:
    """An assignment of CP/DF to each of the N farms."""

    strategies: tuple[Strategy, ...]
    cooperator_count: int
    defector_count: int

    def __post_init__(self) -> None:
        n_cp = sum(1 for s in self.strategies if s is Strategy.CP)
        if self.cooperator_count != n_cp:
            raise ValueError(
                f"cooperator_count={self.cooperator_count} but profile has {n_cp} CP entries")
        if self.cooperator_count + self.defector_count != len(self.strategies):
            raise ValueError("cooperator_count + defector_count must equal profile length")

    @classmethod
    def from_strategies(cls, strategies: Iterable[Strategy]) -> "StrategyProfile":
        strats = tuple(Strategy(s) for s in strategies)
        n_cp = sum(1 for s in strats if s is Strategy.CP)
        return cls(strategies=strats, cooperator_count=n_cp, defector_count=len(strats) - n_cp)

    @classmethod
    def all_cp(cls, n: int) -> "StrategyProfile":
        return cls.from_strategies([Strategy.CP] * n)

    @classmethod
    def all_df(cls, n: int) -> "StrategyProfile":
        return cls.from_strategies([Strategy.DF] * n)

    def with_flip(self, farm_index: int) -> "StrategyProfile":
        """The profile with only ``farm_index``'s strategy inverted."""
        flipped = list(self.strategies)
        flipped[farm_index] = (
            Strategy.DF if flipped[farm_index] is Strategy.CP else Strategy.CP)
        return StrategyProfile.from_strategies(flipped)

    def __len__(self) -> int:
        return len(self.strategies)


def check_farm_ids(farms: Sequence[Farm]) -> None:
    """Farms within a scenario must be indexed 0..N-1 in order."""
    for position, farm in enumerate(farms):
        if farm.id != position:
            raise ValueError(
                f"farm ids must be contiguous from 0; position {position} has id {farm.id}")


def _accuracy_from_sums(volume: float, weighted_quality: float,
                        params: AccuracyModelParams) -> float:
    quality = weighted_quality / volume
    saturation = 1.0 - math.exp(-volume / params.volume_scale)
    return params.a_min + (params.a_max - params.a_min) * quality * saturation


def singleton_accuracy(device_count: int, quality: float,
                       params: AccuracyModelParams) -> float:
    """Stand-alone accuracy of a farm; identical to a one-member coalition."""
    return _accuracy_from_sums(float(device_count), device_count * quality, params)


def total_coop_cost(costs: CostVector) -> float:
    """Total cost of participating in the co-op (local compute excluded)."""
    return (costs.membership + costs.penalty + costs.upload_comm
            + costs.download_comm + costs.storage)


def coalition_accuracy(members: Iterable[Farm], params: AccuracyModelParams) -> float:
    """Accuracy of the model a coalition of farms trains together.

    Invariant under member ordering (members are summed in id order) and
    bounded by [a_min, a_max]. A singleton coalition evaluates to exactly the
    same expression that defines the farm's local accuracy.
    """
    ordered = sorted(members, key=lambda farm: farm.id)
    if not ordered:
        raise ValueError("empty coalition")
    volume = 0.0
    weighted = 0.0
    for farm in ordered:
        volume += farm.device_count
        weighted += farm.device_count * farm.quality
    return _accuracy_from_sums(volume, weighted, params)


def payoff_cp(coalition_acc: float, costs: CostVector, params: PayoffParams,
              penalty_in_coop_cost: bool = True) -> float:
    """Payoff of a cooperating farm given its coalition's accuracy.

    By default the breach penalty sits inside the subtracted cost stack;
    ``penalty_in_coop_cost=False`` drops it from the per-round cost (it is
    then only ever charged at the moment a farm actually breaks membership).
    """
    coop_cost = total_coop_cost(costs)
    if not penalty_in_coop_cost:
        coop_cost = (costs.membership + costs.upload_comm
                     + costs.download_comm + costs.storage)
    return params.benefit_coefficient * coalition_acc - coop_cost


def payoff_df(local_acc: float, costs: CostVector, params: PayoffParams) -> float:
    """Payoff of a defecting farm: benefit of its local model minus local compute."""
    return params.benefit_coefficient * local_acc - costs.local_compute


def profile_payoffs(farms: Sequence[Farm], profile: StrategyProfile,
                    costs: CostVector, params: PayoffParams,
                    penalty_in_coop_cost: bool = True) -> tuple[float, ...]:
    """Per-farm payoffs under a strategy profile.

    Cooperators earn the accuracy of the coalition formed by the profile's
    actual cooperator set; defectors earn their local accuracy. A profile
    with zero cooperators yields only defector payoffs.
    """
    if len(farms) != len(profile):
        raise ValueError(
            f"farms ({len(farms)}) and profile ({len(profile)}) lengths differ")
    check_farm_ids(farms)
    cooperators = [farm for farm, s in zip(farms, profile.strategies) if s is Strategy.CP]
    coop_acc = None
    if cooperators:
        coop_acc = coalition_accuracy(cooperators, params.accuracy_model)
    payoffs = []
    for farm, strat in zip(farms, profile.strategies):
        if strat is Strategy.CP:
            payoffs.append(payoff_cp(coop_acc, costs, params, penalty_in_coop_cost))
        else:
            payoffs.append(payoff_df(farm.local_accuracy, costs, params))
    return tuple(payoffs)
