from __future__ import annotations

from pathlib import Path

import pytest

from coopfarm.model import AccuracyModelParams, CostVector, Farm, PayoffParams, singleton_accuracy

FIXTURES_DIR = Path(__file__).resolve().parents[1] / "fixtures" / "v1"


@pytest.fixture
def accuracy_params() -> AccuracyModelParams:
    return AccuracyModelParams(a_min=0.5, a_max=0.99, volume_scale=10.0)


@pytest.fixture
def payoff_params(accuracy_params) -> PayoffParams:
    return PayoffParams(benefit_coefficient=10.0, accuracy_model=accuracy_params)


def make_farm(farm_id: int, quality: float, device_count: int,
              params: AccuracyModelParams) -> Farm:
    """Farm whose local accuracy obeys the singleton identity by construction."""
    return Farm(id=farm_id, device_count=device_count, quality=quality,
                local_accuracy=singleton_accuracy(device_count, quality, params))


def uniform_costs(coop_each: float, local_compute: float) -> CostVector:
    return CostVector(membership=coop_each, penalty=coop_each, upload_comm=coop_each,
                      download_comm=coop_each, storage=coop_each,
                      local_compute=local_compute)
