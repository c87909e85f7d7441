"""Deterministic synthetic sensor data for farm datasets.

Each record carries six numeric attributes (soil, irrigation, yield and
data-sharing behavior) plus a ground-truth label. Valid records are drawn
from a fixed "golden" normal distribution per field. A farm of quality q
produces a heavy-noise record instead with probability 1 - q: every field is
displaced by at least four golden standard deviations in a random direction,
and the record is labeled anomalous.

The golden fixture is the curated reference corpus the built-in classifier
trains on. Its anomalous half is synthesized one-sidedly, each field pushed
in its canonical degradation direction (dry soil, depleted nutrients, sour
water, late irrigation, poor yield, stale sharing). Farm heavy noise is
direction-random, so a classifier fitted to the golden corpus recognizes the
degradation pattern but scores unstructured garbage near chance, which is
what makes per-farm accuracy track data quality.

All randomness flows through numpy's PCG64 so streams are reproducible and
portable. Per-farm substreams are seeded with ``seed XOR farm_id``; the
golden fixture uses ``seed XOR GOLDEN_STREAM_TAG``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .model import Farm

FIELD_NAMES = (
    "soil_moisture",
    "soil_nutrient",
    "water_quality",
    "watering_schedule",
    "yield_metric",
    "sharing_timeliness",
)

# Golden distribution per field: mean, standard deviation, and the canonical
# degradation direction used for the fixture's one-sided anomalies.
GOLDEN_MEAN = np.array([25.0, 50.0, 7.0, 24.0, 65.0, 0.9])
GOLDEN_SIGMA = np.array([2.5, 5.0, 0.4, 3.0, 8.0, 0.02])
DEGRADATION_DIRECTION = np.array([-1.0, -1.0, -1.0, +1.0, -1.0, -1.0])

# Displacement magnitude for anomalies, in units of the field's sigma.
ANOMALY_MIN_SIGMA = 4.0
ANOMALY_SPAN_SIGMA = 4.0

#: Stream tag ("gold") xored into the seed for the reference corpus.
GOLDEN_STREAM_TAG = 0x676F6C64
#: Sentinel farm id carried by the golden fixture.
GOLDEN_FARM_ID = -1

_TIMELINESS = FIELD_NAMES.index("sharing_timeliness")
_STUCK_FIELD = 0  # stuck sensors freeze soil_moisture
_STUCK_VALUE = 0.0


class Label(str, Enum):
    VALID = "valid"
    ANOMALOUS = "anomalous"


class CorruptionMode(str, Enum):
    NONE = "none"
    LABEL_FLIP = "label_flip"
    STUCK_SENSOR = "stuck_sensor"
    DROPOUT = "dropout"


@dataclass(frozen=True)
class CorruptionSpec:
    """How a rogue farm damages its contribution (threat scenario two)."""

    mode: CorruptionMode
    rate: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.rate <= 1.0) or math.isnan(self.rate):
            raise ValueError(f"corruption rate must lie in [0, 1], got {self.rate}")


@dataclass(frozen=True)
class SensorRecord:
    soil_moisture: float
    soil_nutrient: float
    water_quality: float
    watering_schedule: float
    yield_metric: float
    sharing_timeliness: float
    label: Label

    def features(self) -> tuple[float, ...]:
        return (self.soil_moisture, self.soil_nutrient, self.water_quality,
                self.watering_schedule, self.yield_metric, self.sharing_timeliness)


@dataclass(frozen=True)
class FarmDataset:
    farm_id: int
    records: tuple[SensorRecord, ...]
    generation_seed: int


@dataclass(frozen=True)
class GenConfig:
    """Sizing knobs for generation; field constants are fixed shipped defaults."""

    records_per_device: int = 25
    golden_records: int = 2000

    def __post_init__(self) -> None:
        if self.records_per_device < 1:
            raise ValueError(
                f"records_per_device must be >= 1, got {self.records_per_device}")
        if self.golden_records < 2:
            raise ValueError(f"golden_records must be >= 2, got {self.golden_records}")


def _records_from_arrays(values: np.ndarray, anomalous: np.ndarray) -> tuple[SensorRecord, ...]:
    return tuple(
        SensorRecord(*map(float, row),
                     label=Label.ANOMALOUS if bad else Label.VALID)
        for row, bad in zip(values, anomalous))


def _heavy_noise(rng: np.random.Generator, count: int) -> np.ndarray:
    """Random-direction displacements of 4..8 sigma on every field."""
    signs = rng.integers(0, 2, size=(count, len(FIELD_NAMES))) * 2 - 1
    magnitudes = ANOMALY_MIN_SIGMA + ANOMALY_SPAN_SIGMA * rng.random((count, len(FIELD_NAMES)))
    return GOLDEN_MEAN + signs * GOLDEN_SIGMA * magnitudes


def _degradation_noise(rng: np.random.Generator, count: int) -> np.ndarray:
    """One-sided displacements of 4..8 sigma along each field's degradation direction."""
    magnitudes = ANOMALY_MIN_SIGMA + ANOMALY_SPAN_SIGMA * rng.random((count, len(FIELD_NAMES)))
    return GOLDEN_MEAN + DEGRADATION_DIRECTION * GOLDEN_SIGMA * magnitudes


def generate_dataset(farm: Farm, config: GenConfig, seed: int) -> FarmDataset:
    """Generate one farm's sensor records; bit-identical for identical inputs.

    Quality noise happens first (a 1 - quality fraction of records become
    heavy-noise anomalies), then the farm's corruption, if any: label flips,
    a stuck soil-moisture sensor (frozen at 0.0), or record dropout.
    """
    rng = np.random.Generator(np.random.PCG64(seed ^ farm.id))
    n = farm.device_count * config.records_per_device
    values = rng.normal(GOLDEN_MEAN, GOLDEN_SIGMA, size=(n, len(FIELD_NAMES)))
    anomalous = rng.random(n) < (1.0 - farm.quality)
    bad = int(anomalous.sum())
    if bad:
        values[anomalous] = _heavy_noise(rng, bad)
    values[:, _TIMELINESS] = np.clip(values[:, _TIMELINESS], 0.0, 1.0)

    spec = farm.malicious
    if spec is not None and spec.mode is not CorruptionMode.NONE:
        if spec.mode is CorruptionMode.LABEL_FLIP:
            flips = rng.random(n) < spec.rate
            anomalous = anomalous ^ flips
        elif spec.mode is CorruptionMode.STUCK_SENSOR:
            stuck = rng.random(n) < spec.rate
            values[stuck, _STUCK_FIELD] = _STUCK_VALUE
        elif spec.mode is CorruptionMode.DROPOUT:
            keep = rng.random(n) >= spec.rate
            values = values[keep]
            anomalous = anomalous[keep]

    return FarmDataset(farm_id=farm.id,
                       records=_records_from_arrays(values, anomalous),
                       generation_seed=seed)


def golden_fixture(config: GenConfig, seed: int) -> FarmDataset:
    """The curated reference corpus: corruption-free and class-balanced.

    Odd-indexed records are synthesized as one-sided degradation anomalies,
    so the label split is exactly half and half (within one record).
    """
    rng = np.random.Generator(np.random.PCG64(seed ^ GOLDEN_STREAM_TAG))
    n = config.golden_records
    values = rng.normal(GOLDEN_MEAN, GOLDEN_SIGMA, size=(n, len(FIELD_NAMES)))
    anomalous = np.arange(n) % 2 == 1
    values[anomalous] = _degradation_noise(rng, int(anomalous.sum()))
    values[:, _TIMELINESS] = np.clip(values[:, _TIMELINESS], 0.0, 1.0)
    return FarmDataset(farm_id=GOLDEN_FARM_ID,
                       records=_records_from_arrays(values, anomalous),
                       generation_seed=seed)


def write_dataset_csv(dataset: FarmDataset, path) -> None:
    """One record per row, fields in declaration order, label last.

    Floats are written with shortest round-trip formatting, so reading the
    file back reproduces the values exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(FIELD_NAMES) + ["label"])
        for record in dataset.records:
            writer.writerow([repr(v) for v in record.features()] + [record.label.value])


def read_records_csv(path) -> tuple[SensorRecord, ...]:
    """Inverse of :func:`write_dataset_csv` for the record rows."""
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        expected = list(FIELD_NAMES) + ["label"]
        if header != expected:
            raise ValueError(f"unexpected CSV header {header!r}")
        records = []
        for row in reader:
            records.append(SensorRecord(*(float(cell) for cell in row[:-1]),
                                         label=Label(row[-1])))
    return tuple(records)


def dataset_features(dataset: FarmDataset) -> np.ndarray:
    """(n, 6) feature matrix of a dataset's records."""
    return np.array([record.features() for record in dataset.records], dtype=float)


def dataset_labels(dataset: FarmDataset) -> np.ndarray:
    """Labels as +1 (valid) / -1 (anomalous)."""
    return np.array([1.0 if record.label is Label.VALID else -1.0
                     for record in dataset.records])
