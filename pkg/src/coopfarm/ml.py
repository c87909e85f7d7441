"""ML kit for the fair strategy: linear margin classifier and 1-D k-means.

The classifier is a plain linear model trained by projected stochastic
subgradient descent on the regularized hinge loss (step size 1/(lambda*t),
weights projected onto the ball of radius 1/sqrt(lambda)). No kernels, no
solver dependency; the generated data has wide margins and a linear boundary
is all the pipeline needs.

k-means comes in two flavors: the Lloyd's-iteration heuristic with
distance-weighted probabilistic seeding and restarts (the production path),
and an exact dynamic program over sorted points (the test oracle; optimal
1-D clusters are contiguous in sorted order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datagen import FIELD_NAMES, FarmDataset, Label, SensorRecord, dataset_features, dataset_labels

MODEL_FORMAT_VERSION = "coopfarm-linear-model/1"

KMEANS_SHIFT_TOLERANCE = 1e-9
KMEANS_MAX_ITERATIONS = 100
EXACT_KMEANS_MAX_POINTS = 10_000


@dataclass(frozen=True)
class LinearModel:
    """Linear decision rule over standardized features.

    A record is valid when ``weights . z + bias >= 0`` (standardized
    features z); an exactly zero score counts as valid. Standardization
    constants come from the training corpus and travel with the model.
    """

    feature_names: tuple[str, ...]
    weights: tuple[float, ...]
    bias: float
    regularization: float
    steps_trained: int
    standardize_mean: tuple[float, ...]
    standardize_std: tuple[float, ...]

    def decision_value(self, features: Sequence[float]) -> float:
        z = (np.asarray(features, dtype=float) - np.asarray(self.standardize_mean)) \
            / np.asarray(self.standardize_std)
        return float(np.dot(self.weights, z) + self.bias)


@dataclass(frozen=True)
class AccuracyScore:
    farm_id: int
    accuracy: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy}")


@dataclass(frozen=True)
class Clustering:
    """k clusters over scalar points: sorted centroids, per-point assignment,
    and the within-cluster sum of squared distances."""

    k: int
    centroids: tuple[float, ...]
    assignment: tuple[int, ...]
    inertia: float


@dataclass(frozen=True)
class FitTrace:
    """Raw trainer output, plus optional objective checkpoints."""

    weights: np.ndarray
    bias: float
    objective_checkpoints: tuple[float, ...]


def hinge_objective(weights: np.ndarray, bias: float, features: np.ndarray,
                    labels: np.ndarray, lambda_reg: float) -> float:
    """Regularized hinge loss: lambda/2 (||w||^2 + b^2) + mean hinge.

    The bias is treated as the weight of an implicit constant feature, so it
    participates in both the regularizer and the norm projection.
    """
    margins = labels * (features @ weights + bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return float(0.5 * lambda_reg * (np.dot(weights, weights) + bias * bias) + hinge)


def fit_hinge(features: np.ndarray, labels: np.ndarray, lambda_reg: float,
              steps: int, seed: int, checkpoint_every: Optional[int] = None) -> FitTrace:
    """Projected stochastic subgradient descent on the hinge loss.

    ``labels`` are +1/-1. The bias rides along as a constant feature (keeping
    every coordinate inside the projection ball; an unregularized bias takes
    a 1/lambda-sized first step and then drifts back only logarithmically).
    Sample order is drawn from a PCG64 stream seeded with ``seed``, so
    training is bit-reproducible. The augmented weight norm never exceeds
    1/sqrt(lambda_reg) after projection.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if lambda_reg <= 0.0:
        raise ValueError(f"lambda_reg must be positive, got {lambda_reg}")
    augmented = np.hstack([features, np.ones((len(features), 1))])
    n, dim = augmented.shape
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = np.zeros(dim)
    radius = 1.0 / math.sqrt(lambda_reg)
    checkpoints: list[float] = []
    for t in range(1, steps + 1):
        i = int(rng.integers(n))
        eta = 1.0 / (lambda_reg * t)
        if labels[i] * (augmented[i] @ weights) < 1.0:
            weights = (1.0 - eta * lambda_reg) * weights + eta * labels[i] * augmented[i]
        else:
            weights = (1.0 - eta * lambda_reg) * weights
        norm = float(np.linalg.norm(weights))
        if norm > radius:
            weights = weights * (radius / norm)
        if checkpoint_every and t % checkpoint_every == 0:
            checkpoints.append(hinge_objective(weights[:-1], weights[-1],
                                               features, labels, lambda_reg))
    return FitTrace(weights=weights[:-1], bias=float(weights[-1]),
                    objective_checkpoints=tuple(checkpoints))


def train_classifier(dataset: FarmDataset, lambda_reg: float, steps: int,
                     seed: int) -> LinearModel:
    """Fit the built-in reference classifier on a training corpus.

    Features are standardized with the corpus's own per-field mean and
    standard deviation (stored in the model, so later scoring of any farm is
    consistent). Requires both labels to be present.
    """
    features = dataset_features(dataset)
    labels = dataset_labels(dataset)
    if len(set(labels.tolist())) < 2:
        raise ValueError("degenerate training set")
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[std == 0.0] = 1.0
    trace = fit_hinge((features - mean) / std, labels, lambda_reg, steps, seed)
    return LinearModel(
        feature_names=FIELD_NAMES,
        weights=tuple(float(w) for w in trace.weights),
        bias=float(trace.bias),
        regularization=lambda_reg,
        steps_trained=steps,
        standardize_mean=tuple(float(m) for m in mean),
        standardize_std=tuple(float(s) for s in std),
    )


def classify(model: LinearModel, record: SensorRecord) -> Label:
    """Valid when the decision value is >= 0 (exact zero counts as valid)."""
    return Label.VALID if model.decision_value(record.features()) >= 0.0 else Label.ANOMALOUS


def score_farm(model: LinearModel, dataset: FarmDataset) -> AccuracyScore:
    """Fraction of a farm's records the model labels in agreement with ground truth."""
    if not dataset.records:
        raise ValueError("no records")
    z = (dataset_features(dataset) - np.asarray(model.standardize_mean)) \
        / np.asarray(model.standardize_std)
    predicted_valid = z @ np.asarray(model.weights) + model.bias >= 0.0
    actual_valid = dataset_labels(dataset) > 0.0
    accuracy = float(np.mean(predicted_valid == actual_valid))
    return AccuracyScore(farm_id=dataset.farm_id, accuracy=accuracy)


def serialize_model(model: LinearModel) -> str:
    """Versioned flat text form of a model, for fixture pinning."""
    lines = [
        MODEL_FORMAT_VERSION,
        "features " + ",".join(model.feature_names),
        "weights " + " ".join(repr(w) for w in model.weights),
        "bias " + repr(model.bias),
        "regularization " + repr(model.regularization),
        "steps_trained " + str(model.steps_trained),
        "mean " + " ".join(repr(m) for m in model.standardize_mean),
        "std " + " ".join(repr(s) for s in model.standardize_std),
    ]
    return "\n".join(lines) + "\n"


def deserialize_model(text: str) -> LinearModel:
    lines = text.strip().split("\n")
    if lines[0] != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {lines[0]!r}")
    fields = {}
    for line in lines[1:]:
        key, _, rest = line.partition(" ")
        fields[key] = rest
    return LinearModel(
        feature_names=tuple(fields["features"].split(",")),
        weights=tuple(float(v) for v in fields["weights"].split()),
        bias=float(fields["bias"]),
        regularization=float(fields["regularization"]),
        steps_trained=int(fields["steps_trained"]),
        standardize_mean=tuple(float(v) for v in fields["mean"].split()),
        standardize_std=tuple(float(v) for v in fields["std"].split()),
    )


def _nearest(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, which realizes the ties->lower-index rule
    return np.abs(points[:, None] - centroids[None, :]).argmin(axis=1)


def _inertia(points: np.ndarray, centroids: np.ndarray, assignment: np.ndarray) -> float:
    return float(((points - centroids[assignment]) ** 2).sum())


def _seed_centroids(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted probabilistic seeding (squared-distance weights)."""
    centroids = np.empty(k)
    centroids[0] = points[int(rng.integers(len(points)))]
    d2 = (points - centroids[0]) ** 2
    for j in range(1, k):
        probabilities = d2 / d2.sum()
        centroids[j] = points[int(rng.choice(len(points), p=probabilities))]
        d2 = np.minimum(d2, (points - centroids[j]) ** 2)
    return centroids


def _refill_empty(points: np.ndarray, centroids: np.ndarray, j: int,
                  assignment: np.ndarray) -> np.ndarray:
    """Reseed empty cluster j with the point farthest from its centroid.

    Skips candidates whose value coincides with another centroid (those
    would tie back to the lower index); with k distinct point values one
    always exists.
    """
    others = np.delete(np.arange(len(centroids)), j)
    by_distance = np.argsort(-np.abs(points - centroids[assignment]), kind="stable")
    for candidate in by_distance:
        if not np.any(centroids[others] == points[candidate]):
            centroids[j] = points[candidate]
            return _nearest(points, centroids)
    raise AssertionError("unreachable: fewer distinct points than clusters")


def _lloyd(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = len(centroids)
    assignment = _nearest(points, centroids)
    for _ in range(KMEANS_MAX_ITERATIONS):
        for j in range(k):
            if not np.any(assignment == j):
                assignment = _refill_empty(points, centroids, j, assignment)
        new_centroids = np.array([points[assignment == j].mean() for j in range(k)])
        shift = float(np.abs(new_centroids - centroids).max())
        centroids = new_centroids
        assignment = _nearest(points, centroids)
        if shift < KMEANS_SHIFT_TOLERANCE:
            break
    return centroids, assignment


def _canonical_clustering(points: np.ndarray, centroids: np.ndarray,
                          assignment: np.ndarray) -> Clustering:
    order = np.argsort(centroids, kind="stable")
    relabel = np.empty(len(order), dtype=int)
    relabel[order] = np.arange(len(order))
    sorted_centroids = centroids[order]
    remapped = relabel[assignment]
    return Clustering(
        k=len(centroids),
        centroids=tuple(float(c) for c in sorted_centroids),
        assignment=tuple(int(a) for a in remapped),
        inertia=_inertia(points, sorted_centroids, remapped),
    )


def _check_kmeans_inputs(points: np.ndarray, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(points) < k:
        raise ValueError(f"need at least k={k} points, got {len(points)}")
    if len(np.unique(points)) < k:
        raise ValueError("k exceeds distinct points")


def kmeans_1d(points: Sequence[float], k: int, restarts: int = 10,
              seed: int = 0) -> Clustering:
    """Lloyd's algorithm over scalar points, best of ``restarts`` seeded runs.

    Convergence is declared when the largest centroid shift drops below
    1e-9 or after 100 iterations. Output centroids are sorted ascending and
    the assignment remapped to match; on an inertia tie the earliest restart
    wins.
    """
    pts = np.asarray(points, dtype=float)
    _check_kmeans_inputs(pts, k)
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best: Optional[Clustering] = None
    for stream in streams:
        rng = np.random.Generator(np.random.PCG64(stream))
        centroids, assignment = _lloyd(pts, _seed_centroids(pts, k, rng))
        candidate = _canonical_clustering(pts, centroids, assignment)
        if best is None or candidate.inertia < best.inertia:
            best = candidate
    return best


def kmeans_1d_exact(points: Sequence[float], k: int) -> Clustering:
    """Globally SSE-optimal 1-D k-means by dynamic programming.

    Sorts the points and exploits that optimal clusters are contiguous
    intervals; rows of the program are filled divide-and-conquer style using
    the monotonicity of optimal split positions.
    """
    pts = np.asarray(points, dtype=float)
    _check_kmeans_inputs(pts, k)
    if len(pts) > EXACT_KMEANS_MAX_POINTS:
        raise ValueError(
            f"exact solver is limited to {EXACT_KMEANS_MAX_POINTS} points, got {len(pts)}")
    order = np.argsort(pts, kind="stable")
    sorted_pts = pts[order]
    n = len(sorted_pts)
    prefix = np.concatenate([[0.0], np.cumsum(sorted_pts)])
    prefix_sq = np.concatenate([[0.0], np.cumsum(sorted_pts ** 2)])

    def interval_cost(lo: int, hi: int) -> float:
        # SSE of sorted_pts[lo..hi] inclusive around its mean
        count = hi - lo + 1
        total = prefix[hi + 1] - prefix[lo]
        total_sq = prefix_sq[hi + 1] - prefix_sq[lo]
        return max(0.0, total_sq - total * total / count)

    cost = np.full((k + 1, n), np.inf)
    split = np.zeros((k + 1, n), dtype=int)
    for i in range(n):
        cost[1][i] = interval_cost(0, i)

    def fill_row(j: int, lo: int, hi: int, split_lo: int, split_hi: int) -> None:
        if lo > hi:
            return
        mid = (lo + hi) // 2
        best_cost, best_split = np.inf, split_lo
        for m in range(split_lo, min(mid - 1, split_hi) + 1):
            candidate = cost[j - 1][m] + interval_cost(m + 1, mid)
            if candidate < best_cost:
                best_cost, best_split = candidate, m
        cost[j][mid] = best_cost
        split[j][mid] = best_split
        fill_row(j, lo, mid - 1, split_lo, best_split)
        fill_row(j, mid + 1, hi, best_split, split_hi)

    for j in range(2, k + 1):
        fill_row(j, j - 1, n - 1, j - 2, n - 2)

    boundaries = []  # inclusive end index of each cluster, last to first
    end = n - 1
    for j in range(k, 1, -1):
        boundaries.append(end)
        end = split[j][end]
    boundaries.append(end)
    boundaries.reverse()

    centroids = np.empty(k)
    sorted_assignment = np.empty(n, dtype=int)
    start = 0
    for cluster, stop in enumerate(boundaries):
        centroids[cluster] = sorted_pts[start:stop + 1].mean()
        sorted_assignment[start:stop + 1] = cluster
        start = stop + 1
    assignment = np.empty(n, dtype=int)
    assignment[order] = sorted_assignment
    return Clustering(
        k=k,
        centroids=tuple(float(c) for c in centroids),
        assignment=tuple(int(a) for a in assignment),
        inertia=_inertia(pts, centroids, assignment),
    )
