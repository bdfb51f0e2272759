"""Control clustering: normalize six features, project with PCA, pick k, k-means.

The pipeline mirrors how the critical-control set is found: per-control
[tec, mtac, cr, ac, atc, cmr] min-max normalized to [0, 1], reduced to two
principal components, k chosen by the elbow of the k-means inertia curve,
and the final partition labeled by descending mean technique coverage.
All randomness flows from one integer seed, so outputs are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    EmptyInput,
    MismatchedInput,
    TooFewRows,
)
from .metrics import MetricsRecord
from .model import Dataset, control_sort_key

FEATURE_COLUMNS = ("tec", "mtac", "cr", "ac", "atc", "cmr")
DEFAULT_SEED = 42
DEFAULT_RESTARTS = 10
DEFAULT_K_MAX = 10
MAX_LLOYD_ITERATIONS = 300


@dataclass(frozen=True)
class FeatureMatrix:
    """Min-max normalized feature rows for the mitigating controls."""

    control_ids: tuple[str, ...]
    values: np.ndarray  # shape (n, 6), all entries in [0, 1]
    col_min: np.ndarray
    col_max: np.ndarray


@dataclass(frozen=True)
class PcaProjection:
    control_ids: tuple[str, ...]
    coords: np.ndarray  # shape (n, n_components)
    explained_variance: tuple[float, ...]
    components: np.ndarray  # shape (n_components, d), orthonormal rows
    mean: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class ElbowResult:
    k: int
    inertia_curve: Mapping[int, float]
    degenerate: bool = False


@dataclass(frozen=True)
class ClusterAssignment:
    projection: Mapping[str, tuple[float, ...]]
    explained_variance: tuple[float, ...]
    k: int
    labels: Mapping[str, int]
    centroids: tuple[tuple[float, ...], ...]
    inertia: float
    inertia_curve: Mapping[int, float]
    seed: int
    restarts: int


@dataclass(frozen=True)
class ClusterSummary:
    """One labeled cluster with its union-coverage aggregates."""

    label: str
    control_ids: tuple[str, ...]
    count: int
    mean_tec: float
    mitigated_techniques: int  # MT: distinct techniques mitigated by the union
    aftm: float  # mean per-tactic fraction of techniques mitigated by the union
    fa: float  # fraction of adversaries with >=1 technique mitigated by the union
    aftma: float  # mean per-adversary fraction of techniques mitigated by the union


def normalize_minmax(records: Sequence[MetricsRecord]) -> FeatureMatrix:
    """Build the (x - min) / (max - min) feature matrix, rows sorted by control id.

    Constant columns map to 0. Records must all be mitigating controls
    (cr present).
    """
    if not records:
        raise EmptyInput("no metrics records to normalize")
    ordered = sorted(records, key=lambda r: control_sort_key(r.control_id))
    raw = np.empty((len(ordered), len(FEATURE_COLUMNS)))
    for i, rec in enumerate(ordered):
        if rec.cr is None:
            raise MismatchedInput(f"control {rec.control_id} has no cr (tec=0)")
        raw[i] = [rec.tec, rec.mtac, rec.cr, rec.ac, rec.atc, rec.cmr]
    col_min = raw.min(axis=0)
    col_max = raw.max(axis=0)
    spread = col_max - col_min
    values = np.zeros_like(raw)
    nonconstant = spread > 0
    values[:, nonconstant] = (raw[:, nonconstant] - col_min[nonconstant]) / spread[nonconstant]
    return FeatureMatrix(
        control_ids=tuple(rec.control_id for rec in ordered),
        values=values,
        col_min=col_min,
        col_max=col_max,
    )


def pca(matrix: FeatureMatrix, n_components: int = 2) -> PcaProjection:
    """Project the mean-centered matrix onto its top right-singular directions.

    Sign convention: the largest-magnitude loading of each component is
    positive, which pins the projection byte-for-byte across runs. When the
    data has rank < n_components the missing components are zero-padded and
    the result is flagged degenerate.
    """
    x = matrix.values
    n, d = x.shape
    if n < n_components or d < n_components:
        raise DegenerateInput(f"need at least {n_components} rows and columns, got {n}x{d}")
    mean = x.mean(axis=0)
    centered = x - mean
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(n, d) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))

    components = np.zeros((n_components, d))
    coords = np.zeros((n, n_components))
    usable = min(rank, n_components)
    for j in range(usable):
        direction = vt[j]
        pivot = int(np.argmax(np.abs(direction)))
        if direction[pivot] < 0:
            direction = -direction
        components[j] = direction
        coords[:, j] = centered @ direction

    total_var = float(np.sum(s**2))
    explained = tuple(
        float(s[j] ** 2 / total_var) if j < usable and total_var > 0 else 0.0
        for j in range(n_components)
    )
    return PcaProjection(
        control_ids=matrix.control_ids,
        coords=coords,
        explained_variance=explained,
        components=components,
        mean=mean,
        degenerate=rank < n_components,
    )


def _as_points(data) -> tuple[tuple[str, ...], np.ndarray]:
    if isinstance(data, PcaProjection):
        return data.control_ids, data.coords
    if isinstance(data, FeatureMatrix):
        return data.control_ids, data.values
    arr = np.asarray(data, dtype=float)
    return tuple(str(i) for i in range(arr.shape[0])), arr


def _kmeans_single(points: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float]:
    """One k-means++ run; returns (labels, centroids, inertia)."""
    n = points.shape[0]
    # k-means++ seeding: first centroid uniform, then D^2 sampling.
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest_sq.sum()
        if total == 0:
            centroids[j] = points[rng.integers(n)]
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest_sq), r, side="right"))
            idx = min(idx, n - 1)
            centroids[j] = points[idx]
        closest_sq = np.minimum(closest_sq, np.sum((points - centroids[j]) ** 2, axis=1))

    labels = np.full(n, -1)
    for _ in range(MAX_LLOYD_ITERATIONS):
        distances = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(distances, axis=1)
        for j in range(k):
            members = points[new_labels == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                # Empty cluster: reseed from the point farthest from its centroid.
                per_point = distances[np.arange(n), new_labels]
                farthest = int(np.argmax(per_point))
                centroids[j] = points[farthest]
                new_labels[farthest] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    # Recompute means so each centroid is exactly its members' mean.
    for j in range(k):
        members = points[labels == j]
        if len(members):
            centroids[j] = members.mean(axis=0)
    inertia = float(np.sum((points - centroids[labels]) ** 2))
    return labels, centroids, inertia


def kmeans(
    projection,
    k: int,
    seed: int = DEFAULT_SEED,
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterAssignment:
    """Best-of-restarts k-means over the projected points.

    Deterministic for a fixed (seed, restarts, data): child seeds are spawned
    per restart and the winner is the lowest inertia, then lowest restart
    index.
    """
    ids, points = _as_points(projection)
    if k < 1 or points.shape[0] < k:
        raise TooFewRows(f"cannot form {k} clusters from {points.shape[0]} rows")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        result = _kmeans_single(points, k, np.random.default_rng(child))
        if best is None or result[2] < best[2]:
            best = result
    labels, centroids, inertia = best
    explained = (
        projection.explained_variance if isinstance(projection, PcaProjection) else ()
    )
    return ClusterAssignment(
        projection={cid: tuple(map(float, points[i])) for i, cid in enumerate(ids)},
        explained_variance=tuple(explained),
        k=k,
        labels={cid: int(labels[i]) for i, cid in enumerate(ids)},
        centroids=tuple(tuple(map(float, c)) for c in centroids),
        inertia=inertia,
        inertia_curve={},
        seed=seed,
        restarts=restarts,
    )


def elbow(
    data,
    k_max: int = DEFAULT_K_MAX,
    seed: int = DEFAULT_SEED,
    restarts: int = DEFAULT_RESTARTS,
) -> ElbowResult:
    """Pick k by the largest second difference of the k-means inertia curve.

    Candidates are k in [2, k_max - 1]; ties break toward smaller k. A flat
    zero curve (all points identical) is flagged degenerate and yields k=2.
    """
    ids, points = _as_points(data)
    if k_max < 2:
        raise TooFewRows(f"k_max must be at least 2, got {k_max}")
    if points.shape[0] < k_max:
        raise TooFewRows(f"need at least k_max={k_max} rows, got {points.shape[0]}")
    curve: dict[int, float] = {}
    for k in range(1, k_max + 1):
        curve[k] = kmeans(points, k, seed=seed, restarts=restarts).inertia
    if all(v == 0.0 for v in curve.values()):
        return ElbowResult(k=2, inertia_curve=curve, degenerate=True)
    best_k, best_d2 = 2, float("-inf")
    for k in range(2, k_max):
        d2 = curve[k - 1] - 2 * curve[k] + curve[k + 1]
        if d2 > best_d2:
            best_k, best_d2 = k, d2
    return ElbowResult(k=best_k, inertia_curve=curve)


def cluster_controls(
    records: Sequence[MetricsRecord],
    seed: int = DEFAULT_SEED,
    k_max: int = DEFAULT_K_MAX,
    restarts: int = DEFAULT_RESTARTS,
    use_raw_features: bool = False,
) -> ClusterAssignment:
    """Full pipeline: normalize, project, choose k by elbow, cluster.

    use_raw_features clusters the 6-D normalized matrix instead of the 2-D
    projection, for sensitivity analysis.
    """
    matrix = normalize_minmax(records)
    projection = pca(matrix, n_components=2)
    data = matrix if use_raw_features else projection
    chosen = elbow(data, k_max=k_max, seed=seed, restarts=restarts)
    assignment = kmeans(data, chosen.k, seed=seed, restarts=restarts)
    return ClusterAssignment(
        projection={
            cid: tuple(map(float, projection.coords[i]))
            for i, cid in enumerate(projection.control_ids)
        },
        explained_variance=projection.explained_variance,
        k=assignment.k,
        labels=assignment.labels,
        centroids=assignment.centroids,
        inertia=assignment.inertia,
        inertia_curve=chosen.inertia_curve,
        seed=seed,
        restarts=restarts,
    )


def _union_aggregates(dataset: Dataset, control_ids: Sequence[str]) -> tuple[int, float, float, float]:
    union: set[str] = set()
    for cid in control_ids:
        union.update(dataset.mitigations[cid])
    n_tactics = len(dataset.tactics)
    aftm = 0.0
    if n_tactics:
        total = 0.0
        for members in dataset.tactic_techniques.values():
            if members:
                total += len(union & members) / len(members)
        aftm = total / n_tactics
    fa = aftma = 0.0
    if dataset.adversaries:
        hit = 0
        frac_sum = 0.0
        for ae in dataset.adversaries.values():
            covered = len(ae.technique_ids & union)
            if covered:
                hit += 1
            if ae.technique_ids:
                frac_sum += covered / len(ae.technique_ids)
        fa = hit / len(dataset.adversaries)
        aftma = frac_sum / len(dataset.adversaries)
    return len(union), aftm, fa, aftma


def rank_clusters(
    dataset: Dataset,
    assignment: ClusterAssignment,
    records: Sequence[MetricsRecord],
) -> list[ClusterSummary]:
    """Label clusters A, B, ... by descending mean TEC and aggregate each union.

    The aggregates treat each cluster as one combined control: distinct
    techniques mitigated (MT), mean per-tactic coverage of the union (AFTM),
    adversaries touched (FA), and mean per-adversary technique coverage
    (AFTMA).
    """
    by_id = {rec.control_id: rec for rec in records}
    if set(by_id) != set(assignment.labels):
        raise MismatchedInput("records and cluster labels cover different controls")
    members: dict[int, list[str]] = {}
    for cid, label in assignment.labels.items():
        members.setdefault(label, []).append(cid)
    ranked = sorted(
        members.values(),
        key=lambda ids: (-(sum(by_id[c].tec for c in ids) / len(ids)), sorted(ids)[0]),
    )
    summaries = []
    for i, ids in enumerate(ranked):
        ids_sorted = tuple(sorted(ids, key=control_sort_key))
        mt, aftm, fa, aftma = _union_aggregates(dataset, ids_sorted)
        summaries.append(
            ClusterSummary(
                label=chr(ord("A") + i),
                control_ids=ids_sorted,
                count=len(ids_sorted),
                mean_tec=sum(by_id[c].tec for c in ids_sorted) / len(ids_sorted),
                mitigated_techniques=mt,
                aftm=aftm,
                fa=fa,
                aftma=aftma,
            )
        )
    return summaries


def partition_key(labels: Mapping[str, int]) -> frozenset[frozenset[str]]:
    """Label-free view of a clustering, for partition-equality comparisons."""
    groups: dict[int, set[str]] = {}
    for cid, label in labels.items():
        groups.setdefault(label, set()).add(cid)
    return frozenset(frozenset(g) for g in groups.values())
