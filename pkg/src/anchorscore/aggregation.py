"""Anchor aggregation: Mean, Offset, and k-means centroid construction.

Bitwise determinism rules used throughout:
  - records are re-sorted by id before any summation, so results do not
    depend on input record order;
  - all accumulation happens in float64 with a fixed summation order;
  - every random draw flows through a generator seeded from explicit seeds.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._numeric import as_matrix_f64, freeze, row_norms, sqdist_to_centers
from .errors import (
    DimensionMismatchError,
    EmptySubsetError,
    FormatError,
    ValidationError,
    ZeroNormError,
)
from .store import AnchorSubset

METHOD_MEAN = "mean"
METHOD_OFFSET = "offset"
METHOD_KMEANS = "kmeans"

DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-6
DEFAULT_N_INIT = 10


@dataclass(frozen=True)
class AggregationSpec:
    """How to turn anchor subsets into a centroid pair."""

    method: str
    normalize_inputs: bool = True
    offset_fraction: Optional[float] = None
    n_clusters: Optional[int] = None
    seed: Optional[int] = None
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    n_init: int = DEFAULT_N_INIT

    def __post_init__(self):
        if self.method not in (METHOD_MEAN, METHOD_OFFSET, METHOD_KMEANS):
            raise ValidationError(f"unknown aggregation method {self.method!r}")
        if self.method == METHOD_OFFSET:
            if self.offset_fraction is None:
                raise ValidationError("offset aggregation needs offset_fraction")
            if not (0.0 <= self.offset_fraction < 0.5):
                raise ValidationError(
                    f"offset_fraction must be in [0, 0.5), got {self.offset_fraction}"
                )
        if self.method == METHOD_KMEANS:
            if self.n_clusters is None or self.n_clusters < 1:
                raise ValidationError("kmeans aggregation needs n_clusters >= 1")
            if self.seed is None:
                raise ValidationError("kmeans aggregation needs an explicit seed")
            if self.max_iter < 1:
                raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
            if not self.tol > 0:
                raise ValidationError(f"tol must be > 0, got {self.tol}")
            if self.n_init < 1:
                raise ValidationError(f"n_init must be >= 1, got {self.n_init}")

    @classmethod
    def mean(cls, normalize_inputs: bool = True) -> "AggregationSpec":
        return cls(METHOD_MEAN, normalize_inputs)

    @classmethod
    def offset(cls, offset_fraction: float, normalize_inputs: bool = True) -> "AggregationSpec":
        return cls(METHOD_OFFSET, normalize_inputs, offset_fraction=offset_fraction)

    @classmethod
    def kmeans(
        cls,
        n_clusters: int,
        seed: int,
        max_iter: int = DEFAULT_MAX_ITER,
        tol: float = DEFAULT_TOL,
        n_init: int = DEFAULT_N_INIT,
        normalize_inputs: bool = True,
    ) -> "AggregationSpec":
        return cls(
            METHOD_KMEANS,
            normalize_inputs,
            n_clusters=n_clusters,
            seed=seed,
            max_iter=max_iter,
            tol=tol,
            n_init=n_init,
        )

    def with_seed(self, seed: int) -> "AggregationSpec":
        if self.method != METHOD_KMEANS:
            return self
        return AggregationSpec(
            self.method,
            self.normalize_inputs,
            n_clusters=self.n_clusters,
            seed=seed,
            max_iter=self.max_iter,
            tol=self.tol,
            n_init=self.n_init,
        )

    def describe(self) -> str:
        if self.method == METHOD_MEAN:
            core = "mean()"
        elif self.method == METHOD_OFFSET:
            core = f"offset(fraction={self.offset_fraction!r})"
        else:
            core = (
                f"kmeans(n_clusters={self.n_clusters}, seed={self.seed}, "
                f"max_iter={self.max_iter}, tol={self.tol!r}, n_init={self.n_init})"
            )
        return f"{core} normalize_inputs={self.normalize_inputs}"


@dataclass(frozen=True, eq=False)
class CentroidPair:
    """High/low anchor centroids plus a description of how they were built."""

    c_high: np.ndarray
    c_low: np.ndarray
    dim: int
    spec: str
    provenance: str

    def __post_init__(self):
        hi = np.asarray(self.c_high, dtype=np.float64)
        lo = np.asarray(self.c_low, dtype=np.float64)
        if hi.ndim != 1 or lo.ndim != 1:
            raise ValidationError("centroids must be 1-d vectors")
        if hi.shape[0] != lo.shape[0]:
            raise DimensionMismatchError(
                f"centroid lengths differ: {hi.shape[0]} vs {lo.shape[0]}"
            )
        if hi.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"centroid length {hi.shape[0]} does not match dim {self.dim}"
            )
        if not (np.isfinite(hi).all() and np.isfinite(lo).all()):
            raise ValidationError("centroids must be finite")
        if float(row_norms(hi[None, :])[0]) == 0.0:
            raise ZeroNormError("c_high has zero norm")
        if float(row_norms(lo[None, :])[0]) == 0.0:
            raise ZeroNormError("c_low has zero norm")
        object.__setattr__(self, "c_high", freeze(hi))
        object.__setattr__(self, "c_low", freeze(lo))

    def swapped(self) -> "CentroidPair":
        return CentroidPair(
            self.c_low, self.c_high, self.dim, self.spec, self.provenance + " (swapped)"
        )


@dataclass(frozen=True, eq=False)
class KMeansResult:
    """Output of one Lloyd run: centroids, assignments, objective trace."""

    centroids: np.ndarray
    assignments: np.ndarray
    objective: float
    iterations_run: int
    objective_trace: tuple[float, ...]


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------

def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++ seeding: D^2-weighted draws with local candidate trials."""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = sqdist_to_centers(X, X[chosen[-1]][None, :])[:, 0]
    n_trials = 2 + int(math.log(k)) if k > 1 else 1
    for _ in range(1, k):
        total = float(d2.sum())
        if total == 0.0:
            # All remaining mass sits on already-chosen positions (duplicate
            # points); fall back to a uniform draw over unchosen indices.
            unchosen = [i for i in range(n) if i not in chosen]
            pick = int(rng.choice(unchosen))
            chosen.append(pick)
            continue
        candidates = rng.choice(n, size=n_trials, replace=True, p=d2 / total)
        best_pick, best_pot, best_d2 = -1, np.inf, None
        for c in candidates:
            cand_d2 = np.minimum(d2, sqdist_to_centers(X, X[int(c)][None, :])[:, 0])
            pot = float(cand_d2.sum())
            if pot < best_pot:
                best_pick, best_pot, best_d2 = int(c), pot, cand_d2
        chosen.append(best_pick)
        d2 = best_d2
    return X[chosen].copy()


def _lloyd_once(
    X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float
) -> KMeansResult:
    n = X.shape[0]
    rows = np.arange(n)
    centers = _kmeans_pp_init(X, k, rng)
    d2 = sqdist_to_centers(X, centers)
    prev_obj = math.inf
    prev_labels: np.ndarray | None = None
    trace: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        labels = d2.argmin(axis=1)  # ties resolve to the lowest cluster index
        _repair_empty_clusters(d2, labels, k)
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        for j in range(k):
            mask = labels == j
            centers[j] = X[mask].sum(axis=0) / int(mask.sum())
        d2 = sqdist_to_centers(X, centers)
        obj = float(d2[rows, labels].sum())
        trace.append(obj)
        iterations += 1
        if prev_obj != math.inf and prev_obj - obj <= tol * prev_obj:
            prev_labels = labels
            prev_obj = obj
            break
        prev_labels = labels
        prev_obj = obj
    # Final pass against the final centroids, so every point ends at its
    # nearest centroid exactly. No means update follows, so the objective
    # can only shrink.
    labels = d2.argmin(axis=1)
    obj = float(d2[rows, labels].sum())
    trace.append(obj)
    return KMeansResult(
        centroids=freeze(centers),
        assignments=freeze(labels.astype(np.int64)),
        objective=obj,
        iterations_run=iterations,
        objective_trace=tuple(trace),
    )


def _repair_empty_clusters(d2: np.ndarray, labels: np.ndarray, k: int) -> None:
    """Fill each empty cluster with the point farthest from its centroid.

    Only clusters with at least 2 members may be robbed, so every cluster
    ends non-empty. Mutates labels in place.
    """
    sizes = np.bincount(labels, minlength=k)
    if (sizes > 0).all():
        return
    assigned_d2 = d2[np.arange(labels.shape[0]), labels].copy()
    for e in range(k):
        if sizes[e] > 0:
            continue
        eligible = assigned_d2.copy()
        eligible[sizes[labels] < 2] = -1.0
        p = int(eligible.argmax())
        sizes[labels[p]] -= 1
        labels[p] = e
        sizes[e] += 1
        assigned_d2[p] = 0.0


def kmeans(
    points,
    k: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    n_init: int = DEFAULT_N_INIT,
) -> KMeansResult:
    """Lloyd's algorithm with greedy k-means++ seeding.

    Runs n_init independently seeded starts and keeps the lowest-objective
    result. Assignment breaks distance ties toward the lowest cluster index;
    empty clusters are repaired by stealing the globally farthest point.
    Deterministic for a fixed (seed, n_init).
    """
    X = as_matrix_f64(points)
    n = X.shape[0]
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of points ({n})")
    if not np.isfinite(X).all():
        raise ValidationError("points must be finite")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    if not tol > 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    if n_init < 1:
        raise ValidationError(f"n_init must be >= 1, got {n_init}")
    restarts = 1 if k == 1 else n_init  # k=1 always converges to the mean
    best: KMeansResult | None = None
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))
        result = _lloyd_once(X, k, rng, max_iter, tol)
        if best is None or result.objective < best.objective:
            best = result
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# aggregation operations
# ---------------------------------------------------------------------------

def _id_sorted_rows(subset: AnchorSubset) -> tuple[np.ndarray, list[str]]:
    order = sorted(range(len(subset)), key=lambda i: subset.ids[i])
    return subset.embeddings[order].astype(np.float64), [subset.ids[i] for i in order]


def _normalize_rows(X: np.ndarray, order_ids: Sequence[str]) -> np.ndarray:
    norms = row_norms(X)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroNormError(
            f"record {order_ids[int(zero[0])]!r} has zero norm and cannot be unit-normalized"
        )
    return X / norms[:, None]


def aggregate_mean(subset: AnchorSubset, normalize: bool = True) -> np.ndarray:
    """Arithmetic mean of the subset, optionally unit-normalizing inputs first.

    The result is intentionally not re-normalized; downstream cosine scoring
    absorbs its norm.
    """
    if len(subset) == 0:
        raise EmptySubsetError("cannot aggregate an empty subset")
    X, order_ids = _id_sorted_rows(subset)
    if normalize:
        X = _normalize_rows(X, order_ids)
    return X.sum(axis=0) / X.shape[0]


def aggregate_offset(
    high: AnchorSubset,
    low: AnchorSubset,
    offset_fraction: float,
    normalize: bool = True,
    provenance: str = "",
) -> CentroidPair:
    """Mean aggregation after peeling records nearest the High/Low division.

    The peel count is floor(offset_fraction * n) with n the combined pool
    size; the High subset loses its lowest (mos, id) records, the Low subset
    its highest. offset_fraction=0 reduces exactly to aggregate_mean.
    """
    if not (0.0 <= offset_fraction < 0.5):
        raise ValidationError(f"offset_fraction must be in [0, 0.5), got {offset_fraction}")
    if len(high) == 0 or len(low) == 0:
        raise EmptySubsetError("offset aggregation needs non-empty subsets")
    high.require_mos()
    low.require_mos()
    n = len(high) + len(low)
    n_drop = int(math.floor(offset_fraction * n + 1e-9))
    if n_drop >= len(high):
        raise EmptySubsetError(
            f"offset {offset_fraction} would drop all {len(high)} High records"
        )
    if n_drop >= len(low):
        raise EmptySubsetError(
            f"offset {offset_fraction} would drop all {len(low)} Low records"
        )
    high_order = sorted(range(len(high)), key=lambda i: (high.mos[i], high.ids[i]))
    low_order = sorted(range(len(low)), key=lambda i: (low.mos[i], low.ids[i]))
    kept_high = high.select(high_order[n_drop:])
    kept_low = low.select(low_order[: len(low) - n_drop] if n_drop else low_order)
    spec = AggregationSpec.offset(offset_fraction, normalize)
    return CentroidPair(
        aggregate_mean(kept_high, normalize),
        aggregate_mean(kept_low, normalize),
        high.dim,
        spec.describe(),
        provenance or _default_provenance(high, low),
    )


def aggregate_kmeans(
    subset: AnchorSubset,
    n_clusters: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    normalize: bool = True,
    n_init: int = DEFAULT_N_INIT,
) -> np.ndarray:
    """Cluster the subset and return the unweighted mean of cluster centroids.

    Averaging centroids rather than samples up-weights rare modes of the
    pool; with n_clusters=1 this is exactly aggregate_mean.
    """
    if len(subset) == 0:
        raise EmptySubsetError("cannot aggregate an empty subset")
    X, order_ids = _id_sorted_rows(subset)
    if normalize:
        X = _normalize_rows(X, order_ids)
    result = kmeans(X, n_clusters, seed, max_iter=max_iter, tol=tol, n_init=n_init)
    return result.centroids.sum(axis=0) / result.centroids.shape[0]


def _default_provenance(high: AnchorSubset, low: AnchorSubset) -> str:
    return f"high={len(high)} records, low={len(low)} records"


def build_centroid_pair(
    spec: AggregationSpec,
    high: AnchorSubset,
    low: AnchorSubset,
    provenance: str = "",
) -> CentroidPair:
    """Dispatch to the spec's method; c_high comes from High, c_low from Low."""
    if high.dim != low.dim:
        raise DimensionMismatchError(
            f"subset dimensions differ: {high.dim} vs {low.dim}"
        )
    prov = provenance or _default_provenance(high, low)
    if spec.method == METHOD_OFFSET:
        return aggregate_offset(
            high, low, spec.offset_fraction, spec.normalize_inputs, prov
        )
    if spec.method == METHOD_MEAN:
        c_high = aggregate_mean(high, spec.normalize_inputs)
        c_low = aggregate_mean(low, spec.normalize_inputs)
    else:
        c_high = aggregate_kmeans(
            high,
            spec.n_clusters,
            spec.seed,
            max_iter=spec.max_iter,
            tol=spec.tol,
            normalize=spec.normalize_inputs,
            n_init=spec.n_init,
        )
        c_low = aggregate_kmeans(
            low,
            spec.n_clusters,
            spec.seed,
            max_iter=spec.max_iter,
            tol=spec.tol,
            normalize=spec.normalize_inputs,
            n_init=spec.n_init,
        )
    return CentroidPair(c_high, c_low, high.dim, spec.describe(), prov)


# ---------------------------------------------------------------------------
# centroid persistence
# ---------------------------------------------------------------------------

def save_centroids(pair: CentroidPair, path: str | Path) -> None:
    obj = {
        "dim": pair.dim,
        "c_high": [float(v) for v in pair.c_high],
        "c_low": [float(v) for v in pair.c_low],
        "spec": pair.spec,
        "provenance": pair.provenance,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def load_centroids(path: str | Path) -> CentroidPair:
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: expected a JSON object")
    for key in ("dim", "c_high", "c_low", "spec", "provenance"):
        if key not in obj:
            raise FormatError(f"{path}: missing key {key!r}")
    if not isinstance(obj["dim"], int):
        raise FormatError(f"{path}: dim must be an integer")
    for key in ("c_high", "c_low"):
        vec = obj[key]
        if not isinstance(vec, list) or not all(isinstance(v, (int, float)) for v in vec):
            raise FormatError(f"{path}: {key} must be a list of numbers")
    if len(obj["c_high"]) != len(obj["c_low"]):
        raise FormatError(
            f"{path}: centroid lengths differ "
            f"({len(obj['c_high'])} vs {len(obj['c_low'])})"
        )
    try:
        return CentroidPair(
            np.array(obj["c_high"], dtype=np.float64),
            np.array(obj["c_low"], dtype=np.float64),
            obj["dim"],
            str(obj["spec"]),
            str(obj["provenance"]),
        )
    except (ValidationError, DimensionMismatchError, ZeroNormError) as e:
        raise FormatError(f"{path}: {e}") from e
