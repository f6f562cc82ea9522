"""Score embeddings against a centroid pair: cosine similarities + softmax.

Single-vector and batch paths share the same chunked kernels, so a batch
result is bitwise identical to the corresponding single calls, and parallel
execution is bitwise identical to sequential.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._numeric import CHUNK_ROWS, as_vector_f64, row_dots, row_norms
from .aggregation import CentroidPair
from .errors import DimensionMismatchError, ValidationError, ZeroNormError
from .store import EmbeddingDataset


@dataclass(frozen=True)
class ScoreComponents:
    """Cosine similarities to the high/low anchors and the softmax score."""

    s_high: float
    s_low: float
    score: float


@dataclass(frozen=True)
class ScoreFailure:
    """A record that could not be scored; the batch continues without it."""

    index: int
    id: str
    message: str


def _clamp_unit(v: np.ndarray) -> np.ndarray:
    return np.clip(v, -1.0, 1.0)


def cosine_similarity(x, c) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    xv = as_vector_f64(x)
    cv = as_vector_f64(c)
    if xv.shape[0] != cv.shape[0]:
        raise DimensionMismatchError(
            f"vector lengths differ: {xv.shape[0]} vs {cv.shape[0]}"
        )
    if not (np.isfinite(xv).all() and np.isfinite(cv).all()):
        raise ValidationError("cosine inputs must be finite")
    nx = float(row_norms(xv[None, :])[0])
    nc = float(row_norms(cv[None, :])[0])
    if nx == 0.0 or nc == 0.0:
        raise ZeroNormError("cosine is undefined for a zero-norm vector")
    dot = float(row_dots(xv[None, :], cv)[0])
    return float(_clamp_unit(np.float64(dot / (nx * nc))))


def _sigmoid(d: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-d))


def score_embedding(x, pair: CentroidPair) -> ScoreComponents:
    """Softmax of the two anchor cosines, computed as sigmoid(s_high - s_low)."""
    s_high = cosine_similarity(x, pair.c_high)
    s_low = cosine_similarity(x, pair.c_low)
    score = float(_sigmoid(np.float64(s_high - s_low)))
    return ScoreComponents(s_high, s_low, score)


def score_batch(
    dataset: EmbeddingDataset, pair: CentroidPair, threads: int = 1
) -> tuple[list[tuple[str, ScoreComponents]], list[ScoreFailure]]:
    """Score every record of a dataset against the pair, in input order.

    Zero-norm records are reported as ScoreFailure entries instead of
    aborting the batch. A dimension mismatch aborts.
    """
    if dataset.dim != pair.dim:
        raise DimensionMismatchError(
            f"dataset dim {dataset.dim} does not match centroid dim {pair.dim}"
        )
    n = len(dataset)
    X = dataset.embeddings.astype(np.float64)
    nc_high = float(row_norms(pair.c_high[None, :])[0])
    nc_low = float(row_norms(pair.c_low[None, :])[0])

    s_high = np.empty(n, dtype=np.float64)
    s_low = np.empty(n, dtype=np.float64)
    norms = np.empty(n, dtype=np.float64)

    def run_chunk(lo: int) -> None:
        hi = min(lo + CHUNK_ROWS, n)
        chunk = X[lo:hi]
        cn = row_norms(chunk)
        norms[lo:hi] = cn
        with np.errstate(divide="ignore", invalid="ignore"):
            s_high[lo:hi] = _clamp_unit(row_dots(chunk, pair.c_high) / (cn * nc_high))
            s_low[lo:hi] = _clamp_unit(row_dots(chunk, pair.c_low) / (cn * nc_low))

    starts = range(0, n, CHUNK_ROWS)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for lo in starts:
            run_chunk(lo)

    results: list[tuple[str, ScoreComponents]] = []
    failures: list[ScoreFailure] = []
    for i in range(n):
        if norms[i] == 0.0:
            failures.append(
                ScoreFailure(i, dataset.ids[i], "zero-norm embedding cannot be scored")
            )
            continue
        score = float(_sigmoid(np.float64(s_high[i] - s_low[i])))
        results.append(
            (dataset.ids[i], ScoreComponents(float(s_high[i]), float(s_low[i]), score))
        )
    return results, failures
