"""Rank-correlation evaluation of scores against mean opinion scores.

srcc uses average (fractional) ranks and Pearson correlation of the rank
vectors, the standard generalization under ties; the tie-free closed form
is kept as an independent cross-check path. krcc is tau-b with tie
correction, computed either by merge-sort counting or by the quadratic
definition (both must agree). Constant inputs raise instead of returning
NaN so sweep tables never silently absorb undefined values.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .aggregation import CentroidPair
from .errors import (
    ConstantInputError,
    MissingMetadataError,
    ValidationError,
)
from .scoring import score_batch
from .store import EmbeddingDataset

MEASURE_SRCC = "srcc"
MEASURE_KRCC = "krcc"
MEASURE_PLCC = "plcc"
ALL_MEASURES = (MEASURE_SRCC, MEASURE_KRCC, MEASURE_PLCC)


@dataclass(frozen=True)
class RankData:
    """Average ranks of two equal-length sequences and their differences."""

    ranks_a: np.ndarray
    ranks_b: np.ndarray
    d: np.ndarray
    n: int


@dataclass(frozen=True)
class EvaluationReport:
    srcc: float
    krcc: Optional[float]
    plcc: Optional[float]
    n: int
    per_image: tuple[tuple[str, float, float], ...]


def _as_finite_vector(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be 1-d")
    if v.shape[0] < 1:
        raise ValidationError(f"{name} must be non-empty")
    if not np.isfinite(v).all():
        raise ValidationError(f"{name} contains non-finite values")
    return v


def rank_with_ties(values) -> np.ndarray:
    """1-based average ranks; tied values share the mean of their positions."""
    v = _as_finite_vector(values, "values")
    n = v.shape[0]
    order = np.argsort(v, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and v[order[j + 1]] == v[order[i]]:
            j += 1
        # positions are 1-based; the mean of consecutive integers is exact
        avg = ((i + 1) + (j + 1)) / 2.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    av = _as_finite_vector(a, "a")
    bv = _as_finite_vector(b, "b")
    if av.shape[0] != bv.shape[0]:
        raise ValidationError(f"length mismatch: {av.shape[0]} vs {bv.shape[0]}")
    if av.shape[0] < 2:
        raise ValidationError("correlation needs at least 2 observations")
    return av, bv


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - np.mean(a)
    db = b - np.mean(b)
    va = float(np.sum(da * da))
    vb = float(np.sum(db * db))
    if va == 0.0:
        raise ConstantInputError("first input is constant; correlation undefined")
    if vb == 0.0:
        raise ConstantInputError("second input is constant; correlation undefined")
    r = float(np.sum(da * db)) / math.sqrt(va * vb)
    return min(1.0, max(-1.0, r))


def srcc(a, b) -> float:
    """Spearman rank correlation: Pearson over average-rank vectors."""
    av, bv = _check_pair(a, b)
    return _pearson(rank_with_ties(av), rank_with_ties(bv))


def srcc_closed_form(a, b) -> float:
    """Rank-difference form 1 - 6*sum(d^2)/(n(n^2-1)).

    Exact only when both inputs are tie-free; kept as a cross-check path
    for the rank-based srcc.
    """
    av, bv = _check_pair(a, b)
    ra = rank_with_ties(av)
    rb = rank_with_ties(bv)
    d = ra - rb
    n = av.shape[0]
    return 1.0 - 6.0 * float(np.sum(d * d)) / (n * (n * n - 1))


def rank_data(a, b) -> RankData:
    av, bv = _check_pair(a, b)
    ra = rank_with_ties(av)
    rb = rank_with_ties(bv)
    return RankData(ra, rb, ra - rb, av.shape[0])


def _tie_pair_count(v: np.ndarray) -> int:
    _, counts = np.unique(v, return_counts=True)
    return int(sum(int(c) * (int(c) - 1) // 2 for c in counts))


def _joint_tie_pair_count(a: np.ndarray, b: np.ndarray) -> int:
    pairs = {}
    for x, y in zip(a.tolist(), b.tolist()):
        pairs[(x, y)] = pairs.get((x, y), 0) + 1
    return sum(c * (c - 1) // 2 for c in pairs.values())


def _merge_count_inversions(seq: list[float]) -> int:
    """Count strict inversions (seq[i] > seq[j] for i < j) via merge sort."""
    n = len(seq)
    if n < 2:
        return 0
    buf = list(seq)
    tmp = [0.0] * n
    inversions = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if buf[i] <= buf[j]:
                    tmp[k] = buf[i]
                    i += 1
                else:
                    tmp[k] = buf[j]
                    inversions += mid - i
                    j += 1
                k += 1
            while i < mid:
                tmp[k] = buf[i]
                i += 1
                k += 1
            while j < hi:
                tmp[k] = buf[j]
                j += 1
                k += 1
        buf, tmp = tmp, buf
        width *= 2
    return inversions


def krcc(a, b, method: str = "mergesort") -> float:
    """Kendall tau-b with tie correction.

    method="mergesort" counts discordant pairs in O(n log n); method="naive"
    enumerates all pairs. Both produce identical results.
    """
    av, bv = _check_pair(a, b)
    n = av.shape[0]
    n0 = n * (n - 1) // 2
    n1 = _tie_pair_count(av)
    n2 = _tie_pair_count(bv)
    if n0 - n1 == 0:
        raise ConstantInputError("first input is all ties; tau-b undefined")
    if n0 - n2 == 0:
        raise ConstantInputError("second input is all ties; tau-b undefined")

    if method == "naive":
        concordant = discordant = 0
        for i in range(n):
            for j in range(i + 1, n):
                if av[i] == av[j] or bv[i] == bv[j]:
                    continue
                if (av[i] < av[j]) == (bv[i] < bv[j]):
                    concordant += 1
                else:
                    discordant += 1
        c_minus_d = concordant - discordant
    elif method == "mergesort":
        order = sorted(range(n), key=lambda i: (av[i], bv[i]))
        b_sorted = [float(bv[i]) for i in order]
        discordant = _merge_count_inversions(b_sorted)
        n3 = _joint_tie_pair_count(av, bv)
        c_minus_d = n0 - n1 - n2 + n3 - 2 * discordant
    else:
        raise ValidationError(f"unknown krcc method {method!r}")

    tau = c_minus_d / math.sqrt((n0 - n1) * (n0 - n2))
    return min(1.0, max(-1.0, tau))


def plcc(a, b) -> float:
    """Pearson linear correlation on raw values; no nonlinear MOS mapping."""
    av, bv = _check_pair(a, b)
    return _pearson(av, bv)


def evaluate(
    dataset: EmbeddingDataset,
    pair: CentroidPair,
    measures: Iterable[str] = (MEASURE_SRCC,),
    threads: int = 1,
) -> EvaluationReport:
    """Score a MOS-labeled dataset and correlate scores with MOS."""
    wanted = set(measures) | {MEASURE_SRCC}
    unknown = wanted - set(ALL_MEASURES)
    if unknown:
        raise ValidationError(f"unknown measures: {sorted(unknown)}")
    for i, m in enumerate(dataset.mos):
        if m is None:
            raise MissingMetadataError(f"record {dataset.ids[i]!r} has no mos")
    results, _failures = score_batch(dataset, pair, threads=threads)
    if len(results) < 2:
        raise ValidationError(
            f"need at least 2 scorable records, got {len(results)}"
        )
    mos_by_id = dict(zip(dataset.ids, dataset.mos))
    ids = [rid for rid, _ in results]
    scores = np.array([c.score for _, c in results], dtype=np.float64)
    mos = np.array([mos_by_id[rid] for rid in ids], dtype=np.float64)
    report_srcc = srcc(scores, mos)
    report_krcc = krcc(scores, mos) if MEASURE_KRCC in wanted else None
    report_plcc = plcc(scores, mos) if MEASURE_PLCC in wanted else None
    per_image = tuple(
        (rid, float(s), float(m)) for rid, s, m in zip(ids, scores, mos)
    )
    return EvaluationReport(report_srcc, report_krcc, report_plcc, len(ids), per_image)


def report_to_json_dict(report: EvaluationReport) -> dict:
    return {
        "n": report.n,
        "srcc": report.srcc,
        "krcc": report.krcc,
        "plcc": report.plcc,
        "per_image": [
            {"id": rid, "score": s, "mos": m} for rid, s, m in report.per_image
        ],
    }


def write_report_json(report: EvaluationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report_to_json_dict(report), f, indent=2)
        f.write("\n")


def write_report_csv(report: EvaluationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "score", "mos"])
        for rid, s, m in report.per_image:
            w.writerow([rid, repr(s), repr(m)])
