"""Ablation sweeps over anchor fraction, offset, and cluster count.

Each sweep point is evaluated on every eval set; fraction and cluster sweeps
repeat with seeds base_seed + r and report mean and population std of SRCC.
Per-point failures in offset and cluster sweeps become error rows so a long
sweep survives one bad configuration; fraction sweeps abort with context.
Identical configs produce byte-identical output files.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .aggregation import (
    METHOD_KMEANS,
    METHOD_MEAN,
    METHOD_OFFSET,
    AggregationSpec,
    aggregate_offset,
    build_centroid_pair,
)
from .errors import AnchorScoreError, ConfigError, SweepError
from .evaluation import evaluate
from .store import (
    AnchorSubset,
    EmbeddingDataset,
    load_dataset,
    split_by_median,
    split_by_reference_flag,
    subsample,
)

AXIS_FRACTION = "fraction"
AXIS_OFFSET = "offset"
AXIS_CLUSTERS = "clusters"
_AXES = (AXIS_FRACTION, AXIS_OFFSET, AXIS_CLUSTERS)

SPLIT_MEDIAN = "median"
SPLIT_REFERENCE = "reference-flag"
_SPLITS = (SPLIT_MEDIAN, SPLIT_REFERENCE)

DEFAULT_REPEATS = 10

_CSV_COLUMNS = ("axis", "axis_value", "eval_set", "mean_srcc", "std_srcc", "repeats", "error")


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple[float, ...]
    repeats: int
    base_seed: int
    spec_template: AggregationSpec
    anchor_source: str
    eval_sets: tuple[str, ...]
    split: str = SPLIT_MEDIAN

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ConfigError(f"unknown axis {self.axis!r}; expected one of {_AXES}")
        if not self.values:
            raise ConfigError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("values must be strictly increasing")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.split not in _SPLITS:
            raise ConfigError(f"unknown split {self.split!r}; expected one of {_SPLITS}")
        if not self.eval_sets:
            raise ConfigError("eval_sets must be non-empty")
        if self.axis == AXIS_CLUSTERS:
            if any(v != int(v) or v < 1 for v in self.values):
                raise ConfigError("cluster counts must be positive integers")
        if self.axis == AXIS_OFFSET:
            if any(not (0.0 <= v < 0.5) for v in self.values):
                raise ConfigError("offset values must lie in [0, 0.5)")
        if self.axis == AXIS_FRACTION:
            if any(not (0.0 < v <= 1.0) for v in self.values):
                raise ConfigError("fractions must lie in (0, 1]")


@dataclass(frozen=True)
class EvalSetOutcome:
    name: str
    mean_srcc: Optional[float]
    std_srcc: Optional[float]
    repeats: int
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    axis: str
    axis_value: float
    per_eval_set: tuple[EvalSetOutcome, ...]


_SPEC_KEYS = {
    "method",
    "normalize_inputs",
    "offset_fraction",
    "n_clusters",
    "seed",
    "max_iter",
    "tol",
    "n_init",
}
_CONFIG_KEYS = {
    "axis",
    "values",
    "repeats",
    "base_seed",
    "spec",
    "anchor_source",
    "eval_sets",
    "split",
}


def load_sweep_config(path: str | Path) -> SweepConfig:
    """Read a sweep config from a JSON file; unknown keys are errors."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config key {sorted(unknown)[0]!r}")
    for required in ("axis", "values", "base_seed", "anchor_source", "eval_sets"):
        if required not in raw:
            raise ConfigError(f"{path}: missing config key {required!r}")
    spec_raw = raw.get("spec", {"method": "mean"})
    if not isinstance(spec_raw, dict):
        raise ConfigError(f"{path}: spec must be an object")
    unknown = set(spec_raw) - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown spec key {sorted(unknown)[0]!r}")
    axis = raw["axis"]
    spec = _spec_from_dict(spec_raw, axis, raw["base_seed"])
    try:
        return SweepConfig(
            axis=axis,
            values=tuple(raw["values"]),
            repeats=int(raw.get("repeats", DEFAULT_REPEATS)),
            base_seed=int(raw["base_seed"]),
            spec_template=spec,
            anchor_source=str(raw["anchor_source"]),
            eval_sets=tuple(str(p) for p in raw["eval_sets"]),
            split=raw.get("split", SPLIT_MEDIAN),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def _spec_from_dict(spec_raw: dict, axis: str, base_seed: int) -> AggregationSpec:
    method = spec_raw.get("method", METHOD_MEAN)
    normalize = bool(spec_raw.get("normalize_inputs", True))
    if axis == AXIS_OFFSET and method != METHOD_OFFSET:
        raise ConfigError(f"offset sweeps need spec method 'offset', got {method!r}")
    if axis == AXIS_CLUSTERS and method != METHOD_KMEANS:
        raise ConfigError(f"cluster sweeps need spec method 'kmeans', got {method!r}")
    if method == METHOD_MEAN:
        return AggregationSpec.mean(normalize)
    if method == METHOD_OFFSET:
        # the axis supplies offset values for offset sweeps
        fraction = spec_raw.get("offset_fraction", 0.0)
        return AggregationSpec.offset(float(fraction), normalize)
    if method == METHOD_KMEANS:
        return AggregationSpec.kmeans(
            n_clusters=int(spec_raw.get("n_clusters", 1)),
            seed=int(spec_raw.get("seed", base_seed)),
            max_iter=int(spec_raw.get("max_iter", 300)),
            tol=float(spec_raw.get("tol", 1e-6)),
            n_init=int(spec_raw.get("n_init", 10)),
            normalize_inputs=normalize,
        )
    raise ConfigError(f"unknown spec method {method!r}")


def _load_anchors(config: SweepConfig) -> tuple[AnchorSubset, AnchorSubset]:
    pool = load_dataset(config.anchor_source)
    if config.split == SPLIT_MEDIAN:
        return split_by_median(pool)
    return split_by_reference_flag(pool)


def _load_eval_sets(config: SweepConfig) -> list[tuple[str, EmbeddingDataset]]:
    loaded = [(name, load_dataset(name)) for name in config.eval_sets]
    return sorted(loaded, key=lambda item: item[0])


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    # identical repeats (fraction 1.0, deterministic axes) must report an
    # exact zero std, which float averaging does not guarantee
    if all(v == values[0] for v in values):
        return float(values[0]), 0.0
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=0))


def sweep_fraction(config: SweepConfig) -> list[SweepResult]:
    """Subsample both anchor subsets at each fraction, repeated over seeds."""
    if config.axis != AXIS_FRACTION:
        raise ConfigError(f"sweep_fraction needs axis 'fraction', got {config.axis!r}")
    high, low = _load_anchors(config)
    eval_sets = _load_eval_sets(config)
    results = []
    for fraction in config.values:
        per_set: dict[str, list[float]] = {name: [] for name, _ in eval_sets}
        for r in range(config.repeats):
            seed = config.base_seed + r
            try:
                sub_high = subsample(high, fraction, seed)
                sub_low = subsample(low, fraction, seed)
                spec = config.spec_template.with_seed(seed)
                pair = build_centroid_pair(
                    spec, sub_high, sub_low, provenance=config.anchor_source
                )
                for name, ds in eval_sets:
                    per_set[name].append(evaluate(ds, pair).srcc)
            except AnchorScoreError as e:
                raise SweepError(
                    f"fraction={fraction} repeat={r} seed={seed}: {e}"
                ) from e
        outcomes = tuple(
            EvalSetOutcome(name, *_mean_std(per_set[name]), repeats=config.repeats)
            for name, _ in eval_sets
        )
        results.append(SweepResult(AXIS_FRACTION, float(fraction), outcomes))
    return results


def sweep_offset(config: SweepConfig) -> list[SweepResult]:
    """One deterministic pair per offset value; failures become error rows."""
    if config.axis != AXIS_OFFSET:
        raise ConfigError(f"sweep_offset needs axis 'offset', got {config.axis!r}")
    high, low = _load_anchors(config)
    eval_sets = _load_eval_sets(config)
    normalize = config.spec_template.normalize_inputs
    results = []
    for offset in config.values:
        try:
            pair = aggregate_offset(
                high, low, float(offset), normalize, provenance=config.anchor_source
            )
        except AnchorScoreError as e:
            outcomes = tuple(
                EvalSetOutcome(name, None, None, repeats=1, error=str(e))
                for name, _ in eval_sets
            )
            results.append(SweepResult(AXIS_OFFSET, float(offset), outcomes))
            continue
        outcomes = []
        for name, ds in eval_sets:
            try:
                outcomes.append(
                    EvalSetOutcome(name, evaluate(ds, pair).srcc, 0.0, repeats=1)
                )
            except AnchorScoreError as e:
                outcomes.append(EvalSetOutcome(name, None, None, repeats=1, error=str(e)))
        results.append(SweepResult(AXIS_OFFSET, float(offset), tuple(outcomes)))
    return results


def sweep_clusters(config: SweepConfig) -> list[SweepResult]:
    """One kmeans pair per cluster count, repeated over seeds for std."""
    if config.axis != AXIS_CLUSTERS:
        raise ConfigError(f"sweep_clusters needs axis 'clusters', got {config.axis!r}")
    high, low = _load_anchors(config)
    eval_sets = _load_eval_sets(config)
    template = config.spec_template
    results = []
    for value in config.values:
        k = int(value)
        per_set: dict[str, list[float]] = {name: [] for name, _ in eval_sets}
        error: Optional[str] = None
        for r in range(config.repeats):
            seed = config.base_seed + r
            spec = AggregationSpec.kmeans(
                n_clusters=k,
                seed=seed,
                max_iter=template.max_iter,
                tol=template.tol,
                n_init=template.n_init,
                normalize_inputs=template.normalize_inputs,
            )
            try:
                pair = build_centroid_pair(
                    spec, high, low, provenance=config.anchor_source
                )
                for name, ds in eval_sets:
                    per_set[name].append(evaluate(ds, pair).srcc)
            except AnchorScoreError as e:
                error = f"repeat={r} seed={seed}: {e}"
                break
        if error is not None:
            outcomes = tuple(
                EvalSetOutcome(name, None, None, repeats=config.repeats, error=error)
                for name, _ in eval_sets
            )
        else:
            outcomes = tuple(
                EvalSetOutcome(name, *_mean_std(per_set[name]), repeats=config.repeats)
                for name, _ in eval_sets
            )
        results.append(SweepResult(AXIS_CLUSTERS, float(value), outcomes))
    return results


def run_sweep(config: SweepConfig) -> list[SweepResult]:
    if config.axis == AXIS_FRACTION:
        return sweep_fraction(config)
    if config.axis == AXIS_OFFSET:
        return sweep_offset(config)
    return sweep_clusters(config)


def has_error_rows(results: Sequence[SweepResult]) -> bool:
    return any(o.error is not None for r in results for o in r.per_eval_set)


# ---------------------------------------------------------------------------
# result emission
# ---------------------------------------------------------------------------

def _rows(results: Sequence[SweepResult]) -> list[dict]:
    rows = []
    for r in results:
        for o in r.per_eval_set:
            rows.append(
                {
                    "axis": r.axis,
                    "axis_value": r.axis_value,
                    "eval_set": o.name,
                    "mean_srcc": o.mean_srcc,
                    "std_srcc": o.std_srcc,
                    "repeats": o.repeats,
                    "error": o.error,
                }
            )
    return rows


def emit_results(
    results: Sequence[SweepResult], path: str | Path, format: str = "csv"
) -> None:
    """Write sweep rows ordered by (axis_value, eval_set) as CSV or JSON."""
    rows = _rows(results)
    if format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(_CSV_COLUMNS)
            for row in rows:
                w.writerow(
                    [
                        row["axis"],
                        repr(float(row["axis_value"])),
                        row["eval_set"],
                        "" if row["mean_srcc"] is None else repr(row["mean_srcc"]),
                        "" if row["std_srcc"] is None else repr(row["std_srcc"]),
                        row["repeats"],
                        row["error"] or "",
                    ]
                )
    elif format == "json":
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"rows": rows}, f, indent=2)
            f.write("\n")
    else:
        raise ConfigError(f"unknown results format {format!r}; expected 'csv' or 'json'")


def load_results_json(path: str | Path) -> list[SweepResult]:
    """Inverse of emit_results(..., format='json')."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    rows = raw["rows"]
    results: list[SweepResult] = []
    current_key: Optional[tuple[str, float]] = None
    bucket: list[EvalSetOutcome] = []
    for row in rows:
        key = (row["axis"], float(row["axis_value"]))
        if current_key is not None and key != current_key:
            results.append(SweepResult(current_key[0], current_key[1], tuple(bucket)))
            bucket = []
        current_key = key
        bucket.append(
            EvalSetOutcome(
                row["eval_set"],
                row["mean_srcc"],
                row["std_srcc"],
                row["repeats"],
                row["error"],
            )
        )
    if current_key is not None:
        results.append(SweepResult(current_key[0], current_key[1], tuple(bucket)))
    return results
