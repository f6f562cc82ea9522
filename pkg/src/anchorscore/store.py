"""Embedding dataset model, file formats, and anchor splitting.

On-disk formats
---------------
QSEB (little-endian binary):
    magic   4 bytes  0x51 0x53 0x45 0x42 ("QSEB")
    version u16      1
    reserved u16     0
    dim     u32
    count   u64
    payload count * dim IEEE-754 binary32 values, record-major order
A sidecar file at "<path>.meta.jsonl" holds one JSON object per record, in
record order: {"id": str, "mos": number|null, "is_reference": bool|null}.

CSV (text):
    header  id,mos,is_reference,e0,e1,...,e{D-1}
    one row per record; empty cells for missing metadata; floats printed
    with round-trip precision.

Embeddings are stored and exchanged as 32-bit floats. All types here are
immutable after construction.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from ._numeric import freeze
from .errors import (
    EmptySubsetError,
    FormatError,
    MissingMetadataError,
    ValidationError,
)

QSEB_MAGIC = b"QSEB"
QSEB_VERSION = 1
_HEADER = struct.Struct("<4sHHIQ")

FORMAT_QSEB = "qseb"
FORMAT_CSV = "csv"
_FORMATS = (FORMAT_QSEB, FORMAT_CSV)


class SubsetLabel(Enum):
    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True)
class EmbeddingRecord:
    """One embedding vector plus optional per-image metadata."""

    id: str
    embedding: np.ndarray
    mos: Optional[float] = None
    is_reference: Optional[bool] = None

    def __post_init__(self):
        arr = np.asarray(self.embedding, dtype=np.float32)
        if arr.ndim != 1:
            raise ValidationError(f"record {self.id!r}: embedding must be 1-d")
        if not np.isfinite(arr).all():
            raise ValidationError(f"record {self.id!r}: embedding has non-finite values")
        object.__setattr__(self, "embedding", freeze(arr))


def _validate_matrix(embeddings: np.ndarray, dim: int, ids: Sequence[str]) -> np.ndarray:
    arr = np.asarray(embeddings, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValidationError(
            f"embeddings must have shape (n, {dim}), got {arr.shape}"
        )
    if arr.shape[0] != len(ids):
        raise ValidationError(
            f"{len(ids)} ids for {arr.shape[0]} embedding rows"
        )
    finite = np.isfinite(arr).all(axis=1)
    if not finite.all():
        i = int(np.flatnonzero(~finite)[0])
        raise ValidationError(
            f"record index {i} (id {ids[i]!r}): embedding has non-finite values"
        )
    seen: dict[str, int] = {}
    for i, rid in enumerate(ids):
        if rid in seen:
            raise ValidationError(
                f"record index {i}: duplicate id {rid!r} (first at index {seen[rid]})"
            )
        seen[rid] = i
    return freeze(arr)


class EmbeddingDataset:
    """A uniform-dimension, ordered collection of embedding records."""

    __slots__ = ("dim", "source_tag", "_embeddings", "_ids", "_mos", "_is_reference")

    def __init__(
        self,
        dim: int,
        embeddings: np.ndarray,
        ids: Sequence[str],
        mos: Sequence[Optional[float]] | None = None,
        is_reference: Sequence[Optional[bool]] | None = None,
        source_tag: str = "",
    ):
        if dim < 1:
            raise ValidationError(f"dim must be >= 1, got {dim}")
        ids = tuple(ids)
        n = len(ids)
        mos = tuple(mos) if mos is not None else (None,) * n
        is_reference = tuple(is_reference) if is_reference is not None else (None,) * n
        if len(mos) != n or len(is_reference) != n:
            raise ValidationError("metadata length does not match record count")
        for i, m in enumerate(mos):
            if m is not None and not math.isfinite(m):
                raise ValidationError(f"record index {i} (id {ids[i]!r}): non-finite mos")
        self.dim = int(dim)
        self.source_tag = source_tag
        self._embeddings = _validate_matrix(embeddings, dim, ids)
        self._ids = ids
        self._mos = mos
        self._is_reference = is_reference

    @classmethod
    def from_records(
        cls, dim: int, records: Sequence[EmbeddingRecord], source_tag: str = ""
    ) -> "EmbeddingDataset":
        for r in records:
            if r.embedding.shape[0] != dim:
                raise ValidationError(
                    f"record {r.id!r}: embedding length {r.embedding.shape[0]} != dim {dim}"
                )
        emb = (
            np.stack([r.embedding for r in records])
            if records
            else np.empty((0, dim), dtype=np.float32)
        )
        return cls(
            dim,
            emb,
            [r.id for r in records],
            [r.mos for r in records],
            [r.is_reference for r in records],
            source_tag,
        )

    @property
    def embeddings(self) -> np.ndarray:
        return self._embeddings

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def mos(self) -> tuple[Optional[float], ...]:
        return self._mos

    @property
    def is_reference(self) -> tuple[Optional[bool], ...]:
        return self._is_reference

    def __len__(self) -> int:
        return len(self._ids)

    def record(self, i: int) -> EmbeddingRecord:
        return EmbeddingRecord(
            self._ids[i], self._embeddings[i], self._mos[i], self._is_reference[i]
        )

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        return (self.record(i) for i in range(len(self)))

    def select(self, indices: Sequence[int], source_tag: str | None = None) -> "EmbeddingDataset":
        idx = list(indices)
        return EmbeddingDataset(
            self.dim,
            self._embeddings[idx],
            [self._ids[i] for i in idx],
            [self._mos[i] for i in idx],
            [self._is_reference[i] for i in idx],
            self.source_tag if source_tag is None else source_tag,
        )


@dataclass(frozen=True)
class AnchorSubset:
    """A labeled pool of records used to form one anchor centroid."""

    label: SubsetLabel
    embeddings: np.ndarray
    ids: tuple[str, ...] = field(default_factory=tuple)
    mos: tuple[Optional[float], ...] = field(default_factory=tuple)
    dim: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "embeddings", _validate_matrix(self.embeddings, self.dim, self.ids)
        )
        if len(self.mos) != len(self.ids):
            raise ValidationError("mos length does not match id count")

    def __len__(self) -> int:
        return len(self.ids)

    def require_mos(self) -> None:
        for rid, m in zip(self.ids, self.mos):
            if m is None:
                raise MissingMetadataError(f"record {rid!r} has no mos")

    def select(self, indices: Sequence[int]) -> "AnchorSubset":
        idx = list(indices)
        return AnchorSubset(
            self.label,
            self.embeddings[idx],
            tuple(self.ids[i] for i in idx),
            tuple(self.mos[i] for i in idx),
            self.dim,
        )


def _subset_from(dataset: EmbeddingDataset, indices: Sequence[int], label: SubsetLabel) -> AnchorSubset:
    idx = list(indices)
    return AnchorSubset(
        label,
        dataset.embeddings[idx],
        tuple(dataset.ids[i] for i in idx),
        tuple(dataset.mos[i] for i in idx),
        dataset.dim,
    )


# ---------------------------------------------------------------------------
# formats
# ---------------------------------------------------------------------------

def detect_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".qseb":
        return FORMAT_QSEB
    if suffix == ".csv":
        return FORMAT_CSV
    raise FormatError(f"cannot infer format from suffix {suffix!r}; pass one of {_FORMATS}")


def _meta_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta.jsonl")


def save_dataset(dataset: EmbeddingDataset, path: str | Path, format: str | None = None) -> None:
    fmt = format or detect_format(path)
    if fmt == FORMAT_QSEB:
        _save_qseb(dataset, Path(path))
    elif fmt == FORMAT_CSV:
        _save_csv(dataset, Path(path))
    else:
        raise FormatError(f"unknown format {fmt!r}; expected one of {_FORMATS}")


def load_dataset(path: str | Path, format: str | None = None) -> EmbeddingDataset:
    fmt = format or detect_format(path)
    if fmt == FORMAT_QSEB:
        return _load_qseb(Path(path))
    if fmt == FORMAT_CSV:
        return _load_csv(Path(path))
    raise FormatError(f"unknown format {fmt!r}; expected one of {_FORMATS}")


def _save_qseb(dataset: EmbeddingDataset, path: Path) -> None:
    header = _HEADER.pack(QSEB_MAGIC, QSEB_VERSION, 0, dataset.dim, len(dataset))
    payload = np.ascontiguousarray(dataset.embeddings, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
    with open(_meta_path(path), "w", encoding="utf-8") as f:
        for i in range(len(dataset)):
            obj = {
                "id": dataset.ids[i],
                "mos": dataset.mos[i],
                "is_reference": dataset.is_reference[i],
            }
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")


def _load_qseb(path: Path) -> EmbeddingDataset:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the fixed header")
    magic, version, reserved, dim, count = _HEADER.unpack_from(raw)
    if magic != QSEB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != QSEB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved field must be 0, got {reserved}")
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1, got {dim}")
    expected = _HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload size mismatch, expected {expected} bytes, got {len(raw)}"
        )
    emb = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, dim).copy()

    meta = _meta_path(path)
    if not meta.exists():
        raise FormatError(f"{path}: missing sidecar {meta}")
    ids: list[str] = []
    mos: list[Optional[float]] = []
    ref: list[Optional[bool]] = []
    with open(meta, "r", encoding="utf-8") as f:
        for i, line in enumerate(f):
            if i >= count:
                raise FormatError(f"{meta}: more metadata lines than records ({count})")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{meta}: record index {i}: invalid JSON ({e})") from e
            if not isinstance(obj, dict) or "id" not in obj:
                raise FormatError(f"{meta}: record index {i}: expected an object with an id")
            rid = obj["id"]
            if not isinstance(rid, str):
                raise FormatError(f"{meta}: record index {i}: id must be a string")
            m = obj.get("mos")
            if m is not None and not isinstance(m, (int, float)):
                raise FormatError(f"{meta}: record index {i}: mos must be a number or null")
            r = obj.get("is_reference")
            if r is not None and not isinstance(r, bool):
                raise FormatError(f"{meta}: record index {i}: is_reference must be a bool or null")
            ids.append(rid)
            mos.append(float(m) if m is not None else None)
            ref.append(r)
    if len(ids) != count:
        raise FormatError(f"{meta}: {len(ids)} metadata lines for {count} records")
    try:
        return EmbeddingDataset(dim, emb, ids, mos, ref, source_tag=str(path))
    except ValidationError as e:
        raise FormatError(f"{path}: {e}") from e


def _format_float(v: float) -> str:
    return repr(float(v))


def _save_csv(dataset: EmbeddingDataset, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "mos", "is_reference"] + [f"e{i}" for i in range(dataset.dim)])
        for i in range(len(dataset)):
            m = dataset.mos[i]
            r = dataset.is_reference[i]
            row = [
                dataset.ids[i],
                _format_float(m) if m is not None else "",
                ("true" if r else "false") if r is not None else "",
            ]
            row.extend(_format_float(v) for v in dataset.embeddings[i])
            w.writerow(row)


def _load_csv(path: Path) -> EmbeddingDataset:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected a header") from None
        expected_prefix = ["id", "mos", "is_reference"]
        if header[:3] != expected_prefix:
            raise FormatError(
                f"{path}: malformed header, expected it to start with {expected_prefix}"
            )
        dim = len(header) - 3
        if dim < 1:
            raise FormatError(f"{path}: malformed header, no embedding columns")
        for i, name in enumerate(header[3:]):
            if name != f"e{i}":
                raise FormatError(f"{path}: malformed header, column {i + 3} is {name!r}, expected 'e{i}'")

        ids: list[str] = []
        mos: list[Optional[float]] = []
        ref: list[Optional[bool]] = []
        rows: list[np.ndarray] = []
        for i, row in enumerate(reader):
            if len(row) != dim + 3:
                raise FormatError(
                    f"{path}: record index {i}: {len(row) - 3} embedding cells, expected {dim}"
                )
            ids.append(row[0])
            mos.append(_parse_optional_float(row[1], path, i))
            ref.append(_parse_optional_bool(row[2], path, i))
            try:
                rows.append(np.array([float(c) for c in row[3:]], dtype=np.float32))
            except ValueError as e:
                raise FormatError(f"{path}: record index {i}: bad embedding value ({e})") from e
    emb = np.stack(rows) if rows else np.empty((0, dim), dtype=np.float32)
    try:
        return EmbeddingDataset(dim, emb, ids, mos, ref, source_tag=str(path))
    except ValidationError as e:
        raise FormatError(f"{path}: {e}") from e


def _parse_optional_float(cell: str, path: Path, i: int) -> Optional[float]:
    if cell == "":
        return None
    try:
        return float(cell)
    except ValueError as e:
        raise FormatError(f"{path}: record index {i}: bad mos value {cell!r}") from e


def _parse_optional_bool(cell: str, path: Path, i: int) -> Optional[bool]:
    if cell == "":
        return None
    if cell == "true":
        return True
    if cell == "false":
        return False
    raise FormatError(f"{path}: record index {i}: bad is_reference value {cell!r}")


# ---------------------------------------------------------------------------
# anchor splitting and subsampling
# ---------------------------------------------------------------------------

def split_by_median(dataset: EmbeddingDataset) -> tuple[AnchorSubset, AnchorSubset]:
    """Split a MOS-labeled pool into (High, Low) halves at the median.

    Records are ordered by (mos, id); the id tie-break makes the split a
    total order, so the result is independent of input record order. The
    first floor(n/2) records go to Low, the remainder to High.
    """
    n = len(dataset)
    if n < 2:
        raise ValidationError(f"median split needs at least 2 records, got {n}")
    for i, m in enumerate(dataset.mos):
        if m is None:
            raise MissingMetadataError(f"record {dataset.ids[i]!r} has no mos")
    order = sorted(range(n), key=lambda i: (dataset.mos[i], dataset.ids[i]))
    cut = n // 2
    low = _subset_from(dataset, order[:cut], SubsetLabel.LOW)
    high = _subset_from(dataset, order[cut:], SubsetLabel.HIGH)
    return high, low


def split_by_reference_flag(dataset: EmbeddingDataset) -> tuple[AnchorSubset, AnchorSubset]:
    """Split a full-reference pool into (High=reference, Low=distorted)."""
    for i, r in enumerate(dataset.is_reference):
        if r is None:
            raise MissingMetadataError(f"record {dataset.ids[i]!r} has no is_reference flag")
    hi_idx = [i for i, r in enumerate(dataset.is_reference) if r]
    lo_idx = [i for i, r in enumerate(dataset.is_reference) if not r]
    if not hi_idx or not lo_idx:
        raise ValidationError(
            "reference split needs both classes non-empty "
            f"(reference={len(hi_idx)}, distorted={len(lo_idx)})"
        )
    return (
        _subset_from(dataset, hi_idx, SubsetLabel.HIGH),
        _subset_from(dataset, lo_idx, SubsetLabel.LOW),
    )


def subsample(subset: AnchorSubset, fraction: float, seed: int) -> AnchorSubset:
    """Sample records uniformly without replacement, keeping original order.

    Picks max(1, round(fraction * n)) records (round half up). fraction=1.0
    returns the subset unchanged; a fixed seed always selects the same rows.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    n = len(subset)
    if n == 0:
        raise EmptySubsetError("cannot subsample an empty subset")
    if fraction == 1.0:
        return subset
    m = min(n, max(1, int(math.floor(fraction * n + 0.5))))
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=m, replace=False))
    return subset.select(idx.tolist())
