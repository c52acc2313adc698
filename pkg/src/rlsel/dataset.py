"""Sample records and the dataset container, with JSONL ingestion.

Wire format is JSONL, one record per line:

    {"id": "s0001",
     "rollout_rewards": [1.0, 0.0, 1.0],
     "features": [0.12, -3.4, ...],
     "grad": [0.01, ...],              # optional direction vector
     "meta": {"tier": "medium"}}       # optional string map

Required keys: ``id``, ``rollout_rewards`` (N >= 1 finite scalars) and
``features`` (fixed dimension across the file). ``grad`` is optional per
record; records that carry it must agree on its dimension. Unknown top-level
keys are preserved in ``meta`` (values JSON-encoded when not already strings).

Numeric fields are written with shortest round-trip representation, so
``load_dataset(write_dataset(ds))`` reproduces every float bit-for-bit.

Datasets are immutable after load and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DatasetError

_REQUIRED_KEYS = ("id", "rollout_rewards", "features")
_KNOWN_KEYS = frozenset((*_REQUIRED_KEYS, "grad", "meta"))


def _as_float_vector(value: object, key: str, line: int | None) -> np.ndarray:
    if not isinstance(value, list):
        raise DatasetError(f"schema error: '{key}' must be an array", line)
    if not value:
        raise DatasetError(f"empty {key}", line)
    out = np.empty(len(value), dtype=np.float64)
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise DatasetError(f"schema error: '{key}[{i}]' must be a number", line)
        if not math.isfinite(x):
            raise DatasetError(f"validation error: non-finite value in '{key}[{i}]'", line)
        out[i] = float(x)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SampleRecord:
    """One training sample: rollout rewards, feature vector, optional direction."""

    id: str
    rollout_rewards: tuple[float, ...]
    features: np.ndarray
    grad: np.ndarray | None = None
    meta: Mapping[str, str] = field(default_factory=dict)

    @property
    def n_rollouts(self) -> int:
        return len(self.rollout_rewards)


def mean_reward(record: SampleRecord) -> float:
    """Average reward over the record's rollouts."""
    return float(sum(record.rollout_rewards) / len(record.rollout_rewards))


def parse_sample_record(line: str, line_number: int | None = None) -> SampleRecord:
    """Parse one JSONL line into a validated :class:`SampleRecord`.

    Unknown top-level keys are folded into ``meta``. Raises
    :class:`DatasetError` on malformed JSON, missing keys, or non-finite
    numbers; the message carries ``line_number`` when given.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"parse error: {exc.msg}", line_number) from exc
    if not isinstance(obj, dict):
        raise DatasetError("schema error: record must be a JSON object", line_number)

    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise DatasetError(f"schema error: missing required key '{key}'", line_number)

    rec_id = obj["id"]
    if not isinstance(rec_id, str) or not rec_id:
        raise DatasetError("schema error: 'id' must be a non-empty string", line_number)

    rewards = _as_float_vector(obj["rollout_rewards"], "rollout_rewards", line_number)
    features = _as_float_vector(obj["features"], "features", line_number)
    grad = None
    if obj.get("grad") is not None:
        grad = _as_float_vector(obj["grad"], "grad", line_number)

    meta: dict[str, str] = {}
    raw_meta = obj.get("meta", {})
    if not isinstance(raw_meta, dict):
        raise DatasetError("schema error: 'meta' must be an object", line_number)
    for k, v in raw_meta.items():
        if not isinstance(v, str):
            raise DatasetError(f"schema error: 'meta.{k}' must be a string", line_number)
        meta[str(k)] = v
    for k, v in obj.items():
        if k not in _KNOWN_KEYS:
            meta[str(k)] = v if isinstance(v, str) else json.dumps(v)

    return SampleRecord(
        id=rec_id,
        rollout_rewards=tuple(float(r) for r in rewards),
        features=features,
        grad=grad,
        meta=meta,
    )


@dataclass(frozen=True)
class Dataset:
    """Ordered, validated collection of sample records.

    Immutable after construction; concurrent reads are safe.
    """

    records: tuple[SampleRecord, ...]
    feature_dim: int
    grad_dim: int | None
    source_path: str | None = None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)

    def feature_matrix(self) -> np.ndarray:
        """All feature vectors stacked in record order, shape (n, feature_dim)."""
        return np.stack([r.features for r in self.records])

    @classmethod
    def from_records(
        cls, records: Iterable[SampleRecord], source_path: str | None = None
    ) -> "Dataset":
        """Validate cross-record invariants and build a dataset."""
        recs = tuple(records)
        if not recs:
            raise DatasetError("empty dataset")
        feature_dim = recs[0].features.shape[0]
        grad_dim: int | None = None
        seen: set[str] = set()
        for i, rec in enumerate(recs):
            if rec.id in seen:
                raise DatasetError(f"duplicate id '{rec.id}' (record {i + 1})")
            seen.add(rec.id)
            if rec.features.shape[0] != feature_dim:
                raise DatasetError(
                    f"dimension error: record {i + 1} ('{rec.id}') has feature dim "
                    f"{rec.features.shape[0]}, expected {feature_dim}"
                )
            if rec.grad is not None:
                if grad_dim is None:
                    grad_dim = rec.grad.shape[0]
                elif rec.grad.shape[0] != grad_dim:
                    raise DatasetError(
                        f"dimension error: record {i + 1} ('{rec.id}') has grad dim "
                        f"{rec.grad.shape[0]}, expected {grad_dim}"
                    )
        return cls(recs, feature_dim, grad_dim, source_path)


def load_dataset(path: str | Path) -> Dataset:
    """Load a JSONL dataset, enforcing record and cross-record invariants.

    Any bad record aborts the load with its line number; insertion order is
    preserved.
    """
    path = Path(path)
    records: list[SampleRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            records.append(parse_sample_record(line, lineno))
    if not records:
        raise DatasetError("empty dataset")
    return Dataset.from_records(records, source_path=str(path))


def record_to_json(record: SampleRecord) -> str:
    """Serialize one record to its JSONL line (no trailing newline)."""
    obj: dict[str, object] = {
        "id": record.id,
        "rollout_rewards": list(record.rollout_rewards),
        "features": record.features.tolist(),
    }
    if record.grad is not None:
        obj["grad"] = record.grad.tolist()
    if record.meta:
        obj["meta"] = dict(record.meta)
    return json.dumps(obj)


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write the dataset in the same JSONL schema the loader accepts."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in dataset.records:
            fh.write(record_to_json(rec))
            fh.write("\n")
