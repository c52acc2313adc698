import json

import numpy as np
import pytest

from rlsel.dataset import Dataset, SampleRecord


def make_record(rec_id, rewards, features, grad=None, meta=None):
    return SampleRecord(
        id=rec_id,
        rollout_rewards=tuple(float(r) for r in rewards),
        features=np.asarray(features, dtype=np.float64),
        grad=None if grad is None else np.asarray(grad, dtype=np.float64),
        meta=meta or {},
    )


def make_dataset(rows):
    """rows: list of (id, rewards, features[, grad]) tuples."""
    records = []
    for row in rows:
        grad = row[3] if len(row) > 3 else None
        records.append(make_record(row[0], row[1], row[2], grad))
    return Dataset.from_records(records)


def write_jsonl(path, objs):
    with open(path, "w") as fh:
        for obj in objs:
            fh.write(json.dumps(obj) + "\n")
    return path


@pytest.fixture
def tiny_dataset():
    return make_dataset(
        [
            ("a", [0.5, 0.5], [1.0, 0.0], [1.0, 0.0]),
            ("b", [0.9, 0.9], [0.0, 1.0], [0.0, 1.0]),
            ("c", [0.1, 0.1], [1.0, 1.0], [1.0, 1.0]),
        ]
    )
