"""Synthetic recommendation task with planted difficulty tiers.

Each sample is a context vector and a target item. Items get prototype
directions; a sample's tier controls the context-target signal-to-noise
ratio:

* easy   -- strong planted signal (the policy can master these outright),
* medium -- moderate signal, learnable but never trivial at desk scale,
* hard   -- no target signal at all: contexts sit in a tight off-prototype
  cluster with uniformly random targets, so reward stays at chance.

When the catalog fits (item_count <= 2 * context_dim) prototypes are a
randomly rotated signed orthonormal basis, which keeps items linearly
separable regardless of seed; larger catalogs fall back to random unit
vectors. The hard cluster anchor is drawn independently of all prototypes,
and its small norm keeps hard samples from dominating gradient updates the
way they would never dominate a curated corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from ..dataset import Dataset, SampleRecord
from ..errors import ParameterError

TIERS = ("easy", "medium", "hard")

# (signal scale, noise scale) per tier; hard's signal points at the cluster
# anchor rather than the target prototype.
TIER_SIGNAL = {"easy": 16.0, "medium": 2.0, "hard": 1.2}
TIER_NOISE = {"easy": 0.3, "medium": 1.0, "hard": 0.15}


@dataclass(frozen=True)
class TaskSample:
    id: str
    context: np.ndarray
    target: int
    tier: str


@dataclass(frozen=True)
class SyntheticTask:
    """Immutable bundle of generated samples plus the generation settings."""

    item_count: int
    context_dim: int
    samples: tuple[TaskSample, ...]
    seed: int
    tier_mix: tuple[float, float, float]

    def __len__(self) -> int:
        return len(self.samples)

    def sample_by_id(self, sample_id: str) -> TaskSample:
        return self._index[sample_id]

    @cached_property
    def _index(self) -> dict[str, TaskSample]:
        return {s.id: s for s in self.samples}

    def contexts(self, ids: Sequence[str] | None = None) -> np.ndarray:
        samples = self.samples if ids is None else [self.sample_by_id(i) for i in ids]
        return np.stack([s.context for s in samples])

    def targets(self, ids: Sequence[str] | None = None) -> np.ndarray:
        samples = self.samples if ids is None else [self.sample_by_id(i) for i in ids]
        return np.array([s.target for s in samples], dtype=np.int64)

    def tiers(self, ids: Sequence[str] | None = None) -> list[str]:
        samples = self.samples if ids is None else [self.sample_by_id(i) for i in ids]
        return [s.tier for s in samples]


def _tier_counts(n: int, tier_mix: Sequence[float]) -> list[int]:
    # largest-remainder allocation of n samples to the three tiers
    counts = [int(n * p) for p in tier_mix]
    remainders = [n * p - c for p, c in zip(tier_mix, counts)]
    while sum(counts) < n:
        j = int(np.argmax(remainders))
        counts[j] += 1
        remainders[j] = -1.0
    return counts


def item_prototypes(item_count: int, context_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Per-item generative directions, unit norm."""
    if item_count <= 2 * context_dim:
        q, _ = np.linalg.qr(rng.normal(size=(context_dim, context_dim)))
        signed = np.concatenate([q.T, -q.T], axis=0)
        return signed[:item_count]
    p = rng.normal(size=(item_count, context_dim))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def generate_task(
    item_count: int,
    context_dim: int,
    n_samples: int,
    tier_mix: Sequence[float],
    seed: int,
) -> SyntheticTask:
    """Generate a deterministic task with the requested tier proportions."""
    if item_count < 2:
        raise ParameterError(f"item_count must be >= 2, got {item_count}")
    if context_dim < 1:
        raise ParameterError(f"context_dim must be >= 1, got {context_dim}")
    if n_samples < 1:
        raise ParameterError(f"n_samples must be >= 1, got {n_samples}")
    mix = tuple(float(p) for p in tier_mix)
    if len(mix) != 3 or any(p < 0 for p in mix) or abs(sum(mix) - 1.0) > 1e-9:
        raise ParameterError(f"tier_mix must be 3 nonnegative proportions summing to 1, got {tier_mix}")

    rng = np.random.default_rng(seed)
    prototypes = item_prototypes(item_count, context_dim, rng)
    anchor = rng.normal(size=context_dim)
    anchor /= np.linalg.norm(anchor)

    counts = _tier_counts(n_samples, mix)
    tier_names = np.array(
        ["easy"] * counts[0] + ["medium"] * counts[1] + ["hard"] * counts[2]
    )
    rng.shuffle(tier_names)
    targets = rng.integers(0, item_count, size=n_samples)

    width = max(4, len(str(n_samples - 1)))
    samples = []
    for i in range(n_samples):
        tier = str(tier_names[i])
        noise = rng.normal(size=context_dim)
        if tier == "hard":
            context = TIER_SIGNAL["hard"] * anchor + TIER_NOISE["hard"] * noise
        else:
            context = TIER_SIGNAL[tier] * prototypes[targets[i]] + TIER_NOISE[tier] * noise
        context.flags.writeable = False
        samples.append(
            TaskSample(id=f"s{i:0{width}d}", context=context, target=int(targets[i]), tier=tier)
        )
    return SyntheticTask(item_count, context_dim, tuple(samples), seed, mix)


def task_to_dataset(
    task: SyntheticTask,
    rollout_rewards: Mapping[str, Sequence[float]],
    directions: Mapping[str, np.ndarray] | None = None,
    ids: Sequence[str] | None = None,
) -> Dataset:
    """Materialize task samples as engine records.

    Features are the raw contexts; ``rollout_rewards`` supplies each record's
    reward list; ``directions`` (when given) become the records' grad vectors.
    """
    use = task.samples if ids is None else [task.sample_by_id(i) for i in ids]
    records = []
    for s in use:
        grad = None
        if directions is not None:
            grad = np.asarray(directions[s.id], dtype=np.float64)
        records.append(
            SampleRecord(
                id=s.id,
                rollout_rewards=tuple(float(r) for r in rollout_rewards[s.id]),
                features=s.context,
                grad=grad,
                meta={"tier": s.tier, "target": str(s.target)},
            )
        )
    return Dataset.from_records(records)
