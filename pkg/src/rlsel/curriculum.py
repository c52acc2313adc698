"""Curriculum scheduling: random disjoint groups, reward-sorted within.

The selected subset is shuffled once (seeded), split into K contiguous chunks
(earlier chunks absorb the remainder), and each chunk is sorted by descending
estimated reward. High reward means easy, so consuming the emitted order
trains easy-to-hard within every group while the random partition keeps each
phase distributionally mixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ParameterError
from .selection import SubsetManifest

DEFAULT_GROUPS = 4


@dataclass(frozen=True)
class CurriculumSchedule:
    """K disjoint ordered groups plus the reward snapshot used for sorting."""

    groups: tuple[tuple[str, ...], ...]
    k: int
    seed: int | None
    r_bar: Mapping[str, float]

    def ordered_ids(self) -> tuple[str, ...]:
        """All ids in consumption order: groups in order, sorted within."""
        return tuple(i for g in self.groups for i in g)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "groups": [list(g) for g in self.groups],
            "r_bar": {i: float(self.r_bar[i]) for g in self.groups for i in g},
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "CurriculumSchedule":
        groups = tuple(tuple(g) for g in obj["groups"])
        return cls(groups, int(obj["k"]), obj.get("seed"), dict(obj["r_bar"]))


def partition(manifest: SubsetManifest, k: int, seed: int) -> list[list[str]]:
    """Shuffle the manifest ids and split into K contiguous chunks.

    The first (m mod K) chunks get the extra element; deterministic under
    seed.
    """
    ids = list(manifest.ids)
    m = len(ids)
    if k < 1 or k > m:
        raise ParameterError(f"K must satisfy 1 <= K <= {m}, got {k}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(m)
    shuffled = [ids[i] for i in order]
    base, extra = divmod(m, k)
    groups: list[list[str]] = []
    pos = 0
    for g in range(k):
        size = base + (1 if g < extra else 0)
        groups.append(shuffled[pos : pos + size])
        pos += size
    return groups


def sort_within_groups(
    groups: Sequence[Sequence[str]],
    r_bar: Mapping[str, float],
    seed: int | None = None,
) -> CurriculumSchedule:
    """Sort each group by descending reward (ties to the smaller id)."""
    for g in groups:
        for i in g:
            if i not in r_bar:
                raise ConfigurationError(f"no r_bar entry for id '{i}'")
    sorted_groups = tuple(
        tuple(sorted(g, key=lambda i: (-r_bar[i], i))) for g in groups
    )
    snapshot = {i: float(r_bar[i]) for g in groups for i in g}
    return CurriculumSchedule(sorted_groups, len(groups), seed, snapshot)


def build_schedule(
    manifest: SubsetManifest, r_bar: Mapping[str, float], k: int, seed: int
) -> CurriculumSchedule:
    """Partition then sort: the full scheduling step in one call."""
    return sort_within_groups(partition(manifest, k, seed), r_bar, seed)


def write_schedule(schedule: CurriculumSchedule, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(schedule.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )


def read_schedule(path: str | Path) -> CurriculumSchedule:
    return CurriculumSchedule.from_json_dict(
        json.loads(Path(path).read_text(encoding="utf-8"))
    )


def write_schedule_text(schedule: CurriculumSchedule, path: str | Path) -> None:
    """Flat trainer-facing format: one id per line, comment lines between groups."""
    lines = []
    for g, group in enumerate(schedule.groups, start=1):
        lines.append(f"# group {g}/{schedule.k}")
        lines.extend(group)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_schedule_text(path: str | Path) -> list[list[str]]:
    """Parse the flat format back into ordered groups (ids only)."""
    groups: list[list[str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            groups.append([])
        elif groups:
            groups[-1].append(line)
        else:
            raise ConfigurationError("schedule text must start with a group comment line")
    return groups
