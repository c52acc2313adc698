"""Diversity-aware greedy subset selection and the random baseline.

Each greedy step scores every remaining candidate with

    V(x | S) = D_norm(x | S) * (L_norm(x) + lambda * R_norm(x))

where D(x | S) is the candidate's minimal cosine distance to the already
selected set (1.0 when S is empty, so the first pick reduces to the intrinsic
scores) and D_norm is min-max normalized over the current candidate pool.
The argmax wins; exact ties break to the lexicographically smallest id so
selection is fully deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import Dataset
from .errors import ConfigurationError, ParameterError
from .scoring import ScoreTable, min_max_normalize

ZERO_NORM_EPS = 1e-12

MODE_MINIREC = "minirec"
MODE_RANDOM = "random"


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cosine similarity, clamped to [0, 2].

    A numerically zero vector compares as distance 1 to everything (neutral:
    it is neither close to nor far from any direction).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ParameterError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        return 1.0
    d = 1.0 - float(np.dot(a, b) / (na * nb))
    return min(2.0, max(0.0, d))


def diversity(candidate_features: np.ndarray, selected_features: Sequence[np.ndarray]) -> float:
    """Minimal cosine distance from the candidate to the selected set.

    Returns 1.0 for an empty set, making the first greedy pick depend only on
    the intrinsic scores.
    """
    if len(selected_features) == 0:
        return 1.0
    return min(cosine_distance(candidate_features, f) for f in selected_features)


def candidate_value(
    l_norm: float, r_norm: float | None, d_norm: float, lam: float
) -> float:
    """Unified selection value D_norm * (L_norm + lambda * R_norm)."""
    base = l_norm if r_norm is None else l_norm + lam * r_norm
    return d_norm * base


@dataclass(frozen=True)
class SelectionStep:
    """One greedy pick: the id, its step index, and the scores at selection."""

    id: str
    step: int
    d_norm: float | None = None
    v: float | None = None


@dataclass(frozen=True)
class SubsetManifest:
    """Ordered selection trace plus the settings that produced it."""

    mode: str
    m: int
    picks: tuple[SelectionStep, ...]
    lam: float | None = None
    seed: int | None = None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.picks)

    def to_json_dict(self) -> dict:
        out: dict = {"mode": self.mode, "m": self.m, "lambda": self.lam}
        if self.seed is not None:
            out["seed"] = self.seed
        picks = []
        for p in self.picks:
            entry: dict = {"id": p.id, "step": p.step}
            if p.d_norm is not None:
                entry["d_norm"] = p.d_norm
            if p.v is not None:
                entry["v"] = p.v
            picks.append(entry)
        out["picks"] = picks
        return out

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "SubsetManifest":
        picks = tuple(
            SelectionStep(p["id"], p["step"], p.get("d_norm"), p.get("v"))
            for p in obj["picks"]
        )
        lam = obj.get("lambda")
        return cls(
            mode=obj["mode"],
            m=int(obj["m"]),
            picks=picks,
            lam=None if lam is None else float(lam),
            seed=obj.get("seed"),
        )

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "SubsetManifest":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _validate_m(m: int, n: int) -> None:
    if m < 1 or m > n:
        raise ParameterError(f"m must satisfy 1 <= m <= {n}, got {m}")


def greedy_select(
    score_table: ScoreTable,
    dataset: Dataset,
    m: int,
    lam: float = 1.0,
    with_representativeness: bool | None = None,
) -> SubsetManifest:
    """Diversity-driven greedy selection of ``m`` samples.

    ``with_representativeness``: True requires R scores in the table, False
    ignores them, None (default) uses them when present. Each step min-max
    normalizes the candidates' current min distances, evaluates V, and picks
    the argmax (ties to the smallest id). The incremental min-distance cache
    makes only one new distance computation per candidate per step; a
    manifest records D_norm and V for every pick.

    Selectors are single-use with respect to their internal cache; each call
    builds its own.
    """
    n = len(dataset)
    _validate_m(m, n)
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")

    idx = [score_table.index_of(rec.id) for rec in dataset.records]  # errors on first missing id
    l_norm = score_table.l_norm[idx]
    if with_representativeness is None:
        with_representativeness = score_table.has_representativeness
    if with_representativeness and not score_table.has_representativeness:
        raise ConfigurationError("representativeness requested but score table has no R scores")
    r_norm = score_table.r_norm[idx] if with_representativeness else None

    base = l_norm + lam * r_norm if r_norm is not None else l_norm.copy()
    ids = np.array(dataset.ids)
    feats = dataset.feature_matrix()
    norms = np.linalg.norm(feats, axis=1)
    safe = np.where(norms < ZERO_NORM_EPS, 1.0, norms)
    unit = feats / safe[:, None]
    zero_mask = norms < ZERO_NORM_EPS

    remaining = np.ones(n, dtype=bool)
    min_dist = np.full(n, np.inf)
    picks: list[SelectionStep] = []

    for step in range(m):
        cand = np.flatnonzero(remaining)
        d_raw = np.ones(cand.size) if step == 0 else min_dist[cand]
        d_norm = min_max_normalize(d_raw)
        v = d_norm * base[cand]
        vmax = v.max()
        tied = cand[v == vmax]
        winner = int(min(tied, key=lambda t: ids[t])) if tied.size > 1 else int(tied[0])
        pos = int(np.searchsorted(cand, winner))
        picks.append(
            SelectionStep(str(ids[winner]), step, float(d_norm[pos]), float(v[pos]))
        )
        remaining[winner] = False

        # one new distance per candidate: distance to the fresh pick
        if zero_mask[winner]:
            d_new = np.ones(n)
        else:
            d_new = np.clip(1.0 - unit @ unit[winner], 0.0, 2.0)
            d_new[zero_mask] = 1.0
        np.minimum(min_dist, d_new, out=min_dist)

    return SubsetManifest(mode=MODE_MINIREC, m=m, picks=tuple(picks), lam=lam, seed=None)


def random_select(dataset: Dataset, m: int, seed: int) -> SubsetManifest:
    """Uniform sample of ``m`` ids without replacement, deterministic under seed."""
    n = len(dataset)
    _validate_m(m, n)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=m, replace=False)
    picks = tuple(
        SelectionStep(dataset.records[int(i)].id, step) for step, i in enumerate(chosen)
    )
    return SubsetManifest(mode=MODE_RANDOM, m=m, picks=picks, lam=None, seed=seed)
