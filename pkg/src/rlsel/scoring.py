"""Learnability and representativeness scoring.

Learnability maps a sample's mean rollout reward through a Gaussian bump
centered on the moderate-difficulty point mu, so trivially easy (reward near
1) and hopeless (reward near 0) samples are both down-weighted.
Representativeness is the cosine alignment between a sample's optimization
direction and the dataset-averaged direction. Both are min-max normalized
into [0, 1] before entering the selection value function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import Dataset, mean_reward
from .errors import ConfigurationError, ParameterError

ZERO_NORM_EPS = 1e-12


@dataclass(frozen=True)
class ScoringParams:
    """Scoring and selection hyperparameters.

    ``lam`` (the balance weight between learnability and representativeness
    in the selection value) defaults to 1.0, the best-performing setting in
    sensitivity sweeps.
    """

    mu: float = 0.5
    sigma: float = 0.25
    lam: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.lam < 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")

    def to_json_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "lambda": self.lam}

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "ScoringParams":
        return cls(
            mu=float(obj.get("mu", 0.5)),
            sigma=float(obj.get("sigma", 0.25)),
            lam=float(obj.get("lambda", 1.0)),
        )


def learnability(r_bar: float, mu: float = 0.5, sigma: float = 0.25) -> float:
    """Gaussian-shaped learnability exp(-(r_bar - mu)^2 / (2 sigma^2)).

    Lies in (0, 1]; equals 1 exactly when r_bar == mu.
    """
    if not (sigma > 0):
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if not math.isfinite(r_bar):
        raise ParameterError(f"r_bar must be finite, got {r_bar}")
    z = (r_bar - mu) / sigma
    return math.exp(-0.5 * z * z)


def min_max_normalize(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Rescale values so min -> 0 and max -> 1, preserving order statistics.

    Degenerate input (max == min) maps to all 0.5: a constant criterion
    should neither dominate nor veto downstream value functions.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError("min_max_normalize requires a nonempty 1-d input")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("min_max_normalize requires finite values")
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.full(arr.shape, 0.5)
    return (arr - lo) / (hi - lo)


def global_direction(directions: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise mean of per-sample direction vectors.

    Accumulates in extended precision so the result is the correctly rounded
    mean; in particular the mean of k copies of a vector is that vector,
    bit for bit.
    """
    if len(directions) == 0:
        raise ParameterError("global_direction requires at least one direction")
    dim = np.asarray(directions[0]).shape[0]
    for i, d in enumerate(directions):
        if np.asarray(d).shape[0] != dim:
            raise ParameterError(
                f"dimension mismatch: direction {i} has dim {np.asarray(d).shape[0]}, expected {dim}"
            )
    stacked = np.stack([np.asarray(d, dtype=np.float64) for d in directions])
    return np.mean(stacked.astype(np.longdouble), axis=0).astype(np.float64)


def representativeness(d_i: np.ndarray, d_g: np.ndarray) -> float:
    """Cosine similarity between a sample direction and the global direction.

    Returns 0 when either vector is numerically zero: a vanishing direction
    exerts no second-order influence, and erroring would make selection
    brittle.
    """
    a = np.asarray(d_i, dtype=np.float64)
    b = np.asarray(d_g, dtype=np.float64)
    if a.shape != b.shape:
        raise ParameterError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if float(np.linalg.norm(a)) < ZERO_NORM_EPS or float(np.linalg.norm(b)) < ZERO_NORM_EPS:
        return 0.0
    # extended precision keeps exactly parallel vectors at cosine 1.0
    al = a.astype(np.longdouble)
    bl = b.astype(np.longdouble)
    cos = float(al @ bl / np.sqrt((al @ al) * (bl @ bl)))
    return min(1.0, max(-1.0, cos))


@dataclass(frozen=True)
class ScoreTable:
    """Per-sample scores in dataset order, plus the parameters used.

    ``r`` and ``r_norm`` are present only when directions were supplied;
    ``d_g`` then records the global direction they were compared against.
    """

    ids: tuple[str, ...]
    r_bar: np.ndarray
    l: np.ndarray
    l_norm: np.ndarray
    params: ScoringParams
    r: np.ndarray | None = None
    r_norm: np.ndarray | None = None
    d_g: np.ndarray | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.ids)})

    @property
    def has_representativeness(self) -> bool:
        return self.r_norm is not None

    def index_of(self, sample_id: str) -> int:
        try:
            return self._index[sample_id]
        except KeyError:
            raise ConfigurationError(f"score table is missing id '{sample_id}'") from None

    def r_bar_map(self) -> dict[str, float]:
        return {s: float(v) for s, v in zip(self.ids, self.r_bar)}

    def to_json_dict(self) -> dict:
        scores = {}
        for i, sample_id in enumerate(self.ids):
            entry = {
                "r_bar": float(self.r_bar[i]),
                "l": float(self.l[i]),
                "l_norm": float(self.l_norm[i]),
            }
            if self.r is not None:
                entry["r"] = float(self.r[i])
                entry["r_norm"] = float(self.r_norm[i])
            scores[sample_id] = entry
        out = {"params": self.params.to_json_dict(), "scores": scores}
        if self.d_g is not None:
            out["global_direction"] = self.d_g.tolist()
        return out

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "ScoreTable":
        params = ScoringParams.from_json_dict(obj["params"])
        scores = obj["scores"]
        ids = tuple(scores.keys())
        r_bar = np.array([scores[s]["r_bar"] for s in ids])
        l = np.array([scores[s]["l"] for s in ids])
        l_norm = np.array([scores[s]["l_norm"] for s in ids])
        has_r = bool(ids) and "r" in scores[ids[0]]
        r = np.array([scores[s]["r"] for s in ids]) if has_r else None
        r_norm = np.array([scores[s]["r_norm"] for s in ids]) if has_r else None
        d_g = None
        if obj.get("global_direction") is not None:
            d_g = np.asarray(obj["global_direction"], dtype=np.float64)
        return cls(ids, r_bar, l, l_norm, params, r, r_norm, d_g)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "ScoreTable":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def grad_directions(dataset: Dataset) -> list[np.ndarray]:
    """Collect per-record direction vectors, requiring one on every record."""
    missing = [r.id for r in dataset.records if r.grad is None]
    if missing:
        raise ConfigurationError(
            "representativeness requested but these records have no grad: "
            + ", ".join(missing[:5])
            + ("..." if len(missing) > 5 else "")
        )
    return [r.grad for r in dataset.records]


def build_score_table(
    dataset: Dataset,
    params: ScoringParams | None = None,
    directions: Sequence[np.ndarray] | None = None,
) -> ScoreTable:
    """Score every record: mean reward, learnability, and (optionally)
    representativeness against the averaged direction of ``directions``.

    ``directions`` must supply exactly one vector per record when given.
    """
    params = params or ScoringParams()
    r_bar = np.array([mean_reward(rec) for rec in dataset.records])
    l = np.array([learnability(rb, params.mu, params.sigma) for rb in r_bar])
    l_norm = min_max_normalize(l)

    r = r_norm = d_g = None
    if directions is not None:
        if len(directions) != len(dataset):
            raise ConfigurationError(
                f"got {len(directions)} directions for {len(dataset)} records"
            )
        d_g = global_direction(directions)
        r = np.array([representativeness(d, d_g) for d in directions])
        r_norm = min_max_normalize(r)

    return ScoreTable(dataset.ids, r_bar, l, l_norm, params, r, r_norm, d_g)
