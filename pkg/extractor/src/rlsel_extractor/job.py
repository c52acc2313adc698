"""Extraction job description and prompt-file loading.

A job file is JSON:

    {"model": "path-or-hub-id",
     "prompts": "prompts.jsonl",
     "output": "dataset.jsonl",
     "n_rollouts": 4,
     "reward_rule": "contains",      # or "topk"
     "top_k": 5,                     # only for "topk"
     "direction_mode": "grad",       # "none" | "grad" | "hvp"
     "param_slice": "lm_head",       # substring filter on named parameters
     "max_new_tokens": 16,
     "batch_size": 8,
     "seed": 0}

The prompts file is JSONL with one object per line: ``prompt`` and ``target``
are required, ``id`` is optional (missing ids become p0000, p0001, ... by
position, so reruns produce identical ids).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

DIRECTION_MODES = ("none", "grad", "hvp")
REWARD_RULES = ("contains", "topk")


class JobError(ValueError):
    """Invalid job file, prompt file, or job parameters."""


@dataclass(frozen=True)
class Prompt:
    id: str
    prompt: str
    target: str


@dataclass(frozen=True)
class ExtractionJob:
    model: str
    prompts_path: str
    output_path: str
    n_rollouts: int = 4
    reward_rule: str = "contains"
    top_k: int = 5
    direction_mode: str = "none"
    param_slice: str = "lm_head"
    max_new_tokens: int = 16
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.n_rollouts < 2:
            raise JobError(f"n_rollouts must be >= 2 for reward groups, got {self.n_rollouts}")
        if self.reward_rule not in REWARD_RULES:
            raise JobError(f"reward_rule must be one of {REWARD_RULES}, got '{self.reward_rule}'")
        if self.direction_mode not in DIRECTION_MODES:
            raise JobError(
                f"direction_mode must be one of {DIRECTION_MODES}, got '{self.direction_mode}'"
            )
        if self.top_k < 1:
            raise JobError(f"top_k must be >= 1, got {self.top_k}")
        if self.max_new_tokens < 1:
            raise JobError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if self.batch_size < 1:
            raise JobError(f"batch_size must be >= 1, got {self.batch_size}")

    @classmethod
    def read(cls, path: str | Path) -> "ExtractionJob":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise JobError(f"job file is not valid JSON: {exc.msg}") from exc
        for key in ("model", "prompts", "output"):
            if key not in obj:
                raise JobError(f"job file is missing required key '{key}'")
        return cls(
            model=obj["model"],
            prompts_path=obj["prompts"],
            output_path=obj["output"],
            n_rollouts=int(obj.get("n_rollouts", 4)),
            reward_rule=obj.get("reward_rule", "contains"),
            top_k=int(obj.get("top_k", 5)),
            direction_mode=obj.get("direction_mode", "none"),
            param_slice=obj.get("param_slice", "lm_head"),
            max_new_tokens=int(obj.get("max_new_tokens", 16)),
            batch_size=int(obj.get("batch_size", 8)),
            seed=int(obj.get("seed", 0)),
        )


def load_prompts(path: str | Path) -> list[Prompt]:
    prompts: list[Prompt] = []
    seen: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JobError(f"prompts line {lineno}: not valid JSON ({exc.msg})") from exc
            if "prompt" not in obj or "target" not in obj:
                raise JobError(f"prompts line {lineno}: needs 'prompt' and 'target'")
            pid = str(obj.get("id", f"p{len(prompts):04d}"))
            if pid in seen:
                raise JobError(f"prompts line {lineno}: duplicate id '{pid}'")
            seen.add(pid)
            prompts.append(Prompt(pid, str(obj["prompt"]), str(obj["target"])))
    if not prompts:
        raise JobError("prompts file is empty")
    return prompts
