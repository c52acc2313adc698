"""Run a causal LM over a prompt set and emit engine-ready JSONL records.

Per prompt the extractor produces:

* ``rollout_rewards`` -- N sampled continuations scored by the reward rule
  (``contains``: the target string appears in the continuation; ``topk``:
  the target is among the first k comma/newline-separated entries);
* ``features`` -- the last-layer hidden state of the final prompt token;
* ``grad`` -- optional direction vector over a named parameter slice:
  the loss gradient (mode ``grad``) or the Hessian-gradient product via
  double backprop (mode ``hvp``), flattened;
* ``meta`` -- the direction mode, reward rule, and model name, so consumers
  know which gradient convention produced the vectors.

Sampling is deterministic for a fixed (job, seed): prompts are processed in
stable batches and the torch RNG is reseeded per batch.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np
import torch

from .job import ExtractionJob, JobError, Prompt, load_prompts


class ExtractionError(RuntimeError):
    """Model loading or extraction failed."""


@lru_cache(maxsize=1)
def _record_schema() -> dict:
    ref = resources.files("rlsel_extractor.schemas").joinpath("record.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def validate_record(obj: dict) -> None:
    jsonschema.validate(obj, _record_schema())


def load_model(model_id: str):
    """Load tokenizer and model, normalizing the padding setup for batching."""
    from transformers import AutoModelForCausalLM, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForCausalLM.from_pretrained(model_id)
    except Exception as exc:
        raise ExtractionError(f"could not load model '{model_id}': {exc}") from exc
    if tokenizer.pad_token is None:
        tokenizer.pad_token = tokenizer.eos_token
    tokenizer.padding_side = "left"  # generation needs left padding
    model.eval()
    return tokenizer, model


def score_continuation(text: str, target: str, rule: str, top_k: int) -> float:
    if rule == "contains":
        return 1.0 if target in text else 0.0
    entries = [e.strip() for e in text.replace("\n", ",").split(",") if e.strip()]
    return 1.0 if target in entries[:top_k] else 0.0


def _slice_params(model, selector: str):
    params = [(n, p) for n, p in model.named_parameters() if selector in n]
    if not params:
        names = [n for n, _ in model.named_parameters()]
        raise JobError(
            f"param_slice '{selector}' matches no parameters; available names include "
            + ", ".join(names[:5])
        )
    return params


def prompt_features(model, tokenizer, prompts: Sequence[str], batch_size: int) -> np.ndarray:
    """Last-layer hidden state of each prompt's final token."""
    feats = []
    with torch.no_grad():
        for lo in range(0, len(prompts), batch_size):
            batch = list(prompts[lo : lo + batch_size])
            enc = tokenizer(batch, return_tensors="pt", padding=True)
            out = model(**enc, output_hidden_states=True)
            last = out.hidden_states[-1]  # (b, t, h)
            # with left padding the final prompt token is the last position
            feats.append(last[:, -1, :].double().cpu().numpy())
    return np.concatenate(feats, axis=0)


def rollout_rewards(
    model, tokenizer, job: ExtractionJob, prompts: Sequence[Prompt]
) -> dict[str, list[float]]:
    """Sample N continuations per prompt and score them."""
    rewards: dict[str, list[float]] = {}
    for batch_index, lo in enumerate(range(0, len(prompts), job.batch_size)):
        batch = prompts[lo : lo + job.batch_size]
        enc = tokenizer([p.prompt for p in batch], return_tensors="pt", padding=True)
        torch.manual_seed(job.seed * 100003 + batch_index)
        try:
            with torch.no_grad():
                out = model.generate(
                    **enc,
                    do_sample=True,
                    num_return_sequences=job.n_rollouts,
                    max_new_tokens=job.max_new_tokens,
                    pad_token_id=tokenizer.pad_token_id,
                )
        except RuntimeError as exc:
            if "out of memory" in str(exc).lower():
                raise ExtractionError(
                    f"generation ran out of memory at batch_size={job.batch_size}; "
                    "rerun with a smaller --batch-size"
                ) from exc
            raise
        prompt_len = enc["input_ids"].shape[1]
        continuations = tokenizer.batch_decode(
            out[:, prompt_len:], skip_special_tokens=True
        )
        for i, prompt in enumerate(batch):
            texts = continuations[i * job.n_rollouts : (i + 1) * job.n_rollouts]
            rewards[prompt.id] = [
                score_continuation(t, prompt.target, job.reward_rule, job.top_k)
                for t in texts
            ]
    return rewards


def _target_loss(model, tokenizer, prompt: Prompt) -> torch.Tensor:
    """Teacher-forced NLL of the target continuation given the prompt."""
    prompt_ids = tokenizer(prompt.prompt, return_tensors="pt")["input_ids"]
    target_ids = tokenizer(prompt.target, return_tensors="pt")["input_ids"]
    if target_ids.shape[1] == 0:
        raise JobError(f"prompt '{prompt.id}': target tokenizes to nothing")
    input_ids = torch.cat([prompt_ids, target_ids], dim=1)
    labels = input_ids.clone()
    labels[:, : prompt_ids.shape[1]] = -100  # only target tokens carry loss
    return model(input_ids=input_ids, labels=labels).loss


def sample_directions(
    model, tokenizer, job: ExtractionJob, prompts: Sequence[Prompt]
) -> dict[str, np.ndarray]:
    """Per-prompt direction vector over the selected parameter slice."""
    params = _slice_params(model, job.param_slice)
    tensors = [p for _, p in params]
    directions: dict[str, np.ndarray] = {}
    for prompt in prompts:
        model.zero_grad(set_to_none=True)
        loss = _target_loss(model, tokenizer, prompt)
        grads = torch.autograd.grad(loss, tensors, create_graph=job.direction_mode == "hvp")
        if job.direction_mode == "grad":
            vec = torch.cat([g.detach().reshape(-1) for g in grads])
        else:  # hvp: H v with v = the gradient itself, via double backprop
            v = [g.detach() for g in grads]
            inner = sum((g * vi).sum() for g, vi in zip(grads, v))
            hv = torch.autograd.grad(inner, tensors)
            vec = torch.cat([h.detach().reshape(-1) for h in hv])
        arr = vec.double().cpu().numpy()
        if not np.all(np.isfinite(arr)):
            raise ExtractionError(f"prompt '{prompt.id}': non-finite direction vector")
        directions[prompt.id] = arr
    return directions


def extract(job: ExtractionJob) -> int:
    """Run the job and write one schema-valid record per prompt.

    Returns the number of records written.
    """
    prompts = load_prompts(job.prompts_path)
    tokenizer, model = load_model(job.model)

    rewards = rollout_rewards(model, tokenizer, job, prompts)
    feats = prompt_features(model, tokenizer, [p.prompt for p in prompts], job.batch_size)
    directions = None
    if job.direction_mode != "none":
        directions = sample_directions(model, tokenizer, job, prompts)

    out = Path(job.output_path)
    records = []
    for i, prompt in enumerate(prompts):
        obj = {
            "id": prompt.id,
            "rollout_rewards": rewards[prompt.id],
            "features": feats[i].tolist(),
            "meta": {
                "direction_mode": job.direction_mode,
                "reward_rule": job.reward_rule,
                "model": job.model,
                "target": prompt.target,
            },
        }
        if directions is not None:
            obj["grad"] = directions[prompt.id].tolist()
            # keep key order identical to the engine's writer
            obj = {k: obj[k] for k in ("id", "rollout_rewards", "features", "grad", "meta")}
        validate_record(obj)
        records.append(obj)

    with out.open("w", encoding="utf-8") as fh:
        for obj in records:
            fh.write(json.dumps(obj) + "\n")
    return len(records)
