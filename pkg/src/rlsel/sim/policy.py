"""Softmax policy over a small item catalog with group-relative updates.

A policy is a weight matrix W; pi(item | context) = softmax(W @ context).
Training samples N rollouts per sample, standardizes rewards within each
group (population std, zero-variance groups get all-zero advantages), and
ascends the clipped surrogate objective with analytically computed softmax
gradients. Every stochastic op takes an explicit seed or generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ParameterError, RlselError
from .task import SyntheticTask, TaskSample

VARIANCE_GUARD = 1e-8
DEFAULT_CLIP = 0.2


@dataclass(frozen=True)
class Policy:
    """Linear softmax policy; immutable, updates return a new instance."""

    weights: np.ndarray  # (item_count, context_dim)

    @classmethod
    def initial(cls, item_count: int, context_dim: int) -> "Policy":
        return cls(np.zeros((item_count, context_dim)))

    @property
    def item_count(self) -> int:
        return self.weights.shape[0]

    @property
    def context_dim(self) -> int:
        return self.weights.shape[1]

    def probs(self, contexts: np.ndarray) -> np.ndarray:
        """Row-stochastic action distribution for each context row."""
        contexts = np.atleast_2d(np.asarray(contexts, dtype=np.float64))
        logits = contexts @ self.weights.T
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class RolloutBatch:
    """N sampled items for one sample, with sampling-time log-probs.

    ``rewards`` and ``advantages`` are filled by :func:`evaluate_rollouts`.
    """

    sample_id: str
    items: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray | None = None
    advantages: np.ndarray | None = None


def _sample_from_rows(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``n`` items per row via inverse CDF; shape (rows, n)."""
    cum = np.cumsum(probs, axis=1)
    u = rng.random((probs.shape[0], n))
    return np.minimum((u[:, :, None] > cum[:, None, :]).sum(axis=2), probs.shape[1] - 1)


def rollout(policy: Policy, sample: TaskSample, n_rollouts: int, seed: int) -> RolloutBatch:
    """Draw N items i.i.d. from pi(. | context); rewards left unfilled."""
    if n_rollouts < 2:
        raise ParameterError(f"n_rollouts must be >= 2 for group statistics, got {n_rollouts}")
    rng = np.random.default_rng(seed)
    probs = policy.probs(sample.context)
    items = _sample_from_rows(probs, n_rollouts, rng)[0]
    log_probs = np.log(probs[0, items])
    return RolloutBatch(sample.id, items, log_probs)


def reward(sample: TaskSample, trajectory_item: int) -> float:
    """Hit reward: 1.0 when the sampled item is the target, else 0.0."""
    return 1.0 if int(trajectory_item) == sample.target else 0.0


def group_advantages(rewards: Sequence[float] | np.ndarray) -> np.ndarray:
    """Standardize rewards against their group mean and population std.

    Groups with (near-)zero variance get all-zero advantages instead of a
    division blow-up.
    """
    arr = np.asarray(rewards, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ParameterError("group_advantages requires at least 2 rewards")
    std = float(arr.std())
    if std < VARIANCE_GUARD:
        return np.zeros_like(arr)
    return (arr - arr.mean()) / std


def evaluate_rollouts(batch: RolloutBatch, sample: TaskSample) -> RolloutBatch:
    """Fill rewards and group-relative advantages for a rollout batch."""
    rewards = np.array([reward(sample, i) for i in batch.items])
    return RolloutBatch(
        batch.sample_id, batch.items, batch.log_probs, rewards, group_advantages(rewards)
    )


def clipped_objective(
    ratios: Sequence[float] | np.ndarray,
    advantages: Sequence[float] | np.ndarray,
    epsilon_clip: float = DEFAULT_CLIP,
) -> float:
    """Mean over trajectories of min(rho*A, clip(rho, 1-eps, 1+eps)*A)."""
    if not (0.0 < epsilon_clip < 1.0):
        raise ParameterError(f"epsilon_clip must be in (0, 1), got {epsilon_clip}")
    rho = np.asarray(ratios, dtype=np.float64)
    adv = np.asarray(advantages, dtype=np.float64)
    if rho.shape != adv.shape:
        raise ParameterError(f"length mismatch: {rho.shape} ratios vs {adv.shape} advantages")
    clipped = np.clip(rho, 1.0 - epsilon_clip, 1.0 + epsilon_clip)
    return float(np.minimum(rho * adv, clipped * adv).mean())


def policy_update(
    policy: Policy,
    rollouts: Sequence[RolloutBatch],
    task: SyntheticTask,
    learning_rate: float,
    epsilon_clip: float = DEFAULT_CLIP,
) -> Policy:
    """One gradient-ascent step on the clipped objective.

    Ratios come from exp(log pi_new - log pi_old) with the stored sampling
    log-probs as pi_old; the softmax Jacobian gives the exact gradient
    (e_y - pi(.|c)) c' per trajectory. Trajectories whose clipped term is
    active contribute zero gradient.
    """
    if not (0.0 < epsilon_clip < 1.0):
        raise ParameterError(f"epsilon_clip must be in (0, 1), got {epsilon_clip}")
    if not rollouts:
        raise ParameterError("policy_update requires at least one rollout batch")
    for b in rollouts:
        if b.advantages is None or b.rewards is None:
            raise ParameterError(f"rollout batch '{b.sample_id}' is missing rewards/advantages")

    contexts = np.stack([task.sample_by_id(b.sample_id).context for b in rollouts])
    items = np.stack([b.items for b in rollouts])          # (n, N)
    old_logp = np.stack([b.log_probs for b in rollouts])   # (n, N)
    adv = np.stack([b.advantages for b in rollouts])       # (n, N)

    probs = policy.probs(contexts)                         # (n, items)
    new_logp = np.log(np.take_along_axis(probs, items, axis=1))
    rho = np.exp(new_logp - old_logp)
    clipped = np.clip(rho, 1.0 - epsilon_clip, 1.0 + epsilon_clip)
    unclipped_active = rho * adv <= clipped * adv
    coef = np.where(unclipped_active, adv * rho, 0.0)

    n, big_n = items.shape
    per_item = np.zeros((policy.item_count, n))
    for j in range(big_n):
        np.add.at(per_item, (items[:, j], np.arange(n)), coef[:, j])
    grad = per_item @ contexts - (probs * coef.sum(axis=1, keepdims=True)).T @ contexts
    grad /= n * big_n

    if not np.all(np.isfinite(grad)):
        raise RlselError(
            f"non-finite policy gradient (max |coef| = {np.abs(coef).max():.3g}, "
            f"max |rho| = {np.abs(rho).max():.3g})"
        )
    return Policy(policy.weights + learning_rate * grad)


def _batched_rollouts(
    policy: Policy,
    samples: Sequence[TaskSample],
    n_rollouts: int,
    rng: np.random.Generator,
) -> list[RolloutBatch]:
    """Vectorized rollout + evaluation for many samples from one stream."""
    contexts = np.stack([s.context for s in samples])
    probs = policy.probs(contexts)
    items = _sample_from_rows(probs, n_rollouts, rng)
    log_probs = np.log(np.take_along_axis(probs, items, axis=1))
    batches = []
    for i, s in enumerate(samples):
        rewards = (items[i] == s.target).astype(np.float64)
        batches.append(
            RolloutBatch(s.id, items[i], log_probs[i], rewards, group_advantages(rewards))
        )
    return batches


def train_policy(
    task: SyntheticTask,
    sample_ids: Sequence[str],
    steps: int,
    learning_rate: float,
    n_rollouts: int,
    epsilon_clip: float,
    seed: int,
    initial: Policy | None = None,
) -> Policy:
    """Run rollout -> advantage -> update loops over a fixed sample set."""
    if steps < 0:
        raise ParameterError(f"steps must be >= 0, got {steps}")
    if n_rollouts < 2:
        raise ParameterError(f"n_rollouts must be >= 2, got {n_rollouts}")
    policy = initial or Policy.initial(task.item_count, task.context_dim)
    samples = [task.sample_by_id(i) for i in sample_ids]
    rng = np.random.default_rng(seed)
    for _ in range(steps):
        batches = _batched_rollouts(policy, samples, n_rollouts, rng)
        policy = policy_update(policy, batches, task, learning_rate, epsilon_clip)
    return policy


def train_proxy(
    task: SyntheticTask,
    subset_size: int = 256,
    steps: int = 100,
    seed: int = 0,
    n_rollouts: int = 8,
    learning_rate: float = 14.0,
    epsilon_clip: float = DEFAULT_CLIP,
    sample_ids: Sequence[str] | None = None,
) -> Policy:
    """Train a fresh policy on a random subset to calibrate reward estimates.

    ``sample_ids`` restricts the candidate pool (the pipeline keeps held-out
    samples away from the proxy); the subset itself is drawn uniformly.
    """
    pool = list(sample_ids) if sample_ids is not None else [s.id for s in task.samples]
    if subset_size > len(pool):
        raise ParameterError(f"subset_size {subset_size} exceeds pool size {len(pool)}")
    rng = np.random.default_rng(seed)
    chosen = [pool[int(i)] for i in rng.choice(len(pool), size=subset_size, replace=False)]
    return train_policy(
        task, chosen, steps, learning_rate, n_rollouts, epsilon_clip, seed=seed + 1
    )


def estimate_rollout_rewards(
    policy: Policy,
    task: SyntheticTask,
    n_rollouts: int,
    seed: int,
    sample_ids: Sequence[str] | None = None,
) -> dict[str, list[float]]:
    """Per-sample reward lists from N rollouts under the given policy."""
    if n_rollouts < 2:
        raise ParameterError(f"n_rollouts must be >= 2, got {n_rollouts}")
    ids = list(sample_ids) if sample_ids is not None else [s.id for s in task.samples]
    samples = [task.sample_by_id(i) for i in ids]
    rng = np.random.default_rng(seed)
    batches = _batched_rollouts(policy, samples, n_rollouts, rng)
    return {b.sample_id: [float(r) for r in b.rewards] for b in batches}


def estimate_rewards(
    policy: Policy,
    task: SyntheticTask,
    n_rollouts: int,
    seed: int,
    sample_ids: Sequence[str] | None = None,
) -> dict[str, float]:
    """Mean rollout reward per sample under the given policy."""
    rewards = estimate_rollout_rewards(policy, task, n_rollouts, seed, sample_ids)
    return {k: float(np.mean(v)) for k, v in rewards.items()}
