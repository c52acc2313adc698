"""Desk-scale GRPO simulator: synthetic tasks, softmax policies, and the
end-to-end selection pipeline."""

from .pipeline import (
    PipelineConfig,
    PipelineReport,
    run_pipeline,
    stage_seed,
    surrogate_directions,
)
from .policy import (
    Policy,
    RolloutBatch,
    clipped_objective,
    estimate_rewards,
    estimate_rollout_rewards,
    evaluate_rollouts,
    group_advantages,
    policy_update,
    reward,
    rollout,
    train_policy,
    train_proxy,
)
from .task import (
    SyntheticTask,
    TaskSample,
    generate_task,
    item_prototypes,
    task_to_dataset,
)

__all__ = [
    "PipelineConfig",
    "PipelineReport",
    "Policy",
    "RolloutBatch",
    "SyntheticTask",
    "TaskSample",
    "clipped_objective",
    "estimate_rewards",
    "estimate_rollout_rewards",
    "evaluate_rollouts",
    "generate_task",
    "group_advantages",
    "item_prototypes",
    "policy_update",
    "reward",
    "rollout",
    "run_pipeline",
    "stage_seed",
    "surrogate_directions",
    "task_to_dataset",
    "train_policy",
    "train_proxy",
]
