"""End-to-end pipeline: task -> proxy -> scores -> selection -> curriculum ->
final training -> held-out evaluation.

Every stage writes its artifact to the output directory so any step can be
replayed or diffed in isolation. All randomness is derived from explicit
seeds, and the report is byte-identical across runs with the same config.

Final training warm-starts from the proxy policy: the proxy's reward
estimates define which samples are already mastered, and that premise only
holds for a model that actually has the proxy's competence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..curriculum import build_schedule, write_schedule, write_schedule_text
from ..dataset import write_dataset
from ..errors import ConfigurationError, StageError
from ..hvp import LogisticPoint, sample_direction
from ..scoring import ScoringParams, build_score_table, grad_directions
from ..selection import MODE_MINIREC, MODE_RANDOM, greedy_select, random_select
from .policy import (
    Policy,
    estimate_rewards,
    estimate_rollout_rewards,
    train_policy,
    train_proxy,
)
from .task import SyntheticTask, generate_task, task_to_dataset

# fixed offsets so every stage gets an independent stream from the master seed
_STAGE_STREAMS = {
    "split": 1,
    "proxy": 2,
    "estimate": 3,
    "select": 4,
    "train": 5,
    "eval": 6,
}


def stage_seed(master_seed: int, stage: str, index: int = 0) -> int:
    """Deterministic per-stage seed derived from the master seed."""
    ss = np.random.SeedSequence((master_seed, _STAGE_STREAMS[stage], index))
    return int(ss.generate_state(1)[0])


def _require(obj: Mapping, key: str, pointer: str):
    if key not in obj:
        raise ConfigurationError(f"missing config field at {pointer}/{key}")
    return obj[key]


def _number(obj: Mapping, key: str, pointer: str, default=None, minimum=None, maximum=None):
    if key not in obj:
        if default is None:
            raise ConfigurationError(f"missing config field at {pointer}/{key}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"config field at {pointer}/{key} must be a number")
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"config field at {pointer}/{key} must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise ConfigurationError(f"config field at {pointer}/{key} must be <= {maximum}")
    return value


@dataclass(frozen=True)
class PipelineConfig:
    """Validated pipeline settings; see :meth:`from_json_dict` for the schema."""

    item_count: int
    context_dim: int
    n_samples: int
    tier_mix: tuple[float, float, float]
    task_seed: int
    proxy_subset_size: int
    proxy_steps: int
    n_rollouts: int
    proxy_learning_rate: float
    epsilon_clip: float
    mu: float
    sigma: float
    lam: float
    mode: str
    m: int
    with_representativeness: bool
    curriculum_k: int
    curriculum_seed: int
    heldout_fraction: float
    eval_n: int
    train_steps: int
    train_learning_rate: float
    train_n_rollouts: int
    train_epsilon_clip: float
    seed: int
    output_dir: str | None = None
    selection_seed: int | None = None

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "PipelineConfig":
        if not isinstance(obj, Mapping):
            raise ConfigurationError("config root must be a JSON object")
        task = _require(obj, "task", "")
        proxy = _require(obj, "proxy", "")
        scoring = obj.get("scoring", {})
        selection = _require(obj, "selection", "")
        curriculum = _require(obj, "curriculum", "")
        ev = _require(obj, "eval", "")
        train = obj.get("train", {})

        tier_mix = _require(task, "tier_mix", "/task")
        if not isinstance(tier_mix, (list, tuple)) or len(tier_mix) != 3:
            raise ConfigurationError("config field at /task/tier_mix must be 3 proportions")

        mode = selection.get("mode", MODE_MINIREC)
        if mode not in (MODE_MINIREC, MODE_RANDOM):
            raise ConfigurationError(
                f"config field at /selection/mode must be '{MODE_MINIREC}' or '{MODE_RANDOM}'"
            )

        proxy_lr = float(_number(proxy, "learning_rate", "/proxy", default=14.0, minimum=0))
        eps_clip = float(_number(proxy, "epsilon_clip", "/proxy", default=0.2))
        if not (0.0 < eps_clip < 1.0):
            raise ConfigurationError("config field at /proxy/epsilon_clip must be in (0, 1)")
        train_eps = float(_number(train, "epsilon_clip", "/train", default=eps_clip))
        if not (0.0 < train_eps < 1.0):
            raise ConfigurationError("config field at /train/epsilon_clip must be in (0, 1)")

        return cls(
            item_count=int(_number(task, "item_count", "/task", minimum=2)),
            context_dim=int(_number(task, "context_dim", "/task", minimum=1)),
            n_samples=int(_number(task, "n_samples", "/task", minimum=1)),
            tier_mix=tuple(float(p) for p in tier_mix),
            task_seed=int(_number(task, "seed", "/task", default=0)),
            proxy_subset_size=int(_number(proxy, "subset_size", "/proxy", default=256, minimum=1)),
            proxy_steps=int(_number(proxy, "steps", "/proxy", default=100, minimum=0)),
            n_rollouts=int(_number(proxy, "n_rollouts", "/proxy", default=8, minimum=2)),
            proxy_learning_rate=proxy_lr,
            epsilon_clip=eps_clip,
            mu=float(_number(scoring, "mu", "/scoring", default=0.5)),
            sigma=float(_number(scoring, "sigma", "/scoring", default=0.25)),
            lam=float(_number(scoring, "lambda", "/scoring", default=1.0, minimum=0)),
            mode=mode,
            m=int(_number(selection, "m", "/selection", minimum=1)),
            with_representativeness=bool(selection.get("with_representativeness", True)),
            curriculum_k=int(_number(curriculum, "k", "/curriculum", default=4, minimum=1)),
            curriculum_seed=int(_number(curriculum, "seed", "/curriculum", default=0)),
            heldout_fraction=float(
                _number(ev, "heldout_fraction", "/eval", default=0.2, minimum=0.0, maximum=0.9)
            ),
            eval_n=int(_number(ev, "eval_n", "/eval", default=128, minimum=2)),
            train_steps=int(_number(train, "steps", "/train", default=100, minimum=0)),
            train_learning_rate=float(
                _number(train, "learning_rate", "/train", default=10.0, minimum=0)
            ),
            train_n_rollouts=int(
                _number(train, "n_rollouts", "/train", default=int(_number(proxy, "n_rollouts", "/proxy", default=8, minimum=2)), minimum=2)
            ),
            train_epsilon_clip=train_eps,
            seed=int(_number(obj, "seed", "", default=0)),
            output_dir=obj.get("output_dir"),
            selection_seed=selection.get("seed"),
        )

    @classmethod
    def read(cls, path: str | Path) -> "PipelineConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc.msg}") from exc
        return cls.from_json_dict(obj)

    def resolved_json_dict(self) -> dict:
        return {
            "task": {
                "item_count": self.item_count,
                "context_dim": self.context_dim,
                "n_samples": self.n_samples,
                "tier_mix": list(self.tier_mix),
                "seed": self.task_seed,
            },
            "proxy": {
                "subset_size": self.proxy_subset_size,
                "steps": self.proxy_steps,
                "n_rollouts": self.n_rollouts,
                "learning_rate": self.proxy_learning_rate,
                "epsilon_clip": self.epsilon_clip,
            },
            "scoring": {"mu": self.mu, "sigma": self.sigma, "lambda": self.lam},
            "selection": {
                "mode": self.mode,
                "m": self.m,
                "with_representativeness": self.with_representativeness,
                "seed": self.selection_seed,
            },
            "curriculum": {"k": self.curriculum_k, "seed": self.curriculum_seed},
            "eval": {"heldout_fraction": self.heldout_fraction, "eval_n": self.eval_n},
            "train": {"steps": self.train_steps, "learning_rate": self.train_learning_rate, "n_rollouts": self.train_n_rollouts, "epsilon_clip": self.train_epsilon_clip},
            "seed": self.seed,
            "output_dir": self.output_dir,
        }


@dataclass(frozen=True)
class PipelineReport:
    """Per-stage summaries, artifact paths, and final held-out metrics."""

    config: dict
    artifacts: dict
    stages: dict
    metrics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "artifacts": self.artifacts,
            "stages": self.stages,
            "metrics": self.metrics,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")


def surrogate_directions(
    policy: Policy, task: SyntheticTask, ids: Sequence[str]
) -> dict[str, np.ndarray]:
    """Second-order sample directions from a per-sample logistic surrogate.

    For each sample, the policy's target-vs-rest margin defines a logistic
    model (x = context, y = 1) evaluated at theta = W[target] - mean of the
    other rows; the direction is its Hessian-gradient product.
    """
    k = policy.item_count
    row_sum = policy.weights.sum(axis=0)
    out: dict[str, np.ndarray] = {}
    for sample_id in ids:
        s = task.sample_by_id(sample_id)
        theta = policy.weights[s.target] - (row_sum - policy.weights[s.target]) / (k - 1)
        model = LogisticPoint(s.context, 1)
        out[sample_id] = sample_direction(model, theta)
    return out


def _tier_summary(task: SyntheticTask, ids: Sequence[str], values: Mapping[str, float]) -> dict:
    by_tier: dict[str, list[float]] = {}
    for i in ids:
        by_tier.setdefault(task.sample_by_id(i).tier, []).append(values[i])
    return {t: float(np.mean(v)) for t, v in sorted(by_tier.items())}


def run_pipeline(config: PipelineConfig, output_dir: str | Path | None = None) -> PipelineReport:
    """Execute every stage, writing artifacts under ``output_dir``.

    Raises :class:`StageError` naming the failing stage on any error.
    """
    out_dir = Path(output_dir or config.output_dir or "pipeline_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    stages: dict = {}
    artifacts: dict = {}

    def run_stage(name: str, fn):
        try:
            return fn()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc

    # task generation and train/heldout split
    def _task():
        task = generate_task(
            config.item_count, config.context_dim, config.n_samples,
            config.tier_mix, config.task_seed,
        )
        rng = np.random.default_rng(stage_seed(config.seed, "split"))
        perm = rng.permutation(len(task))
        n_held = int(len(task) * config.heldout_fraction)
        all_ids = [s.id for s in task.samples]
        heldout = sorted(all_ids[i] for i in perm[:n_held])
        pool = sorted(all_ids[i] for i in perm[n_held:])
        tier_counts: dict[str, int] = {}
        for s in task.samples:
            tier_counts[s.tier] = tier_counts.get(s.tier, 0) + 1
        stages["task"] = {
            "n_samples": len(task),
            "tier_counts": dict(sorted(tier_counts.items())),
            "pool_size": len(pool),
            "heldout_size": len(heldout),
        }
        return task, pool, heldout

    task, pool, heldout = run_stage("task", _task)

    # proxy training and reward estimation over the candidate pool
    def _proxy():
        proxy = train_proxy(
            task,
            subset_size=min(config.proxy_subset_size, len(pool)),
            steps=config.proxy_steps,
            seed=stage_seed(config.seed, "proxy"),
            n_rollouts=config.n_rollouts,
            learning_rate=config.proxy_learning_rate,
            epsilon_clip=config.epsilon_clip,
            sample_ids=pool,
        )
        rewards = estimate_rollout_rewards(
            proxy, task, config.n_rollouts, stage_seed(config.seed, "estimate"), pool
        )
        r_bar = {k: float(np.mean(v)) for k, v in rewards.items()}
        stages["proxy"] = {
            "subset_size": min(config.proxy_subset_size, len(pool)),
            "steps": config.proxy_steps,
            "pool_mean_reward": float(np.mean(list(r_bar.values()))),
            "pool_mean_reward_by_tier": _tier_summary(task, pool, r_bar),
        }
        return proxy, rewards

    proxy, rollout_rewards = run_stage("proxy", _proxy)

    # materialize the scored dataset
    def _dataset():
        directions = None
        if config.with_representativeness:
            directions = surrogate_directions(proxy, task, pool)
        ds = task_to_dataset(task, rollout_rewards, directions, ids=pool)
        path = out_dir / "dataset.jsonl"
        write_dataset(ds, path)
        artifacts["dataset"] = path.name
        return ds

    dataset = run_stage("dataset", _dataset)

    # learnability / representativeness scores
    def _scores():
        params = ScoringParams(mu=config.mu, sigma=config.sigma, lam=config.lam)
        directions = grad_directions(dataset) if config.with_representativeness else None
        table = build_score_table(dataset, params, directions)
        path = out_dir / "scores.json"
        table.write(path)
        artifacts["scores"] = path.name
        stages["scores"] = {
            "mean_l_norm": float(np.mean(table.l_norm)),
            "with_representativeness": table.has_representativeness,
        }
        return table

    table = run_stage("scores", _scores)

    # subset selection
    def _select():
        if config.mode == MODE_RANDOM:
            seed = (
                config.selection_seed
                if config.selection_seed is not None
                else stage_seed(config.seed, "select")
            )
            manifest = random_select(dataset, config.m, seed)
        else:
            manifest = greedy_select(
                table, dataset, config.m, config.lam,
                with_representativeness=config.with_representativeness,
            )
        path = out_dir / "manifest.json"
        manifest.write(path)
        artifacts["manifest"] = path.name
        tier_counts: dict[str, int] = {}
        for i in manifest.ids:
            tier = task.sample_by_id(i).tier
            tier_counts[tier] = tier_counts.get(tier, 0) + 1
        stages["selection"] = {
            "mode": manifest.mode,
            "m": manifest.m,
            "selected_tier_counts": dict(sorted(tier_counts.items())),
        }
        return manifest

    manifest = run_stage("select", _select)

    # curriculum schedule
    def _schedule():
        r_bar = table.r_bar_map()
        schedule = build_schedule(manifest, r_bar, config.curriculum_k, config.curriculum_seed)
        path = out_dir / "schedule.json"
        write_schedule(schedule, path)
        text_path = out_dir / "schedule.txt"
        write_schedule_text(schedule, text_path)
        artifacts["schedule"] = path.name
        artifacts["schedule_text"] = text_path.name
        stages["curriculum"] = {
            "k": schedule.k,
            "group_sizes": [len(g) for g in schedule.groups],
        }
        return schedule

    schedule = run_stage("schedule", _schedule)

    # final training: consume groups in order with equal step budgets
    def _train():
        policy = Policy(proxy.weights.copy())
        base, extra = divmod(config.train_steps, schedule.k)
        for g, group in enumerate(schedule.groups):
            steps = base + (1 if g < extra else 0)
            policy = train_policy(
                task,
                list(group),
                steps,
                config.train_learning_rate,
                config.train_n_rollouts,
                config.train_epsilon_clip,
                seed=stage_seed(config.seed, "train", g),
                initial=policy,
            )
        stages["final_training"] = {
            "steps": config.train_steps,
            "learning_rate": config.train_learning_rate,
            "warm_start": True,
        }
        return policy

    final_policy = run_stage("train", _train)

    # held-out evaluation
    def _evaluate():
        eval_seed = stage_seed(config.seed, "eval")
        r_final = estimate_rewards(final_policy, task, config.eval_n, eval_seed, heldout)
        r_proxy = estimate_rewards(proxy, task, config.eval_n, eval_seed, heldout)
        metrics = {
            "heldout_mean_reward": float(np.mean(list(r_final.values()))),
            "heldout_hit_fraction": float(np.mean([v > 0 for v in r_final.values()])),
            "heldout_mean_reward_proxy": float(np.mean(list(r_proxy.values()))),
            "heldout_mean_reward_by_tier": _tier_summary(task, heldout, r_final),
        }
        stages["eval"] = {"eval_n": config.eval_n, "heldout_size": len(heldout)}
        return metrics

    metrics = run_stage("eval", _evaluate)

    report = PipelineReport(
        config=config.resolved_json_dict(),
        artifacts=artifacts,
        stages=stages,
        metrics=metrics,
    )
    report_path = out_dir / "report.json"
    report.write(report_path)
    return report
