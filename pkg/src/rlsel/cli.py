"""Command-line front end.

Every subcommand is deterministic given its flags and seeds, reads/writes
file artifacts so each stage can be replayed independently, and logs
key=value lines to stderr. Exit codes: 0 success, 1 runtime failure,
2 usage or configuration error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .curriculum import DEFAULT_GROUPS, build_schedule, write_schedule, write_schedule_text
from .dataset import load_dataset, write_dataset
from .errors import ConfigurationError, ParameterError, RlselError
from .hvp import run_verification
from .scoring import ScoreTable, ScoringParams, build_score_table, grad_directions
from .selection import MODE_MINIREC, MODE_RANDOM, SubsetManifest, greedy_select, random_select
from .sim.pipeline import PipelineConfig, run_pipeline, stage_seed, surrogate_directions
from .sim.policy import estimate_rollout_rewards, train_proxy
from .sim.task import generate_task, task_to_dataset
from .validation import validate_artifact

EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _log(**fields) -> None:
    print(" ".join(f"{k}={v}" for k, v in fields.items()), file=sys.stderr)


def _fail(exc: BaseException) -> None:
    usage = isinstance(exc, (ParameterError, ConfigurationError))
    _log(error=type(exc).__name__, message=f'"{exc}"')
    sys.exit(EXIT_USAGE if usage else EXIT_RUNTIME)


def _guard(fn):
    """Map package exceptions onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (RlselError, OSError) as exc:
            _fail(exc)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Subset selection engine for RL training data."""


@main.command()
@click.argument("dataset_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="scores.json", show_default=True)
@click.option("--mu", default=0.5, show_default=True, help="Moderate-difficulty reward.")
@click.option("--sigma", default=0.25, show_default=True, help="Learnability tolerance.")
@click.option(
    "--with-representativeness",
    is_flag=True,
    help="Score direction alignment from the records' grad vectors.",
)
@_guard
def score(dataset_path, out_path, mu, sigma, with_representativeness):
    """Compute per-sample scores for DATASET_PATH (JSONL)."""
    dataset = load_dataset(dataset_path)
    params = ScoringParams(mu=mu, sigma=sigma)
    directions = grad_directions(dataset) if with_representativeness else None
    table = build_score_table(dataset, params, directions)
    validate_artifact("scores", table.to_json_dict())
    table.write(out_path)
    _log(stage="score", records=len(dataset), representativeness=table.has_representativeness, out=out_path)


@main.command()
@click.argument("dataset_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("scores_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="manifest.json", show_default=True)
@click.option("--m", "m", type=int, required=True, help="Target subset size.")
@click.option("--lambda", "lam", default=1.0, show_default=True, help="Representativeness weight.")
@click.option(
    "--mode",
    type=click.Choice([MODE_MINIREC, MODE_RANDOM]),
    default=MODE_MINIREC,
    show_default=True,
)
@click.option("--seed", default=0, show_default=True, help="Seed for the random baseline.")
@click.option(
    "--with-representativeness/--without-representativeness",
    "with_r",
    default=None,
    help="Require/ignore R scores (default: use when present).",
)
@_guard
def select(dataset_path, scores_path, out_path, m, lam, mode, seed, with_r):
    """Greedy (or random-baseline) subset selection."""
    dataset = load_dataset(dataset_path)
    if mode == MODE_RANDOM:
        manifest = random_select(dataset, m, seed)
    else:
        table = ScoreTable.read(scores_path)
        manifest = greedy_select(table, dataset, m, lam, with_representativeness=with_r)
    validate_artifact("manifest", manifest.to_json_dict())
    manifest.write(out_path)
    _log(stage="select", mode=mode, m=m, out=out_path)


@main.command()
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("scores_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="schedule.json", show_default=True)
@click.option("--text", "text_path", default=None, help="Also write the flat text format here.")
@click.option("--k", default=DEFAULT_GROUPS, show_default=True, help="Number of curriculum groups.")
@click.option("--seed", default=0, show_default=True)
@_guard
def schedule(manifest_path, scores_path, out_path, text_path, k, seed):
    """Partition a manifest into K reward-sorted curriculum groups."""
    manifest = SubsetManifest.read(manifest_path)
    table = ScoreTable.read(scores_path)
    sched = build_schedule(manifest, table.r_bar_map(), k, seed)
    validate_artifact("schedule", sched.to_json_dict())
    write_schedule(sched, out_path)
    if text_path:
        write_schedule_text(sched, text_path)
    _log(stage="schedule", k=k, groups=len(sched.groups), out=out_path)


@main.command()
@click.option("--out", "out_path", default="dataset.jsonl", show_default=True)
@click.option("--item-count", default=16, show_default=True)
@click.option("--context-dim", default=8, show_default=True)
@click.option("--n-samples", default=2000, show_default=True)
@click.option("--tier-mix", default="0.3,0.4,0.3", show_default=True, help="easy,medium,hard proportions.")
@click.option("--seed", default=0, show_default=True)
@click.option("--subset-size", default=256, show_default=True, help="Proxy training subset.")
@click.option("--proxy-steps", default=100, show_default=True)
@click.option("--proxy-lr", default=14.0, show_default=True)
@click.option("--rollouts", "n_rollouts", default=8, show_default=True, help="Rollouts per sample.")
@click.option("--epsilon-clip", default=0.2, show_default=True)
@click.option("--with-directions", is_flag=True, help="Attach second-order direction vectors.")
@_guard
def simulate(out_path, item_count, context_dim, n_samples, tier_mix, seed, subset_size,
             proxy_steps, proxy_lr, n_rollouts, epsilon_clip, with_directions):
    """Materialize a synthetic task as an engine-ready JSONL dataset.

    Generates the task, trains a proxy policy on a random subset, estimates
    every sample's rollout rewards under it, and writes the records.
    """
    try:
        mix = tuple(float(p) for p in tier_mix.split(","))
    except ValueError:
        raise ConfigurationError(f"--tier-mix must be three comma-separated numbers, got '{tier_mix}'")
    task = generate_task(item_count, context_dim, n_samples, mix, seed)
    proxy = train_proxy(
        task, subset_size=subset_size, steps=proxy_steps, seed=stage_seed(seed, "proxy"),
        n_rollouts=n_rollouts, learning_rate=proxy_lr, epsilon_clip=epsilon_clip,
    )
    rewards = estimate_rollout_rewards(proxy, task, n_rollouts, stage_seed(seed, "estimate"))
    directions = None
    if with_directions:
        directions = surrogate_directions(proxy, task, [s.id for s in task.samples])
    dataset = task_to_dataset(task, rewards, directions)
    write_dataset(dataset, out_path)
    mean_r = float(np.mean([np.mean(v) for v in rewards.values()]))
    _log(stage="simulate", records=len(dataset), mean_reward=f"{mean_r:.4f}", out=out_path)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=None, help="Override the config's output directory.")
@click.option("--dry-run", is_flag=True, help="Print the resolved config and stage plan, then exit.")
@_guard
def pipeline(config_path, out_dir, dry_run):
    """Run the full pipeline described by CONFIG_PATH."""
    config = PipelineConfig.read(config_path)
    if dry_run:
        plan = ["task", "proxy", "dataset", "scores", "select", "schedule", "train", "eval"]
        click.echo(json.dumps({"config": config.resolved_json_dict(), "stages": plan}, indent=2))
        return
    report = run_pipeline(config, out_dir)
    validate_artifact("report", report.to_json_dict())
    out = Path(out_dir or config.output_dir or "pipeline_out") / "report.json"
    _log(
        stage="pipeline",
        heldout_mean_reward=f"{report.metrics['heldout_mean_reward']:.4f}",
        report=str(out),
    )
    click.echo(str(out))


@main.command("verify-hvp")
@click.option("--trials", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_guard
def verify_hvp_cmd(trials, seed):
    """Check analytic Hessian-vector products against the finite-difference oracle."""
    reports, ok = run_verification(trials=trials, seed=seed)
    worst: dict[str, float] = {}
    for rep in reports:
        key = rep.model_kind
        err = rep.max_abs_error if key == "Quadratic" else rep.relative_error
        worst[key] = max(worst.get(key, 0.0), err)
    click.echo(f"{'model':<14} {'trials':>6} {'worst error':>14} {'tolerance':>10}  status")
    tolerances = {"Quadratic": 1e-10, "LogisticPoint": 1e-6}
    for kind, tol in tolerances.items():
        n = sum(1 for r in reports if r.model_kind == kind)
        status = "ok" if worst.get(kind, 0.0) < tol else "FAIL"
        click.echo(f"{kind:<14} {n:>6} {worst.get(kind, 0.0):>14.3e} {tol:>10.0e}  {status}")
    if not ok:
        sys.exit(EXIT_RUNTIME)


if __name__ == "__main__":
    main()
