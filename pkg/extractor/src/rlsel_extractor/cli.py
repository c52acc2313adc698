"""Job-file CLI: `rlsel-extract job.json`."""

from __future__ import annotations

import dataclasses
import sys

import click

from .extract import ExtractionError, extract
from .job import ExtractionJob, JobError


@click.command()
@click.argument("job_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--batch-size", type=int, default=None,
              help="Override the job's inference batch size (smaller uses less memory).")
@click.option("--seed", type=int, default=None, help="Override the job's sampling seed.")
def main(job_path, batch_size, seed):
    """Extract rewards, features, and direction vectors per the job file."""
    try:
        job = ExtractionJob.read(job_path)
        overrides = {}
        if batch_size is not None:
            overrides["batch_size"] = batch_size
        if seed is not None:
            overrides["seed"] = seed
        if overrides:
            job = dataclasses.replace(job, **overrides)
        count = extract(job)
    except JobError as exc:
        print(f"error=JobError message=\"{exc}\"", file=sys.stderr)
        sys.exit(2)
    except ExtractionError as exc:
        print(f"error=ExtractionError message=\"{exc}\"", file=sys.stderr)
        sys.exit(1)
    print(f"records={count} out={job.output_path}", file=sys.stderr)


if __name__ == "__main__":
    main()
