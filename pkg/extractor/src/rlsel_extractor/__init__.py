"""Adapter from real causal language models to the rlsel JSONL wire format."""

__version__ = "0.1.0"

from .extract import ExtractionError, extract, load_model, validate_record
from .job import DIRECTION_MODES, REWARD_RULES, ExtractionJob, JobError, Prompt, load_prompts

__all__ = [
    "DIRECTION_MODES",
    "ExtractionError",
    "ExtractionJob",
    "JobError",
    "Prompt",
    "REWARD_RULES",
    "extract",
    "load_model",
    "load_prompts",
    "validate_record",
]
