"""Published JSON schemas for every artifact the CLI emits."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from .errors import ConfigurationError

KINDS = ("record", "scores", "manifest", "schedule", "report")


@lru_cache(maxsize=None)
def load_schema(kind: str) -> dict:
    """Load one of the shipped schemas by artifact kind."""
    if kind not in KINDS:
        raise ConfigurationError(f"unknown schema kind '{kind}'; expected one of {KINDS}")
    ref = resources.files("rlsel.schemas").joinpath(f"{kind}.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def validate_artifact(kind: str, obj: object) -> None:
    """Validate a parsed artifact against its schema.

    Raises :class:`ConfigurationError` with the JSON path of the offending
    field.
    """
    schema = load_schema(kind)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ConfigurationError(f"schema violation at {pointer}: {err.message}")
