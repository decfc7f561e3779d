"""Run configuration with file/flag layering.

A config file is a single JSON object whose keys mirror RunConfig fields.
Command-line flags override file values, which override defaults.  The
sidecar endpoint inside ``sidecar:`` specs can be overridden globally with
the DOCARG_SIDECAR environment variable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .decoding import AdjustConfig, ExtractOptions
from .errors import ParseError, ValidationError

SIDECAR_ENV = "DOCARG_SIDECAR"

DEFAULT_SEED = 13


@dataclass
class RunConfig:
    ontology: str | None = None
    documents: str | None = None
    constraints: str | None = None
    curation: str | None = None
    predictions: str | None = None
    out: str | None = None
    generator: str = "ngram:model.pkl"
    embedder: str = "hash:256"
    threshold: float = 0.001
    penalty: float = 0.01
    boost: float = 1.5
    promotion_min_count: int = 5
    penalize: bool = True
    promote: bool = True
    constrained: bool = True
    ablation: str = "none"
    max_input_length: int = 360
    max_steps: int = 128
    seed: int = DEFAULT_SEED
    workers: int = 1
    dump_inputs: str | None = None
    mode: str = "classification"
    criterion: str = "head"
    bootstrap_n: int = 5000

    def adjust_config(self) -> AdjustConfig:
        return AdjustConfig(
            penalty=self.penalty,
            boost=self.boost,
            promotion_min_count=self.promotion_min_count,
            penalize=self.penalize,
            promote=self.promote,
        )

    def extract_options(self) -> ExtractOptions:
        return ExtractOptions(
            constrained=self.constrained,
            ablation=self.ablation,
            max_input_length=self.max_input_length,
            max_steps=self.max_steps,
            seed=self.seed,
        )


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def load_run_config(path: str | None, overrides: dict) -> RunConfig:
    """Layer defaults < config file < explicit overrides (None = unset)."""
    values: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"config file {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ParseError(f"config file {path}: expected a JSON object")
        for key, value in raw.items():
            if key not in _FIELDS:
                raise ValidationError(f"unknown config key {key!r}")
            values[key] = value
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ValidationError(f"unknown config key {key!r}")
        values[key] = value
    return RunConfig(**values)


def sidecar_endpoint(spec_rest: str) -> str:
    """Endpoint after ``sidecar:``, overridable via the environment."""
    return os.environ.get(SIDECAR_ENV) or spec_rest
