# Copyright (c) 2026 The llmconf Authors.
# SPDX-License-Identifier: Apache-2.0
"""Python access to the llmconf search engine."""

import json as _json

from ._llmconf import (  # noqa: F401
    Error,
    PerfDatabase,
    aggregated_schedule,
    derive_metrics,
    pareto_indices,
    run_cli,
    sample_weights,
    tokens_per_expert,
    ttft_correction,
)
from . import _llmconf

__all__ = [
    "Error",
    "PerfDatabase",
    "aggregated_schedule",
    "derive_metrics",
    "generate",
    "pareto_indices",
    "run_cli",
    "sample_weights",
    "search",
    "tokens_per_expert",
    "ttft_correction",
]


def search(db, model, workload=None, jobs=0, timing=False):
    """Run a full search and return the report as a dict."""
    text = _llmconf.search_json(str(db), str(model), _json.dumps(workload or {}), jobs, timing)
    return _json.loads(text)


def generate(entry, model, backend="trtllm", version="", profiles=""):
    """Launch-plan YAML for one report entry."""
    return _llmconf.generate_yaml(_json.dumps(entry), model, backend, version, str(profiles))
