"""Python access to the mimo banner engine.

The heavy lifting happens in the native ``_mimo`` module; this package turns its
JSON results into plain Python values.
"""

import json
import os
from pathlib import Path

_packaged_templates = Path(__file__).with_name("templates")
if _packaged_templates.is_dir():
    os.environ.setdefault("MIMO_TEMPLATE_DIR", str(_packaged_templates))

from . import _mimo  # noqa: E402

Error = _mimo.Error

list_templates = _mimo.list_templates
render = _mimo.render
spearman = _mimo.spearman


def error_code(exc):
    """The engine's error code name carried by a mimo.Error."""
    return exc.args[0] if exc.args else None


def cost(input_tokens, output_tokens, images=0):
    """Cost of one call mix as (micro_dollars, exact, display)."""
    return _mimo.cost(input_tokens, output_tokens, images)


def aggregate(rows):
    """rows: iterable of (method, metric, rater, score)."""
    return json.loads(_mimo.aggregate([tuple(r) for r in rows]))


def parse_metric_payload(text, schema="pairwise"):
    return json.loads(_mimo.parse_metric_payload(text, schema))


def eliminate(rejected):
    """rejected: {style_id: [bool per judge]}; returns the round record."""
    return json.loads(_mimo.eliminate({int(k): list(v) for k, v in rejected.items()}))


def generate(prompt, logo, *, config=None, product="", width=1024, height=1024, out_dir="runs"):
    raw = _mimo.generate(json.dumps(config or {}), prompt, str(logo), product, width, height, str(out_dir))
    return json.loads(raw)


def run_core(prompt, logo, *, config=None, product="", width=1024, height=1024, out_dir="runs", single_agent=False):
    raw = _mimo.run_core(json.dumps(config or {}), prompt, str(logo), product, width, height, str(out_dir),
                         single_agent)
    return json.loads(raw)


def cost_from_run(run_dir):
    return json.loads(_mimo.cost_from_run(str(run_dir)))


def check_memory_law(run_dir):
    """Empty string when every step extends the previous memory, else a description."""
    return _mimo.check_memory_law(str(run_dir))


__all__ = [
    "Error", "error_code", "list_templates", "render", "spearman", "cost", "aggregate",
    "parse_metric_payload", "eliminate", "generate", "run_core", "cost_from_run", "check_memory_law",
]
