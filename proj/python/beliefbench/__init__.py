"""Synthetic belief-revision benchmark for model editing.

The pipeline runs world -> corpus -> oracle -> bench -> evaluate::

    import beliefbench as bb
    world = bb.synth_world(seed=42)
    corpus = bb.generate_corpus(world, seed=42)
    oracle = bb.fit_oracle(world, corpus)
    bench = bb.gen_cases(world, oracle, n_cases=200, seed=42)
    report = bb.evaluate(bench, "bayes", oracle=oracle)

A Python callable can stand in for the model. It receives one probe query
as a dict (id, kind, prompt, candidate, weight) and returns a dict with
"probability" and/or "text", or "error".
"""

import json

from ._core import (
    BeliefbenchError,
    Bench,
    Corpus,
    Oracle,
    Snapshot,
    World,
    __version__,
    fit_oracle,
    gen_cases,
    generate_corpus,
    render_report,
    synth_world,
)
from ._core import evaluate_json as _evaluate_json


def evaluate(bench, model, oracle=None, corpus=None, weight="auto",
             subsets=("all", "downstream_change", "error_fixing")):
    """Run the benchmark and return the report as a dict.

    model is "bayes" (needs oracle), "memorizer" or "stale" (need corpus),
    or a callable answering probe queries.
    """
    text = _evaluate_json(bench, model, oracle, corpus, weight, list(subsets))
    return json.loads(text)


def report_text(report):
    """Render a report dict from evaluate() as the text table."""
    return render_report(json.dumps(report))


__all__ = [
    "BeliefbenchError",
    "Bench",
    "Corpus",
    "Oracle",
    "Snapshot",
    "World",
    "__version__",
    "evaluate",
    "fit_oracle",
    "gen_cases",
    "generate_corpus",
    "render_report",
    "report_text",
    "synth_world",
]
