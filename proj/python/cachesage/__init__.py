"""Agent-aware KV cache policies on a trace-driven serving-engine simulator."""

from cachesage._core import (
    TransitionLearner,
    Trace,
    bench,
    chain_hash,
    derive_agent_identity,
    exact_survival_prob,
    generate_trace,
    preset_names,
    read_trace_jsonl,
    run_sim,
)

__all__ = [
    "TransitionLearner",
    "Trace",
    "bench",
    "chain_hash",
    "derive_agent_identity",
    "exact_survival_prob",
    "generate_trace",
    "preset_names",
    "read_trace_jsonl",
    "run_sim",
]
