"""
Canonical source rendering of a Program; parsing the output gives back an equal Program.
"""
from __future__ import annotations

from typing import List

from .program import GnnFactSchema, ProbFact, Program


def format_fact(fact: ProbFact) -> str:
    if fact.learnable:
        return f"t({fact.prob!r})::{fact.atom}."
    if fact.is_deterministic:
        return f"{fact.atom}."
    return f"{fact.prob!r}::{fact.atom}."


def format_schema(schema: GnnFactSchema) -> str:
    gamma = ",".join(str(item) for item in schema.gamma_spec)
    targets = ",".join(str(t) for t in schema.targets)
    heads = "; ".join(str(h) for h in schema.head_group)
    text = f"gnn({schema.model_id},[{gamma}],[{targets}])::{heads}"
    if schema.guard:
        text += " :- " + ", ".join(str(g) for g in schema.guard)
    return text + "."


def format_program(program: Program) -> str:
    lines: List[str] = []
    for model_id, cfg in program.model_configs.items():
        options = f"layers={cfg.num_layers}, hidden={cfg.hidden_dim}"
        if cfg.readout is not None:
            options += f", readout={cfg.readout.value}"
        lines.append(f"#model({model_id}, {options}).")
    lines.extend(format_fact(f) for f in program.prob_facts)
    lines.extend(str(rule) for rule in program.rules)
    lines.extend(format_schema(s) for s in program.gnn_schemas)
    lines.extend(f"query({q})." for q in program.queries)
    for ev in program.evidence:
        lines.append(f"evidence({ev.atom})." if ev.value else f"evidence({ev.atom}, false).")
    return "\n".join(lines) + ("\n" if lines else "")
