"""
Training examples and their CSV files.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from ..errors import DataError, DeepGraphLogError
from ..frontend.parser import parse_atom
from ..frontend.program import Program
from ..logic.terms import Atom


@dataclass(frozen=True)
class TrainingExample:
    """Supervision on one ground query; ``program`` overrides the trainer's program."""

    query: Atom
    target: float
    weight: float = 1.0
    program: Optional[Program] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.target <= 1.0:
            raise DataError(f"target {self.target} of {self.query} is outside [0, 1]")
        if not (self.weight > 0.0 and math.isfinite(self.weight)):
            raise DataError(f"weight {self.weight} of {self.query} must be positive")
        if not self.query.is_ground():
            raise DataError(f"training query {self.query} is not ground")


def load_examples(path: str | Path) -> List[TrainingExample]:
    """Read a ``query,target,weight`` CSV; ``weight`` may be omitted."""
    examples = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if "query" not in header or "target" not in header:
            raise DataError(f"{path}: header must contain query,target[,weight]")
        for line, row in enumerate(reader, start=2):
            try:
                weight_text = (row.get("weight") or "").strip()
                examples.append(
                    TrainingExample(
                        query=parse_atom(row["query"]),
                        target=float(row["target"]),
                        weight=float(weight_text) if weight_text else 1.0,
                    )
                )
            except (ValueError, TypeError, DeepGraphLogError) as exc:
                message = exc.message if isinstance(exc, DeepGraphLogError) else str(exc)
                raise DataError(f"{path}:{line}: {message}") from exc
    return examples


def write_examples(path: str | Path, examples: Sequence[TrainingExample]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["query", "target", "weight"])
        for ex in examples:
            writer.writerow([str(ex.query), repr(float(ex.target)), repr(float(ex.weight))])
