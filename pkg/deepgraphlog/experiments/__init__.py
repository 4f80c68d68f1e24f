"""
Desk-scale experiments: graph classification, structure learning,
distant supervision on family trees and one-move blocks-world planning.
"""
from .e1 import gen_e1
from .e2 import gen_e2
from .e3 import gen_e3
from .e4 import gen_e4
from .metrics import AggregateRow, MetricReport, aggregate, auc_roc, evaluate, f1_score, hits_at_k
from .runner import RUNNERS, run_experiment, run_once
from .spec import EXPERIMENTS, DatasetSpec, load_dataset_spec

__all__ = [
    "AggregateRow",
    "DatasetSpec",
    "EXPERIMENTS",
    "MetricReport",
    "RUNNERS",
    "aggregate",
    "auc_roc",
    "evaluate",
    "f1_score",
    "gen_e1",
    "gen_e2",
    "gen_e3",
    "gen_e4",
    "hits_at_k",
    "load_dataset_spec",
    "run_experiment",
    "run_once",
]
