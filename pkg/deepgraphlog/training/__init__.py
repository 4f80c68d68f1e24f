"""
Gradient-based learning of fact probabilities and network weights.
"""
from .data import TrainingExample, load_examples, write_examples
from .optim import SGD, Adam, Optimizer, StoreGradient, make_optimizer
from .store import ParamStore
from .trainer import (
    EpochRecord,
    PlanCache,
    TrainOptions,
    TrainReport,
    cross_entropy,
    fact_prior,
    fit,
    grad,
    loss,
    predict,
    write_epoch_log,
)

__all__ = [
    "Adam",
    "EpochRecord",
    "Optimizer",
    "ParamStore",
    "PlanCache",
    "SGD",
    "StoreGradient",
    "TrainOptions",
    "TrainReport",
    "TrainingExample",
    "cross_entropy",
    "fact_prior",
    "fit",
    "grad",
    "load_examples",
    "loss",
    "make_optimizer",
    "predict",
    "write_epoch_log",
    "write_examples",
]
