"""
Structured milestone events shared by every deepgraphlog component.

Events are routed through the structured logger (standard error) and kept in
the in-memory event store so reports and tests can read them back.
"""

from __future__ import annotations

import logging
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional

from logging_setup import get_logger

from .event_store import event_store


class Component(str, Enum):
    """Event-emitting components."""

    FRONTEND = "frontend"
    ENGINE = "engine"
    TRAINER = "trainer"
    EXPERIMENTS = "experiments"
    CLI = "cli"


class Severity(str, Enum):
    """Event severity levels."""

    DEBUG = "debug"
    INFO = "info"
    WARN = "warn"
    ERROR = "error"


_LOG_LEVELS = {
    Severity.DEBUG: logging.DEBUG,
    Severity.INFO: logging.INFO,
    Severity.WARN: logging.WARNING,
    Severity.ERROR: logging.ERROR,
}


class EventEmitter:
    """Emits structured milestone events."""

    def __init__(self, component: Component):
        self.component = component
        self._logger = get_logger(f"events.{component.value}")

    def emit(
        self,
        event_type: str,
        run_id: str,
        severity: Severity = Severity.INFO,
        correlation_id: Optional[str] = None,
        **kwargs: Any,
    ) -> Dict[str, Any]:
        event = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "run_id": run_id,
            "component": self.component.value,
            "event_type": event_type,
            "severity": severity.value,
            "correlation_id": correlation_id or run_id,
        }
        event.update(kwargs)

        self._logger.log(_LOG_LEVELS[severity], event_type, **{k: v for k, v in event.items() if k != "component"})
        event_store.store(event)
        return event

    def program_checked(self, run_id: str, source: str, statements: int, gnn_schemas: int) -> None:
        """Emit program.checked event."""
        self.emit("program.checked", run_id, source=source, statements=statements, gnn_schemas=gnn_schemas)

    def query_answered(self, run_id: str, result: Dict[str, Any]) -> None:
        """Emit query.answered event."""
        self.emit("query.answered", run_id, **result)

    def epoch_completed(self, run_id: str, epoch: int, loss: float, grad_norm: float) -> None:
        """Emit train.epoch_completed event."""
        self.emit("train.epoch_completed", run_id, severity=Severity.DEBUG, epoch=epoch, loss=loss, grad_norm=grad_norm)

    def training_aborted(self, run_id: str, epoch: int, reason: str) -> None:
        """Emit train.aborted event."""
        self.emit("train.aborted", run_id, severity=Severity.ERROR, epoch=epoch, reason=reason)

    def experiment_run_completed(self, run_id: str, experiment: str, seed: int, metrics: Dict[str, float]) -> None:
        """Emit experiment.run_completed event."""
        self.emit("experiment.run_completed", run_id, experiment=experiment, seed=seed, metrics=metrics)


engine_emitter = EventEmitter(Component.ENGINE)
trainer_emitter = EventEmitter(Component.TRAINER)
experiments_emitter = EventEmitter(Component.EXPERIMENTS)
cli_emitter = EventEmitter(Component.CLI)
