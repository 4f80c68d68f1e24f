"""
Error taxonomy for deepgraphlog.

Every failure maps to a stable category string and, at the command line, to a
fixed exit code. Diagnostics are rendered as ``file:line:col: severity: message``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from logging_setup import Component, get_logger

logger = get_logger(Component.ERROR_HANDLER)


class ErrorCategory:
    """Stable error categories."""

    # Source text
    SYNTAX = "syntax.error"

    # Program checking
    ARITY_CONFLICT = "program.arity_conflict"
    DUPLICATE_DECLARATION = "program.duplicate_declaration"
    INVALID_PROBABILITY = "program.invalid_probability"
    UNKNOWN_MODEL = "program.unknown_model"
    UNBOUND_VARIABLE = "program.unbound_variable"
    STRATIFICATION_CYCLE = "program.stratification_cycle"
    INVALID_GAMMA = "program.invalid_gamma"
    RESERVED_NAME = "program.reserved_name"

    # Inference
    CAP_EXCEEDED = "inference.cap_exceeded"
    UNDEFINED_CONDITIONAL = "inference.undefined_conditional"
    NOT_GROUND = "inference.not_ground"

    # Graph neural runtime
    UNKNOWN_LABEL = "gnn.unknown_label"
    MISSING_TARGET = "gnn.missing_target"
    SHAPE_MISMATCH = "gnn.shape_mismatch"
    NON_FINITE = "gnn.non_finite"

    # Training / data / io
    NON_FINITE_LOSS = "training.non_finite_loss"
    INVALID_DATA = "data.invalid"
    IO = "io.error"
    UNKNOWN_EXPERIMENT = "experiment.unknown"

    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SourceLocation:
    """1-based position in a source file."""

    line: int
    column: int
    file: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.file or '<input>'}:{self.line}:{self.column}"


class DeepGraphLogError(Exception):
    """Base class for every domain error raised by the engine."""

    category: str = ErrorCategory.UNKNOWN

    def __init__(
        self,
        message: str,
        *,
        category: Optional[str] = None,
        location: Optional[SourceLocation] = None,
        token: Optional[str] = None,
    ):
        super().__init__(message)
        self.message = message
        if category is not None:
            self.category = category
        self.location = location
        self.token = token

    def with_file(self, file: str) -> "DeepGraphLogError":
        if self.location is not None and self.location.file is None:
            self.location = SourceLocation(self.location.line, self.location.column, file)
        return self

    def diagnostic(self, severity: str = "error", file: Optional[str] = None) -> str:
        """Render as ``file:line:col: severity: message``."""
        if self.location is not None:
            where = str(SourceLocation(self.location.line, self.location.column, self.location.file or file))
        else:
            where = f"{file or '<input>'}:0:0"
        text = self.message
        if self.token is not None:
            text = f"{text} (at {self.token!r})"
        return f"{where}: {severity}: {text}"


class ParseError(DeepGraphLogError):
    category = ErrorCategory.SYNTAX


class ProgramError(DeepGraphLogError):
    """Structural problem in a parsed program; the category says which."""


class StratificationError(ProgramError):
    category = ErrorCategory.STRATIFICATION_CYCLE

    def __init__(self, cycle: Sequence[str], message: Optional[str] = None):
        self.cycle = list(cycle)
        super().__init__(message or "gnn dependency cycle: " + " -> ".join(self.cycle))


class InferenceError(DeepGraphLogError):
    """Base for query-answering failures."""


class EnumerationCapError(InferenceError):
    category = ErrorCategory.CAP_EXCEEDED

    def __init__(self, count: int, cap: int, query: str = ""):
        self.count = count
        self.cap = cap
        subject = f"query {query}" if query else "query"
        super().__init__(f"{subject} has {count} relevant facts, above the enumeration cap of {cap}")


class UndefinedConditionalError(InferenceError):
    category = ErrorCategory.UNDEFINED_CONDITIONAL


class GnnRuntimeError(DeepGraphLogError):
    """Failure inside feature encoding, forward or backward."""


class TrainingError(DeepGraphLogError):
    category = ErrorCategory.NON_FINITE_LOSS

    def __init__(self, message: str, epoch: int):
        self.epoch = epoch
        super().__init__(message)


class DataError(DeepGraphLogError):
    category = ErrorCategory.INVALID_DATA


class UnknownExperimentError(DeepGraphLogError):
    category = ErrorCategory.UNKNOWN_EXPERIMENT


class ErrorHandler:
    """Maps errors to categories and exit codes; never raises."""

    _EXIT_CODES = {
        ErrorCategory.IO: 2,
        ErrorCategory.CAP_EXCEEDED: 3,
    }

    @staticmethod
    def classify_error(error: BaseException) -> str:
        """Classify any exception into a stable category string."""
        if isinstance(error, DeepGraphLogError):
            return error.category
        if isinstance(error, (OSError, UnicodeDecodeError)):
            return ErrorCategory.IO
        return ErrorCategory.UNKNOWN

    @staticmethod
    def exit_code(category: str) -> int:
        """0 ok / 1 domain error / 2 I/O / 3 resource refusal."""
        return ErrorHandler._EXIT_CODES.get(category, 1)

    @staticmethod
    def handle_error(
        error: BaseException,
        run_id: Optional[str] = None,
        source: Optional[str] = None,
    ) -> str:
        """
        Log the error as a diagnostic and return its category.
        Does NOT raise - always returns a category.
        """
        category = ErrorHandler.classify_error(error)
        if isinstance(error, DeepGraphLogError):
            text = error.diagnostic(file=source)
        else:
            text = f"{source or '<input>'}:0:0: error: {error}"
        log = logger.with_run(run_id) if run_id else logger
        log.error(text, category=category)
        return category
