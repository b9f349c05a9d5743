"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2, OracleError -> 3,
anything else derived from ExplainerError -> 4.
"""

from __future__ import annotations


class ExplainerError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ExplainerError):
    """Invalid configuration: unknown scheme/dataset, bad flag value, bad file."""


class InputError(ExplainerError):
    """A well-formed call with arguments that violate a precondition."""


class OracleError(ExplainerError):
    """The black-box model failed or replied with garbage."""

    def __init__(self, message: str, raw: str | None = None, rows_completed: int | None = None):
        super().__init__(message)
        self.raw = raw
        self.rows_completed = rows_completed


class PipelineError(ExplainerError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class CycleError(InputError):
    """An edit would introduce a directed cycle."""
