"""Exception types shared across the package.

Every error raised by the library derives from :class:`GameError` so callers
can catch one base class. Validation errors carry enough structure for the
CLI to print field-level diagnostics and pick the right exit code.
"""

from __future__ import annotations


class GameError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(GameError):
    """Vector lengths disagree (plays vs environments, points vs spaces)."""


class RegionViolationError(GameError):
    """A mixture play falls outside its declared coefficient region."""


class SolverFailureError(GameError):
    """An optimization routine failed to reach its tolerance.

    Carries the partial solver report (if any) so callers can inspect the
    residual that was actually achieved.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(GameError):
    """Scenario configuration is invalid.

    ``problems`` is a list of ``(field_path, message)`` pairs, one per
    offending key, so a single run reports every problem at once.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class DataCorruptionError(GameError):
    """Recorded game data is internally inconsistent."""
