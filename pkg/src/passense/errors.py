"""Exception types shared across the package."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A config value or combination of values is invalid or unsatisfiable."""


class CoincidentTargetError(ValueError):
    """A target coincides with a radiating or receiving element (zero range)."""


class UnidentifiableSceneError(RuntimeError):
    """The Fisher information for a scene is singular or too ill conditioned.

    Carries the offending minimum eigenvalue (of the scaled Fisher block that
    failed the check) in :attr:`min_eigenvalue`.
    """

    def __init__(self, message: str, min_eigenvalue: float = float("nan")):
        super().__init__(message)
        self.min_eigenvalue = float(min_eigenvalue)


class OptimizationFailedError(RuntimeError):
    """A search produced no identifiable candidate at all.

    :attr:`diagnostics` holds a small dict describing the failed run.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NotConvergedError(RuntimeError):
    """An iterative solver stopped without reaching its target accuracy.

    :attr:`best` holds the best iterate found so far (type depends on caller).
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best
