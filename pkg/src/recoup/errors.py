"""Exception types shared across the package."""

from __future__ import annotations


class RecoupError(Exception):
    """Base class for all package-specific errors."""


class SpecViolationError(RecoupError):
    """An intensity specification broke one of its invariants (negative or
    non-finite hazard sample, atom bookkeeping, ...)."""


class AdmissibilityError(RecoupError):
    """The intensity does not accumulate infinite mass: F(s) does not reach 1."""


class ConditioningError(RecoupError):
    """Conditioning on an event of probability zero (elapsed time beyond support)."""


class InfiniteMomentError(RecoupError):
    """A requested moment integral failed to converge."""


class EnvelopeViolationError(RecoupError):
    """A generated hazard left its declared envelope band."""

    def __init__(self, message: str, period_index: int | None = None, at: float | None = None):
        super().__init__(message)
        self.period_index = period_index
        self.at = at


class MajorantViolationError(RecoupError):
    """Actual total event intensity exceeded the declared majorant."""


class CouplingUnboundedError(RecoupError):
    """No finite coupling-epoch moment bound can be certified (per-attempt
    failure probability reached 1, or a required moment is infinite)."""


class InsufficientDataError(RecoupError):
    """Not enough observed events to compute the requested statistic."""


class ConfigError(RecoupError):
    """An experiment configuration is malformed or inconsistent."""
