"""Semantic exception hierarchy shared by all modules."""

from __future__ import annotations


class SdPoissonError(Exception):
    """Base error for this package."""


class DomainError(SdPoissonError, ValueError):
    """An argument violates its documented domain (range, ordering, region)."""


class PathExhaustedError(SdPoissonError):
    """A counting query lies at or beyond the last simulated arrival.

    The count at such a time would be censored by the finite simulation
    horizon, so it is refused rather than silently extended.
    """


class IntegrationError(SdPoissonError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best available estimate and its error bound so callers can
    decide whether to accept a degraded result.
    """

    def __init__(self, message: str, best_estimate: float, error_bound: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_bound = error_bound


class ConsistencyError(SdPoissonError):
    """Two routes that must agree (closed form vs oracle) disagree."""
