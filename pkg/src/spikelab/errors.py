"""Exception hierarchy. Numerical failures map to CLI exit code 3, config errors to 2."""

from __future__ import annotations


class SpikelabError(Exception):
    """Base class for all package errors."""


class ConfigError(SpikelabError, ValueError):
    """Invalid user input: malformed config, bad shapes, out-of-domain parameters."""


class NumericalError(SpikelabError, ArithmeticError):
    """A computation could not be carried out in the requested regime."""


class SubcriticalError(NumericalError):
    """A spike or sample eigenvalue is not separated from the bulk edge."""


class OverlappingSpikesError(NumericalError):
    """Two spikes coincide while the formula needs them distinct."""


class NotPSDError(NumericalError):
    """A covariance matrix has a negative eigenvalue beyond tolerance."""
