"""Shared exception hierarchy.

Every module-specific error derives from PatchwrightError so callers can
catch the whole family at pipeline boundaries without masking real bugs.
"""

from __future__ import annotations


class PatchwrightError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PatchwrightError):
    """An argument fell outside its mathematical domain."""


class InvalidOutcome(PatchwrightError):
    """Test outcomes are malformed (e.g. nothing to fix)."""


class PathError(PatchwrightError):
    """A path escapes its allowed root or does not exist."""


class ConfigError(PatchwrightError):
    """Configuration is inconsistent or unusable."""
