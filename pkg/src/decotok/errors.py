"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes (validation = 2, I/O = 3,
numeric failure = 4), so raise the most specific class that applies.
"""


class DecotokError(Exception):
    """Base class for all package errors."""


class ValidationError(DecotokError):
    """Bad configuration, incompatible shapes, or out-of-range values."""


class ConfigError(ValidationError):
    """Configuration file problem; carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class FormatError(DecotokError):
    """Malformed or truncated file (container, vocabulary, checkpoint...)."""


class NumericsError(DecotokError):
    """Non-finite loss or other numeric breakdown; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
