"""Exception types shared across the package."""


class WardflowError(Exception):
    """Base class for wardflow-specific failures."""


class FormatError(WardflowError):
    """Input bytes/text do not match the expected file format."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedError(WardflowError):
    """Well-formed input uses a feature outside the supported subset."""


class ValidationError(WardflowError):
    """Decoded data violates a domain invariant (range, finiteness, ...)."""
