"""Exception types shared across the package."""


class RegionError(ValueError):
    """A region argument names unknown labels, overlaps another region, or is empty."""


class DomainError(ValueError):
    """An operator fails its mathematical preconditions (hermiticity, spectrum, trace)."""


class CapacityError(ValueError):
    """Input exceeds a documented size limit (dense conversion, ancilla embedding)."""


class ConfigError(ValueError):
    """An optimizer or scan configuration is internally inconsistent."""


class ParseError(ValueError):
    """A state or tableau file is malformed.

    Carries best-effort location info in ``line`` / ``offset`` when available.
    """

    def __init__(self, message, line=None, offset=None):
        self.line = line
        self.offset = offset
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class VersionError(ValueError):
    """A report file does not match the expected schema version or source state."""
