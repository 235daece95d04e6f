"""Exception types shared across the package."""


class GraphParseError(ValueError):
    """Malformed graph or config text. Carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResourceLimitError(RuntimeError):
    """An exact computation was asked to run beyond its hard size cap."""


class DecodeError(RuntimeError):
    """Base class for decoder failures."""


class AmbiguousDecode(DecodeError):
    def __init__(self, candidates):
        self.candidates = candidates
        super().__init__(f"{len(candidates)} typical graphs match the received bins")


class NotFoundDecode(DecodeError):
    def __init__(self):
        super().__init__("no typical graph matches the received bins")
