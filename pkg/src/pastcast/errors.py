"""Exception types shared across the package."""


class PastcastError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PastcastError):
    """A caller-supplied value is malformed (wrong shape, range, or type)."""


class ConfigError(PastcastError):
    """An experiment configuration or schedule failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class InsufficientDataError(PastcastError):
    """The path was too short to complete the requested recurrence search.

    Carries how many recurrences were actually found so callers can fall
    back to a default or report partial results.
    """

    def __init__(self, requested: int, achieved: int, message: str = ""):
        self.requested = requested
        self.achieved = achieved
        detail = message or (
            f"found {achieved} of {requested} requested pattern recurrences"
        )
        super().__init__(detail)


class UnsupportedQueryError(PastcastError):
    """The oracle cannot answer this query exactly (e.g. a zero-probability
    pattern, or a closed form that does not exist for this source kind)."""
