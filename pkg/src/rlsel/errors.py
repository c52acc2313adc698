"""Exception hierarchy shared by all rlsel modules."""


class RlselError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RlselError):
    """A parameter value is outside its valid range (sigma <= 0, m = 0, ...)."""


class ConfigurationError(RlselError):
    """Inputs are individually valid but inconsistent with each other or with
    the requested operation (e.g. representativeness requested on grad-less
    data, score table missing ids, malformed pipeline config)."""


class DatasetError(RlselError):
    """A dataset file or record failed to parse or validate.

    ``line`` carries the 1-based line number when the failure is tied to a
    specific JSONL line.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StageError(RlselError):
    """A pipeline stage failed; wraps the original error with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause
