class ConfigurationError(ValueError):
    """Inconsistent or invalid inputs (schedules, horizons, configs)."""


class InsufficientDataError(ValueError):
    pass


class TrainingError(RuntimeError):
    """NARX training diverged or saw non-finite data."""

    def __init__(self, message, seed=None):
        if seed is not None:
            message = f"{message} (seed={seed})"
        super().__init__(message)
        self.seed = seed


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.path = path
        self.line = line
