"""Exception types shared across the package."""


class EmptyDatasetError(ValueError):
    """An operation that needs at least one data point received none."""


class IllConditionedGramError(RuntimeError):
    """Cholesky factorization of the Gram matrix failed.

    Typically caused by duplicate (or nearly duplicate) points combined with
    zero jitter.  The message names the offending configuration.
    """


class TrajectoryDivergedError(RuntimeError):
    """A simulated state became non-finite.

    Attributes
    ----------
    step : int
        Time index of the first non-finite state.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"trajectory diverged: non-finite state at step {step}")


class IntegrationDivergedError(RuntimeError):
    """An integrator stage produced a non-finite intermediate value."""


class JacobiansUnavailableError(RuntimeError):
    """Analytic derivatives were requested from a model that does not provide them."""


class HorizonError(ValueError):
    """A signal was evaluated at a time index outside its declared horizon."""


class ConfigurationError(ValueError):
    """Experiment configuration is invalid.

    Attributes
    ----------
    problems : list[str]
        Every violation found, not just the first.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


class DatasetParseError(ValueError):
    """A dataset file could not be parsed.

    Attributes
    ----------
    line : int | None
        1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
