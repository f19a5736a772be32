"""Exception hierarchy shared by the library and the command-line front end."""


class CoherenceLabError(Exception):
    """Base class for every error raised by coherence-lab."""


class DomainError(CoherenceLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnderResolvedError(DomainError):
    """Integrator step too coarse for the pulse width."""


class IntegrationError(CoherenceLabError):
    """The integrated Bloch vector left the unit ball."""


class DegenerateScaleError(CoherenceLabError):
    """The measured tail cannot be matched to the simulated anchor value."""

    def __init__(self, message: str, scale: float = 0.0):
        super().__init__(message)
        self.scale = scale


class UnfittableTraceError(CoherenceLabError):
    """A measured trace cannot be fit (too few points, no tail, all cells degenerate)."""


class UsageError(CoherenceLabError):
    """Command line does not match the subcommand grammar."""


class TraceFormatError(CoherenceLabError):
    """A trace file does not match the expected text format."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyTraceFileError(TraceFormatError):
    pass


class MalformedHeaderError(TraceFormatError):
    pass


class MalformedRowError(TraceFormatError):
    pass


class NonNumericFieldError(TraceFormatError):
    pass


class NonIncreasingDelayError(TraceFormatError):
    pass


class StaleInputError(CoherenceLabError):
    """An input recorded in a run manifest has changed or disappeared."""
