"""Exception taxonomy shared across the pipeline.

Every error class maps to a CLI exit-code family so batch invocations can be
triaged from shell scripts without reading logs.
"""


class OmpWorldError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class ConfigError(OmpWorldError):
    exit_code = 2


class EndpointError(OmpWorldError):
    """Remote model endpoint failed after retry exhaustion."""

    exit_code = 3


class ContextOverflow(EndpointError):
    """Prompt exceeds the endpoint's context window."""


class ToolchainError(OmpWorldError):
    exit_code = 4


class CompileError(ToolchainError):
    def __init__(self, message, log=""):
        super().__init__(message)
        self.log = log


class ToolTimeout(ToolchainError):
    pass


class RuntimeCrash(ToolchainError):
    def __init__(self, message, output=""):
        super().__init__(message)
        self.output = output


class RegionError(ToolchainError):
    pass


class SpanOutOfRange(ToolchainError):
    pass


class ProfileMissing(ToolchainError):
    pass


class FormatError(OmpWorldError):
    exit_code = 5


class JsonError(FormatError):
    pass


class SignatureError(FormatError):
    pass


class GenerationError(OmpWorldError):
    exit_code = 3


class InsufficientCandidates(OmpWorldError):
    pass


class InsufficientSolutions(OmpWorldError):
    pass


class TargetExceedsAvailable(OmpWorldError):
    pass
