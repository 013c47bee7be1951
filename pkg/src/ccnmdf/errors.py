"""Exception hierarchy shared by the library and the command line driver."""


class NMDFError(Exception):
    """Base class for all errors raised by ccnmdf."""

    #: process exit code used by the CLI when this error escapes a command
    exit_code = 2


class InvalidInput(NMDFError, ValueError):
    pass


class ShapeMismatch(NMDFError, ValueError):
    pass


class NotPositiveDefinite(NMDFError, ValueError):
    pass


class InvalidLayout(NMDFError, ValueError):
    pass


class ParseError(NMDFError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class VersionError(NMDFError):
    pass


class NumericalError(NMDFError):
    exit_code = 3


class SolverFailure(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class DegenerateFactor(NumericalError):
    pass


class DegenerateFactorWarning(UserWarning):
    pass


class DeadColumnWarning(UserWarning):
    pass
