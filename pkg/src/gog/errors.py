"""Exception hierarchy for the graph-of-graphs package."""


class GoGError(Exception):
    """Base class for all package errors."""


class DimensionError(GoGError, ValueError):
    pass


class ZeroVarianceColumn(GoGError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} is constant")


class DegenerateSpectrum(GoGError, ArithmeticError):
    pass


class EmptyCenters(GoGError, ValueError):
    pass


class NonPositiveDeterminant(GoGError, ArithmeticError):
    pass


class SingularLaplacian(GoGError, ArithmeticError):
    pass


class NonPositiveDefinite(GoGError, ArithmeticError):
    pass


class InvalidDegreesOfFreedom(GoGError, ValueError):
    pass


class ModeNotFound(GoGError, ArithmeticError):
    pass


class NotDecomposable(GoGError, ValueError):
    pass


class UnreachableProposal(GoGError, RuntimeError):
    pass


class ConfigError(GoGError, ValueError):
    pass


class EmptySamples(GoGError, ValueError):
    pass


class LengthMismatch(GoGError, ValueError):
    pass


class DegenerateTruth(GoGError, ValueError):
    pass


class TooLarge(GoGError, ValueError):
    pass


class ParseError(GoGError, ValueError):
    pass
