# errors.py


class CzreachError(Exception):
    """Base class for every error raised by the library."""


class DimensionMismatch(CzreachError, ValueError):
    pass


class NumericalFailure(CzreachError):
    pass


class EmptySet(CzreachError):
    pass


class DivisionByZeroInterval(CzreachError, ZeroDivisionError):
    pass


class ExprSyntaxError(CzreachError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownVariable(CzreachError):
    pass


class SchemaError(CzreachError):
    pass


class DimensionChainError(CzreachError, ValueError):
    pass


class IndexOutOfRange(CzreachError, IndexError):
    pass


class PrefixViolation(CzreachError):
    """Output generators do not start with the input set's generators."""


class MemberExplosion(CzreachError):
    pass


class GammaOutsideHull(CzreachError):
    pass


class MethodMismatch(CzreachError):
    pass


class SamplingStarvation(CzreachError):
    pass


class ScenarioError(CzreachError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class DimensionError(CzreachError, ValueError):
    pass
