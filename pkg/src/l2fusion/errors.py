"""Exception hierarchy shared by all modules."""


class L2FusionError(ValueError):
    """Base class for domain errors raised by this package."""


class NotHermitian(L2FusionError):
    pass


class NoConvergence(L2FusionError):
    pass


class NotPSD(L2FusionError):
    pass


class NotPositive(L2FusionError):
    pass


class NotPositiveDefinite(L2FusionError):
    pass


class DimensionMismatch(L2FusionError):
    pass


class AlgebraMismatch(L2FusionError):
    pass


class NotProjection(L2FusionError):
    pass


class NotUnital(L2FusionError):
    pass


class NotFaithful(L2FusionError):
    pass


class NotInjective(L2FusionError):
    pass


class LinearityMismatch(L2FusionError):
    pass


class LinearityViolation(L2FusionError):
    pass


class ZigzagViolation(L2FusionError):
    pass


class SingularState(L2FusionError):
    pass


class NotNormalized(L2FusionError):
    pass


class ZeroModule(L2FusionError):
    pass


class InconsistentExtension(L2FusionError):
    pass


class ConfigurationInvalid(L2FusionError):
    pass


class EvaluationError(L2FusionError):
    pass


class DiagramSyntaxError(SyntaxError):
    """Malformed diagram text; carries 1-based ``line`` and ``column``."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DiagramTypeError(TypeError):
    """Ill-typed diagram term; ``node`` is the offending subterm."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node
