"""Exception and warning types shared across omx."""


class OmxError(Exception):
    """Base class for all omx errors."""


class ModelValidationError(OmxError, ValueError):
    """Raised by :func:`omx.system_model.validate` with every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(str(v) for v in self.violations)
        super().__init__(msg)


class NonPositiveLength(OmxError, ValueError):
    pass


class NegativeLinewidth(OmxError, ValueError):
    pass


class NonPositiveParameter(OmxError, ValueError):
    pass


class EigensolverFailure(OmxError, RuntimeError):
    pass


class InvalidRingParameters(OmxError, ValueError):
    pass


class OutOfDomain(OmxError, ValueError):
    pass


class SingularResponse(OmxError, ArithmeticError):
    pass


class QuadratureFailure(OmxError, RuntimeError):
    pass


class ZeroLinewidth(OmxError, ValueError):
    pass


class TuningViolation(OmxError, ValueError):
    pass


class IntegrationFailure(OmxError, RuntimeError):
    pass


class FitFailure(OmxError, RuntimeError):
    pass


class ParseError(OmxError, ValueError):
    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class ConfigValidationError(OmxError, ValueError):
    def __init__(self, reason, violations=()):
        self.violations = list(violations)
        super().__init__(reason)


class LinearizationWarning(UserWarning):
    """Displacement too large for the first-order mode-mixing map."""


class RegimeViolation(UserWarning):
    """A closed form is used outside its stated approximation regime."""
