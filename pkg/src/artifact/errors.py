"""Error types raised across the package."""


class ArtifactError(Exception):
    """Base class for all package errors."""


class NormMismatch(ArtifactError):
    pass


class OrthantViolation(ArtifactError):
    pass


class BetaNormViolation(ArtifactError):
    pass


class RejectionBudgetExceeded(ArtifactError):
    pass


class UnsupportedKind(ArtifactError):
    pass


class OutOfDomain(ArtifactError):
    pass


class InfeasibleScale(ArtifactError):
    pass


class BackendBudgetExceeded(ArtifactError):
    pass


class ZeroDenominator(ArtifactError):
    pass


class ToleranceTooLarge(ArtifactError):
    pass


class AssumptionAuditFailed(ArtifactError):
    pass


class AmplificationExhausted(ArtifactError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


class MissingCoordinate(ArtifactError):
    pass


class QuadratureFailure(ArtifactError):
    pass


class NonConvergence(ArtifactError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


class FeasibilityError(ArtifactError):
    def __init__(self, msg, quantity=None, value=None, limit=None):
        super().__init__(msg)
        self.quantity = quantity
        self.value = value
        self.limit = limit


class IoError(ArtifactError):
    pass
