"""Exception hierarchy shared by every module of the package."""


class BianchiFlowError(Exception):
    """Base class for all package errors."""


class InvalidInput(BianchiFlowError, ValueError):
    """Non-positive coefficients, malformed configs, disallowed orderings."""


class NormalizationViolation(BianchiFlowError):
    """The product A*B*C drifted away from the flow's volume constraint."""


class DomainError(BianchiFlowError, ValueError):
    """A closed-form solution was evaluated outside its maximal interval."""


class InconsistentInitialData(BianchiFlowError, ValueError):
    pass


class UnknownCase(BianchiFlowError, KeyError):
    pass


class InsufficientData(BianchiFlowError):
    """Too few samples in the asymptotic window to fit or extrapolate."""


class WrongCase(BianchiFlowError):
    """The trajectory is not in the asymptotic regime the analysis assumes."""


class SameLabel(BianchiFlowError):
    """Both bisection endpoints carry the same classification label."""
