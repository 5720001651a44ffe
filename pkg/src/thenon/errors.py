"""Exception hierarchy shared by all modules.

Everything numerical derives from NumericalError so the CLI can map it
to a single exit code; bad user input derives from ValidationError.
"""


class ThenonError(Exception):
    pass


class ValidationError(ThenonError):
    """Malformed config, arguments, or domain-type invariant violation."""


class NumericalError(ThenonError):
    """A computation failed for numerical (not usage) reasons."""


class MagnitudeOverflow(NumericalError):
    """A value left the representable range (double exponential beyond
    log scale); signals the cascade depth limit."""


class ScanBudgetExceeded(NumericalError):
    """central_index found no decisive maximal term within budget."""


class SearchBudgetExceeded(NumericalError):
    """admissible_radius walked its full budget without success."""


class NoAdmissibleFrame(NumericalError):
    pass


class NoAdmissibleRadius(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class DerivativeVanishes(NumericalError):
    pass


class StepLeftDomain(NumericalError):
    pass


class OutsideDomain(NumericalError):
    pass


class BranchNewtonFailed(NumericalError):
    pass


class DepthUnrepresentable(NumericalError):
    """Cascade construction needs values beyond every log scale binary64
    can hold for this map."""


class PullbackOutsideDomain(NumericalError):
    pass


class NewtonFailed(NumericalError):
    """A fiber solve failed at a specific grid node."""

    def __init__(self, message, node_index=None):
        super().__init__(message)
        self.node_index = node_index


class ConeViolation(NumericalError):
    pass


class BudgetExceeded(NumericalError):
    pass
