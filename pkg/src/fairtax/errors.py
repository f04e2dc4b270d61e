"""Exception hierarchy shared by all fairtax modules."""


class FairTaxError(Exception):
    """Base class for every error raised by this package."""


class InvalidGameError(FairTaxError, ValueError):
    pass


class InvalidAllocationError(FairTaxError, ValueError):
    pass


class DegenerateWeightError(FairTaxError, ValueError):
    pass


class PreconditionError(FairTaxError, ValueError):
    pass


class UndefinedFactorError(FairTaxError, ValueError):
    pass


class InfeasibleSolutionError(FairTaxError, ValueError):
    pass


class NumericRangeError(FairTaxError, ArithmeticError):
    pass


class ResourceLimitError(FairTaxError):
    """Work would exceed a configured enumeration or iteration cap."""


class CapExceededError(ResourceLimitError):
    pass


class BudgetExceededError(ResourceLimitError):
    """Column generation ran out of iterations.

    The best primal value and dual bound seen so far are attached so callers
    can decide whether the gap is acceptable anyway.
    """

    def __init__(self, message, primal=None, dual_bound=None):
        super().__init__(message)
        self.primal = primal
        self.dual_bound = dual_bound


class LPError(FairTaxError):
    pass


class InfeasibleLPError(LPError):
    pass


class UnboundedLPError(LPError):
    pass
