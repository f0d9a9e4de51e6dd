"""Exception hierarchy shared by all levystop modules."""


class LevyStopError(Exception):
    """Base class for every error raised by levystop."""


class ArgumentError(LevyStopError, ValueError):
    """An argument is structurally invalid (wrong sign, unknown option, ...)."""


class DomainError(LevyStopError, ValueError):
    """A point lies outside the domain of the Laplace exponent."""


class ModelConditionError(LevyStopError, ValueError):
    """The process does not drift to -infinity, so its ultimate supremum is infinite."""


class DegenerateModelError(ModelConditionError):
    """Two exponents of the scale function coincide."""


class NumericsError(LevyStopError, ArithmeticError):
    """A quadrature or root search failed to reach its tolerance."""


class NotApplicable(LevyStopError):
    """The requested shortcut does not apply to the given penalty."""


class CaseOneError(LevyStopError):
    """No barrier exists: b does not exceed the threshold, stop immediately instead."""


class SimulationBudgetError(LevyStopError, RuntimeError):
    """A simulated path exceeded its event/step budget."""
