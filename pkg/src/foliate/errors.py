"""Exception hierarchy shared by every module."""


class FoliateError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(FoliateError, ValueError):
    """Shapes of operands do not agree."""


class DomainError(FoliateError, ValueError):
    """An input lies outside the domain of the operation (non-finite, wrong algebra, bad parameter)."""


class CatalogueError(FoliateError, KeyError):
    """Unknown name looked up in one of the catalogues."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class StepError(FoliateError, ArithmeticError):
    """A single integration step failed.

    ``step_index`` is filled in by the trajectory driver when the failure
    happens inside a multi-step run.
    """

    step_index = None


class DivergenceError(StepError):
    """A stage or intermediate value became non-finite."""


class NonConvergenceError(StepError):
    """An implicit solve did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularLeafError(StepError):
    """The leaf-invariant gradient is rank deficient at the working point."""


class PrecisionFloorError(FoliateError, ArithmeticError):
    """An error measurement is below round-off, so no order can be read off."""
