"""Exception types shared across the package."""


class NodalBifError(Exception):
    """Base class for all errors raised by nodalbif."""


class ConfigurationError(NodalBifError, ValueError):
    pass


class DomainError(NodalBifError, ValueError):
    pass


class PreconditionError(NodalBifError, ValueError):
    pass


class ConsistencyError(NodalBifError):
    """A computed quantity violates a structural property (e.g. Sturm node count)."""


class NumericalError(NodalBifError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(NumericalError):
    def __init__(self, message, last_iterate=None, history=()):
        super().__init__(message, residual=history[-1] if history else None)
        self.last_iterate = last_iterate
        self.history = list(history)


class SingularityError(NumericalError):
    """Bordered Newton system is singular, typically at a bifurcation point."""


class RangeTooSmallError(NodalBifError):
    pass


class TransversalityError(NodalBifError):
    pass
