"""Nodal eigencurves of -D^2 - lambda m(x) on (0, 1) and bifurcation of nodal
solutions of -u'' - mu u = lambda m(x) u - a(x) u^2 with Dirichlet conditions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ConsistencyError,
    DivergenceError,
    DomainError,
    NodalBifError,
    NumericalError,
    PreconditionError,
    RangeTooSmallError,
    SingularityError,
    TransversalityError,
)
from .weights import WeightFunction, constant, paper_a, sine, tabulated  # noqa: E402

__all__ = [
    "__version__",
    "ConfigurationError",
    "ConsistencyError",
    "DivergenceError",
    "DomainError",
    "NodalBifError",
    "NumericalError",
    "PreconditionError",
    "RangeTooSmallError",
    "SingularityError",
    "TransversalityError",
    "WeightFunction",
    "constant",
    "paper_a",
    "sine",
    "tabulated",
]
