"""Exceptions raised when a computation is rejected or cannot certify its result"""

from dataclasses import dataclass, field
from typing import Any


@dataclass
class DimboundError(Exception):
    """Generic error when validating inputs, constructing covers or evaluating bounds"""

    def dict(self) -> dict[str, Any]:
        return {"error": type(self).__name__, "text": self.message()}

    def message(self) -> str:
        return "Unexpected error"

    def __post_init__(self):
        super().__init__(self.message())


@dataclass
class InvalidInputError(DimboundError):
    """A precondition of an operation is violated"""

    text: str

    def message(self):
        return self.text


@dataclass
class DegenerateBoundError(InvalidInputError):
    """The contraction budget is too large for the dimension bound to be finite

    E.g., 2λ >= 1 in the Mañé-type bound, where -log(2λ) <= 0
    """


@dataclass
class ConfigurationError(InvalidInputError):
    """Experiment configuration is invalid or refers to unknown systems"""


@dataclass
class NumericalFailure(DimboundError):
    """The computation ran but could not certify its result"""

    text: str

    def message(self):
        return self.text


@dataclass
class AuerbachConstructionError(NumericalFailure):
    """Determinant maximization did not reach the residual tolerances"""

    duality_residual: float = float("nan")
    functional_norm_excess: float = float("nan")

    def message(self):
        return (
            f"{self.text} (duality residual {self.duality_residual:.3e}, "
            f"functional norm excess {self.functional_norm_excess:.3e})"
        )

    def dict(self):
        result = super().dict()
        result["duality_residual"] = self.duality_residual
        result["functional_norm_excess"] = self.functional_norm_excess
        return result


@dataclass
class NuLambdaSearchError(NumericalFailure):
    """No subspace of dimension <= m approximates the image of the unit ball well enough"""

    distances: list[float] = field(default_factory=list)

    def dict(self):
        result = super().dict()
        result["distances"] = self.distances
        return result


@dataclass
class ThresholdNotReachedError(NumericalFailure):
    """No projection index brings the tail estimate below the threshold"""

    tail_values: list[float] = field(default_factory=list)

    def message(self):
        table = ", ".join(f"{value:.4g}" for value in self.tail_values)
        return f"{self.text}; tail estimates per projection index: [{table}]"

    def dict(self):
        result = super().dict()
        result["tail_values"] = self.tail_values
        return result


@dataclass
class DivergenceError(NumericalFailure):
    """Integration produced a non-finite or unbounded state"""

    time: float = float("nan")
    state_norm: float = float("nan")

    def message(self):
        return f"{self.text} at t={self.time:.6g} (state norm {self.state_norm:.6g})"

    def dict(self):
        result = super().dict()
        result["time"] = self.time
        result["state_norm"] = self.state_norm
        return result


@dataclass
class CoverageError(NumericalFailure):
    """A cover failed its coverage certificate"""

    worst_distance: float = float("nan")
    radius: float = float("nan")

    def message(self):
        return f"{self.text}: probe at distance {self.worst_distance:.6g} exceeds radius {self.radius:.6g}"
