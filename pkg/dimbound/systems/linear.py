import numpy as np

from dimbound.exception import InvalidInputError
from dimbound.systems import DynamicalSystem, register_system


@register_system()
def linear(matrix: list[list[float]]) -> DynamicalSystem:
    """ẋ = Ax; its time-T derivative is e^(AT) everywhere"""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(text=f"A linear system needs a square matrix, got shape {a.shape}")
    d = a.shape[0]
    return DynamicalSystem(
        name="linear",
        state_dim=d,
        vector_field=lambda x: x @ a.T,
        jacobian=lambda x: np.broadcast_to(a, (*x.shape[:-1], d, d)),
        nonlinear_jacobian=lambda x: np.zeros((*x.shape[:-1], d, d)),
        metadata={"matrix": a.tolist()},
    )


@register_system()
def decay(dim: int = 1, rate: float = 1.0) -> DynamicalSystem:
    """ẋ = −rate·x, whose global attractor is the origin"""
    if rate <= 0:
        raise InvalidInputError(text=f"The decay rate must be positive, got {rate}")
    system = linear((-rate * np.eye(dim)).tolist())
    return DynamicalSystem(
        name="decay",
        state_dim=dim,
        vector_field=system.vector_field,
        jacobian=system.jacobian,
        nonlinear_jacobian=system.nonlinear_jacobian,
        metadata={"dim": dim, "rate": rate},
    )
