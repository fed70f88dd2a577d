"""Damped second order systems ẍ + βẋ = f(x) in ℝᵏ, written on ℝᵏ × ℝᵏ

The nonlinear part (0, f(x)) has a derivative of rank at most k, which bounds the attractor dimension by k.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from loguru import logger

from dimbound.exception import ConfigurationError, InvalidInputError
from dimbound.systems import DynamicalSystem, register_system
from dimbound.utils.sampling import sphere_directions

DISSIPATIVITY_SAMPLES = 256


@dataclass(frozen=True)
class Nonlinearity:
    """A force f: ℝᵏ → ℝᵏ with its derivative, both batch capable"""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]


Force = tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]


def _cubic_value(x: np.ndarray) -> np.ndarray:
    return x - np.sum(x**2, axis=-1, keepdims=True) * x


def _cubic_derivative(x: np.ndarray) -> np.ndarray:
    k = x.shape[-1]
    radial = (1 - np.sum(x**2, axis=-1))[..., None, None] * np.eye(k)
    return radial - 2 * x[..., :, None] * x[..., None, :]


def _linear_derivative(x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(-np.eye(x.shape[-1]), (*x.shape, x.shape[-1]))


NONLINEARITIES = {
    "cubic": Nonlinearity("cubic", _cubic_value, _cubic_derivative),
    "linear": Nonlinearity("linear", np.negative, _linear_derivative),
}
"""f(x) = x − ‖x‖²x (x − x³ for k = 1) and f(x) = −x"""


def _as_nonlinearity(f: str | Force | Nonlinearity, k: int) -> Nonlinearity:
    if isinstance(f, Nonlinearity):
        return f
    if isinstance(f, str):
        if f not in NONLINEARITIES:
            raise ConfigurationError(text=f"Unknown force '{f}', expected one of {sorted(NONLINEARITIES)}")
        return NONLINEARITIES[f]
    if not (isinstance(f, (tuple, list)) and len(f) == 2 and all(callable(part) for part in f)):
        raise ConfigurationError(text=f"A force is a name or a pair (f, f′) of callables, got {f!r}")
    value, derivative = f

    def jacobian(x: np.ndarray) -> np.ndarray:
        return np.reshape(derivative(x), (*np.shape(x)[:-1], k, k))

    return Nonlinearity("custom", value, jacobian)


def dissipativity_violations(nonlinearity: Nonlinearity, k: int, radius: float, seed: int = 0) -> int:
    """Number of sampled x with ‖x‖ in [radius, 4·radius] and f(x)·x >= 0"""
    directions = sphere_directions(DISSIPATIVITY_SAMPLES, k, seed)
    points = np.concatenate([scale * radius * directions for scale in (1.0, 1.5, 2.0, 4.0)])
    return int(np.sum(np.sum(nonlinearity.value(points) * points, axis=-1) >= 0))


@register_system(name="damped_coupled")
def damped_coupled_system(
    k: int = 1, beta: float = 1.0, f: str | Force | Nonlinearity = "cubic", radius: float = 2.0
) -> DynamicalSystem:
    """d/dt(x, y) = (y, −βy + f(x))

    Args:
        k: dimension of the position x
        beta: damping, positive
        f: name of the force, ``cubic`` or ``linear``, or a pair (f, f′) of batch callables where f′ returns the
            k×k Jacobians (for k = 1 the derivative values suffice)
        radius: M in the dissipativity condition f(x)·x < 0 for ‖x‖ >= M

    Returns:
        The 2k-dimensional system

    Raises:
        InvalidInputError: if k < 1 or β <= 0
        ConfigurationError: if the force is unknown or not a callable pair

    Example:
    >>> system = damped_coupled_system(1, 1.0, "cubic")
    >>> system.vector_field(np.array([[2.0, 1.0]])).tolist()
    [[1.0, -7.0]]
    >>> quintic = damped_coupled_system(1, 1.0, (lambda x: x - x**5, lambda x: 1 - 5 * x**4))
    >>> quintic.jacobian(np.array([[1.0, 0.0]])).tolist()
    [[[0.0, 1.0], [-4.0, -1.0]]]
    """
    if k < 1 or beta <= 0:
        raise InvalidInputError(text=f"Need k >= 1 and β > 0, got k={k}, β={beta}")
    nonlinearity = _as_nonlinearity(f, k)
    if violations := dissipativity_violations(nonlinearity, k, radius):
        logger.warning(
            f"f(x)·x >= 0 at {violations} sampled points with ‖x‖ >= {radius}: the absorbing set is not guaranteed"
        )

    def vector_field(z: np.ndarray) -> np.ndarray:
        x, y = z[..., :k], z[..., k:]
        return np.concatenate([y, -beta * y + nonlinearity.value(x)], axis=-1)

    def nonlinear_jacobian(z: np.ndarray) -> np.ndarray:
        result = np.zeros((*z.shape[:-1], 2 * k, 2 * k))
        result[..., k:, :k] = nonlinearity.derivative(z[..., :k])
        return result

    linear_part = np.block([[np.zeros((k, k)), np.eye(k)], [np.zeros((k, k)), -beta * np.eye(k)]])

    return DynamicalSystem(
        name="damped_coupled",
        state_dim=2 * k,
        vector_field=vector_field,
        jacobian=lambda z: linear_part + nonlinear_jacobian(z),
        nonlinear_jacobian=nonlinear_jacobian,
        metadata={"k": k, "beta": beta, "f": nonlinearity.name, "radius": radius},
    )
