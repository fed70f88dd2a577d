"""Dynamical systems ẋ = f(x), their time-T maps, derivative maps and attractor samples

Every vector field and Jacobian acts on batches: a state array of shape (..., d) maps to (..., d) and (..., d, d).
Systems are looked up by name from a registry that the submodules fill with :func:`register_system`.

Example:
>>> system = build_system("decay", {"dim": 1})
>>> trajectory = simulate(system, [1.0], T=1.0, dt=1e-3)
>>> bool(abs(trajectory.final[0] - np.exp(-1)) < 1e-8)
True
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
from loguru import logger
from scipy.linalg import orth

from dimbound.exception import ConfigurationError, DivergenceError, InvalidInputError
from dimbound.norms import NormDescriptor, PointCloud, hausdorff_semidist
from dimbound.utils.sampling import DEFAULT_SEED, halton, sphere_directions

if TYPE_CHECKING:
    from dimbound.systems.chafee_infante import GalerkinParabolic

Field = Callable[[np.ndarray], np.ndarray]

DIVERGENCE_LIMIT = 1e8
RK4_STABILITY_LIMIT = 2.78
"""|hλ| beyond which classical RK4 is unstable on the negative real axis."""


@dataclass(frozen=True, eq=False)
class DynamicalSystem:
    """An autonomous system ẋ = f(x) on ℝᵈ

    Attributes:
        name: registry name
        state_dim: the dimension d
        vector_field: f, batch capable
        jacobian: D_x f, batch capable
        nonlinear_jacobian: derivative of f minus its linear part, whose rank feeds the rank limit bound
        norm: the norm of the state space, ℓ² when omitted
        spread: half width of the box holding the initial grid of :func:`sample_attractor`
        model: the spectral model when the system is a Galerkin truncation
        metadata: parameters the system was built from
    """

    name: str
    state_dim: int
    vector_field: Field
    jacobian: Field
    nonlinear_jacobian: Field | None = None
    norm: NormDescriptor | None = None
    spread: float = 2.0
    model: GalerkinParabolic | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def nd(self) -> NormDescriptor:
        return self.norm if self.norm is not None else NormDescriptor.l2(self.state_dim)

    def rank_jacobian(self, points: np.ndarray) -> np.ndarray:
        """The derivatives whose rank bounds the dimension: the nonlinear part when it is known"""
        points = np.atleast_2d(points)
        return self.nonlinear_jacobian(points) if self.nonlinear_jacobian else self.jacobian(points)


_SYSTEMS: dict[str, Callable[..., DynamicalSystem]] = {}


def register_system(name: str | None = None):
    """Decorator registering a factory of dynamical systems under a name

    Args:
        name: the registry name, by default the factory's ``__name__``

    Returns:
        The decorator
    """

    def decorator(factory: Callable[..., DynamicalSystem]) -> Callable[..., DynamicalSystem]:
        _SYSTEMS[name or factory.__name__] = factory
        return factory

    return decorator


def system_names() -> list[str]:
    return sorted(_SYSTEMS)


def build_system(name: str, parameters: dict[str, Any] | None = None) -> DynamicalSystem:
    """Builds a registered system from its JSON parameter block

    Raises:
        ConfigurationError: if the name is unknown or the parameters do not fit the factory
    """
    if name not in _SYSTEMS:
        raise ConfigurationError(text=f"Unknown system '{name}', expected one of {system_names()}")
    try:
        return _SYSTEMS[name](**(parameters or {}))
    except TypeError as exc:
        raise ConfigurationError(text=f"Invalid parameters for system '{name}': {exc}") from exc


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States at the saved times, one row per time"""

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def rows(self) -> list[list[float]]:
        return [[float(t), *map(float, state)] for t, state in zip(self.times, self.states)]


def _step_count(T: float, dt: float) -> tuple[int, float]:
    if not dt > 0:
        raise InvalidInputError(text=f"The step size must be positive, got {dt}")
    if T < 0:
        raise InvalidInputError(text=f"The integration time must be nonnegative, got {T}")
    steps = math.ceil(T / dt - 1e-9)
    return steps, (T / steps if steps else 0.0)


def _rk4_step(vector_field: Field, x: np.ndarray, h: float) -> np.ndarray:
    k1 = vector_field(x)
    k2 = vector_field(x + h / 2 * k1)
    k3 = vector_field(x + h / 2 * k2)
    k4 = vector_field(x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_state(x: np.ndarray, time: float):
    norm = float(np.max(np.abs(x))) if np.all(np.isfinite(x)) else math.inf
    if norm > DIVERGENCE_LIMIT:
        raise DivergenceError(text="Integration diverged", time=time, state_norm=norm)


def _warn_if_stiff(system: DynamicalSystem, x: np.ndarray, h: float):
    jacobians = system.jacobian(np.atleast_2d(x))
    radius = float(np.abs(np.linalg.eigvals(jacobians)).max())
    if radius * h > RK4_STABILITY_LIMIT:
        logger.warning(f"Step {h:.3g} with spectral radius {radius:.4g} is outside the RK4 stability region")


def integrate(
    vector_field: Field, x0: np.ndarray, T: float, dt: float, stride: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 with n = ⌈T/dt⌉ equal steps of size T/n

    Args:
        vector_field: batch capable right-hand side
        x0: initial states of shape (..., d)
        T: final time
        dt: largest step size
        stride: save every stride-th state; only the final state when omitted

    Returns:
        The saved times and states, the states stacked along a new first axis

    Raises:
        DivergenceError: if a state becomes non-finite or exceeds the divergence limit
    """
    steps, h = _step_count(T, dt)
    x = np.array(x0, dtype=float)
    _check_state(x, 0.0)
    times, states = [0.0], [x]
    for step in range(1, steps + 1):
        x = _rk4_step(vector_field, x, h)
        _check_state(x, step * h)
        if stride and step % stride == 0:
            times.append(step * h)
            states.append(x)
    if not stride:
        times, states = [T], [x]
    return np.array(times), np.stack(states)


def flow(system: DynamicalSystem, x0: np.ndarray, T: float, dt: float = 1e-3) -> np.ndarray:
    """The time-T map S(T) applied to a batch of states"""
    x0 = np.asarray(x0, dtype=float)
    _warn_if_stiff(system, x0.reshape(-1, system.state_dim)[:1], _step_count(T, dt)[1])
    return integrate(system.vector_field, x0, T, dt)[1][-1]


def simulate(system: DynamicalSystem, x0, T: float, dt: float = 1e-3, stride: int = 1) -> Trajectory:
    """Trajectory from x₀ sampled every ``stride`` steps

    Example:
    >>> still = DynamicalSystem("still", 2, lambda x: np.zeros_like(x), lambda x: np.zeros((*x.shape, x.shape[-1])))
    >>> simulate(still, [1.0, 2.0], T=0.01, dt=1e-3).states.tolist()[-1]
    [1.0, 2.0]
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.state_dim,):
        raise InvalidInputError(text=f"Initial state of shape {x0.shape} for a system on ℝ^{system.state_dim}")
    _warn_if_stiff(system, x0, _step_count(T, dt)[1])
    times, states = integrate(system.vector_field, x0, T, dt, stride=stride)
    return Trajectory(times, states)


def time_T_derivatives(system: DynamicalSystem, points: np.ndarray, T: float, dt: float = 1e-3) -> np.ndarray:
    """D(S(T))(x) for a batch of states by integrating the variational equation Φ' = Df(x(t))Φ alongside the flow"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    count, d = points.shape

    def augmented(z: np.ndarray) -> np.ndarray:
        x, phi = z[:, :d], z[:, d:].reshape(-1, d, d)
        return np.concatenate([system.vector_field(x), (system.jacobian(x) @ phi).reshape(-1, d * d)], axis=1)

    start = np.concatenate([points, np.broadcast_to(np.eye(d).ravel(), (count, d * d))], axis=1)
    _warn_if_stiff(system, points[:1], _step_count(T, dt)[1])
    final = integrate(augmented, start, T, dt)[1][-1]
    return final[:, d:].reshape(count, d, d)


def time_T_derivative(system: DynamicalSystem, x, T: float, dt: float = 1e-3) -> np.ndarray:
    """D(S(T))(x) at a single state

    Example:
    >>> system = build_system("linear", {"matrix": [[0.0, 1.0], [-1.0, 0.0]]})
    >>> rotation = time_T_derivative(system, [0.3, 0.1], T=np.pi / 2)
    >>> bool(np.allclose(rotation, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-9))
    True
    """
    return time_T_derivatives(system, np.asarray(x, dtype=float)[None], T, dt)[0]


def jacobian_residual(system: DynamicalSystem, points: np.ndarray, step: float = 1e-6) -> float:
    """Largest relative deviation of the Jacobian from central differences of the vector field"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = system.state_dim
    offsets = step * np.eye(d)
    columns = [
        (system.vector_field(points + offset) - system.vector_field(points - offset)) / (2 * step) for offset in offsets
    ]
    finite_differences = np.stack(columns, axis=-1)
    analytic = system.jacobian(points)
    scale = max(1.0, float(np.abs(analytic).max()))
    return float(np.abs(analytic - finite_differences).max()) / scale


def initial_grid(system: DynamicalSystem, n_initial: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """The origin followed by n_initial − 1 Halton points of [−spread, spread]ᵈ"""
    if n_initial < 1:
        raise InvalidInputError(text=f"Need at least one initial condition, got {n_initial}")
    box = (2 * halton(n_initial - 1, system.state_dim, seed) - 1) * system.spread
    return np.concatenate([np.zeros((1, system.state_dim)), box])


def unstable_subspace(system: DynamicalSystem, equilibrium: np.ndarray, tolerance: float = 1e-9) -> np.ndarray:
    """Orthonormal columns spanning the unstable eigenspace of D_x f at an equilibrium

    Example:
    >>> saddle = build_system("linear", {"matrix": [[1.0, 0.0], [0.0, -1.0]]})
    >>> np.abs(unstable_subspace(saddle, np.zeros(2))).round(12).tolist()
    [[1.0], [0.0]]
    """
    eigenvalues, eigenvectors = np.linalg.eig(system.jacobian(np.asarray(equilibrium, dtype=float)[None])[0])
    unstable = eigenvectors[:, eigenvalues.real > tolerance]
    if unstable.shape[1] == 0:
        return np.zeros((system.state_dim, 0))
    # a complex pair spans the plane of its real and imaginary parts
    return orth(np.concatenate([unstable.real, unstable.imag], axis=1))


def unstable_manifold_seeds(
    system: DynamicalSystem, points: np.ndarray, offset: float, directions: int = 8, seed: int = DEFAULT_SEED
) -> np.ndarray:
    """States at distance ``offset`` from each unstable equilibrium along its unstable subspace

    A one-dimensional unstable subspace gets both directions ±v, higher dimensional ones ``directions`` quasi-uniform
    directions of their unit sphere.
    """
    seeds = [np.zeros((0, system.state_dim))]
    for point in np.atleast_2d(points):
        basis = unstable_subspace(system, point)
        if dim := basis.shape[1]:
            unit = sphere_directions(2 if dim == 1 else directions, dim, seed)
            seeds.append(point + offset * unit @ basis.T)
            logger.debug(f"Equilibrium {np.round(point, 6).tolist()} has a {dim}-dimensional unstable subspace")
    return np.concatenate(seeds)


def sample_attractor(
    system: DynamicalSystem,
    n_initial: int = 16,
    t_transient: float = 200.0,
    t_sample: float = 800.0,
    dt: float = 1e-3,
    stride: int = 10,
    seed: int = DEFAULT_SEED,
    manifold_offset: float | None = 1e-6,
    manifold_directions: int = 8,
) -> PointCloud:
    """States of trajectories from :func:`initial_grid` after the transient, every ``stride`` steps

    Trajectories settle onto stable equilibria and miss the unstable manifolds that connect them, which belong to the
    attractor as well. Unless ``manifold_offset`` is None, Newton's method locates the equilibria reachable from the
    origin and from the initial and settled states. Orbits started ``manifold_offset`` away from each unstable one
    along its unstable subspace are then added over the whole time t_transient + t_sample.

    Args:
        system: the system
        n_initial: size of the initial grid
        t_transient: time discarded before sampling the grid trajectories
        t_sample: sampled time of the grid trajectories
        dt: step size
        stride: save every stride-th step
        seed: seed of the initial grid and of the manifold directions
        manifold_offset: distance of the manifold seeds from their equilibrium, None to sample the grid only
        manifold_directions: seeds per equilibrium with an unstable subspace of dimension two or more

    Returns:
        The grid samples followed by the unstable manifold samples

    Raises:
        InvalidInputError: if a duration or the stride is not positive
        DivergenceError: if a trajectory is unbounded
    """
    if t_transient < 0 or t_sample <= 0 or stride < 1:
        raise InvalidInputError(text="Sampling needs t_transient >= 0, t_sample > 0 and stride >= 1")
    start = initial_grid(system, n_initial, seed)
    logger.info(f"Sampling the attractor of '{system.name}' from {n_initial} initial conditions")
    settled = flow(system, start, t_transient, dt) if t_transient else start
    _, states = integrate(system.vector_field, settled, t_sample, dt, stride=stride)
    samples = [states.reshape(-1, system.state_dim)]
    if manifold_offset is not None:
        guesses = np.concatenate([np.zeros((1, system.state_dim)), start, settled])
        seeds = unstable_manifold_seeds(system, equilibria(system, guesses), manifold_offset, manifold_directions, seed)
        if len(seeds):
            logger.info(f"Following the unstable manifolds from {len(seeds)} seeds")
            _, orbits = integrate(system.vector_field, seeds, t_transient + t_sample, dt, stride=stride)
            samples.append(orbits.reshape(-1, system.state_dim))
    cloud = PointCloud(np.concatenate(samples))
    logger.info(f"Attractor sample of {len(cloud)} points")
    return cloud


def equilibria(
    system: DynamicalSystem, guesses: np.ndarray, tolerance: float = 1e-12, max_iterations: int = 50
) -> np.ndarray:
    """Distinct zeros of the vector field found by Newton's method from the guesses, sorted lexicographically"""
    found: list[np.ndarray] = []
    for guess in np.atleast_2d(np.asarray(guesses, dtype=float)):
        x = guess.copy()
        for _ in range(max_iterations):
            value = system.vector_field(x[None])[0]
            if np.linalg.norm(value) <= tolerance:
                break
            try:
                x = x - np.linalg.solve(system.jacobian(x[None])[0], value)
            except np.linalg.LinAlgError:
                break
        if np.linalg.norm(system.vector_field(x[None])[0]) <= max(tolerance, 1e-10) and not any(
            np.linalg.norm(x - other) < 1e-6 for other in found
        ):
            found.append(x)
    if not found:
        return np.zeros((0, system.state_dim))
    result = np.array(found)
    return result[np.lexsort(result.T[::-1])]


def negative_invariance_gap(system: DynamicalSystem, cloud: PointCloud, T: float, dt: float = 1e-3) -> float:
    """Hausdorff semi-distance from K to S(T)K; small values are consistent with S(T)K ⊇ K"""
    image = PointCloud(flow(system, cloud.points, T, dt))
    return hausdorff_semidist(cloud, image, system.nd)


# the submodules register their systems
import dimbound.systems.chafee_infante  # noqa: E402
import dimbound.systems.damped  # noqa: E402
import dimbound.systems.linear  # noqa: E402
